#include "wico/graph.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace wico {

namespace {

void accumulate(Tensor& dst, const Tensor& src) {
    if (dst.size() == 0 && dst.rank() == src.rank()) {
        dst = src;
        return;
    }
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

NodeId Graph::emit(std::vector<NodeId> inputs, ForwardFn fwd, BackwardFn bwd,
                   std::string name) {
    Node n;
    n.inputs = std::move(inputs);
    n.forward = std::move(fwd);
    n.backward = std::move(bwd);
    n.name = std::move(name);
    n.value = n.forward(input_values(n));
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
}

std::vector<const Tensor*> Graph::input_values(const Node& n) const {
    std::vector<const Tensor*> vals;
    vals.reserve(n.inputs.size());
    for (NodeId id : n.inputs) vals.push_back(&nodes_[id].value);
    return vals;
}

NodeId Graph::input(Tensor value, bool trainable) {
    Node n;
    n.value = std::move(value);
    n.trainable = trainable;
    n.name = "leaf";
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
}

Tensor& Graph::leaf_value(NodeId id) {
    if (!is_leaf(id)) throw Error("leaf_value: node is not a leaf");
    return nodes_[id].value;
}

std::vector<NodeId> Graph::trainable() const {
    std::vector<NodeId> out;
    for (NodeId i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].trainable) out.push_back(i);
    }
    return out;
}

void Graph::recompute() {
    for (Node& n : nodes_) {
        if (n.forward) n.value = n.forward(input_values(n));
    }
}

void Graph::backward(NodeId root) {
    if (nodes_[root].value.size() != 1) {
        throw DimError("backward: root must be scalar");
    }
    for (Node& n : nodes_) n.grad = Tensor::zeros(n.value.shape(), n.value.dtype());
    nodes_[root].grad[0] = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.backward) continue;
        std::vector<Tensor*> gins;
        gins.reserve(n.inputs.size());
        for (NodeId id : n.inputs) gins.push_back(&nodes_[id].grad);
        n.backward(input_values(n), n.value, n.grad, gins);
    }
}

NodeId Graph::custom(std::vector<NodeId> inputs, ForwardFn fwd, BackwardFn bwd,
                     std::string name) {
    return emit(std::move(inputs), std::move(fwd), std::move(bwd), std::move(name));
}

NodeId Graph::matmul(NodeId a, NodeId b) {
    return emit(
        {a, b},
        [](const std::vector<const Tensor*>& in) { return wico::matmul(*in[0], *in[1]); },
        [](const std::vector<const Tensor*>& in, const Tensor&, const Tensor& g,
           std::vector<Tensor*>& gin) {
            accumulate(*gin[0], wico::matmul(g, wico::transpose2d(*in[1])));
            accumulate(*gin[1], wico::matmul(wico::transpose2d(*in[0]), g));
        },
        "matmul");
}

NodeId Graph::softmax_rows(NodeId a) {
    return emit(
        {a},
        [](const std::vector<const Tensor*>& in) { return wico::softmax_rows(*in[0]); },
        [](const std::vector<const Tensor*>&, const Tensor& y, const Tensor& g,
           std::vector<Tensor*>& gin) {
            const std::size_t m = y.extent(0), q = y.extent(1);
            Tensor dx({m, q}, y.dtype());
            for (std::size_t i = 0; i < m; ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < q; ++j) dot += g.at2(i, j) * y.at2(i, j);
                for (std::size_t j = 0; j < q; ++j) {
                    dx.at2(i, j) = y.at2(i, j) * (g.at2(i, j) - dot);
                }
            }
            accumulate(*gin[0], dx);
        },
        "softmax_rows");
}

NodeId Graph::layer_norm(NodeId a, NodeId gain, NodeId bias, double eps) {
    return emit(
        {a, gain, bias},
        [eps](const std::vector<const Tensor*>& in) {
            return wico::layer_norm(*in[0], *in[1], *in[2], eps);
        },
        [eps](const std::vector<const Tensor*>& in, const Tensor&, const Tensor& g,
              std::vector<Tensor*>& gin) {
            const Tensor& x = *in[0];
            const Tensor& gamma = *in[1];
            const std::size_t m = x.extent(0), d = x.extent(1);
            Tensor dx({m, d}, x.dtype());
            Tensor dgamma(gamma.shape(), gamma.dtype());
            Tensor dbeta(gamma.shape(), gamma.dtype());
            for (std::size_t i = 0; i < m; ++i) {
                double mean = 0.0;
                for (std::size_t j = 0; j < d; ++j) mean += x.at2(i, j);
                mean /= static_cast<double>(d);
                double var = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    const double c = x.at2(i, j) - mean;
                    var += c * c;
                }
                var /= static_cast<double>(d);
                const double inv = 1.0 / std::sqrt(var + eps);
                double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
                std::vector<double> xhat(d), dxhat(d);
                for (std::size_t j = 0; j < d; ++j) {
                    xhat[j] = (x.at2(i, j) - mean) * inv;
                    dxhat[j] = g.at2(i, j) * gamma[j];
                    mean_dxhat += dxhat[j];
                    mean_dxhat_xhat += dxhat[j] * xhat[j];
                    dgamma[j] += g.at2(i, j) * xhat[j];
                    dbeta[j] += g.at2(i, j);
                }
                mean_dxhat /= static_cast<double>(d);
                mean_dxhat_xhat /= static_cast<double>(d);
                for (std::size_t j = 0; j < d; ++j) {
                    dx.at2(i, j) =
                        inv * (dxhat[j] - mean_dxhat - xhat[j] * mean_dxhat_xhat);
                }
            }
            accumulate(*gin[0], dx);
            accumulate(*gin[1], dgamma);
            accumulate(*gin[2], dbeta);
        },
        "layer_norm");
}

NodeId Graph::interp_axis0(NodeId a, std::size_t target) {
    return emit(
        {a},
        [target](const std::vector<const Tensor*>& in) {
            return wico::interp_axis0(*in[0], target);
        },
        [target](const std::vector<const Tensor*>& in, const Tensor&, const Tensor& g,
                 std::vector<Tensor*>& gin) {
            const Tensor& x = *in[0];
            const std::size_t s = x.extent(0);
            const std::size_t row = x.size() / s;
            Tensor dx(x.shape(), x.dtype());
            for (std::size_t i = 0; i < target; ++i) {
                double pos = 0.0;
                if (target > 1 && s > 1) {
                    pos = static_cast<double>(i) * static_cast<double>(s - 1) /
                          static_cast<double>(target - 1);
                }
                std::size_t i0 = static_cast<std::size_t>(pos);
                if (i0 >= s - 1 && s > 1) i0 = s - 2;
                const double frac = (s > 1) ? pos - static_cast<double>(i0) : 0.0;
                const std::size_t i1 = (s > 1) ? i0 + 1 : i0;
                for (std::size_t j = 0; j < row; ++j) {
                    dx[i0 * row + j] += (1.0 - frac) * g[i * row + j];
                    if (frac != 0.0) dx[i1 * row + j] += frac * g[i * row + j];
                }
            }
            accumulate(*gin[0], dx);
        },
        "interp_axis0");
}

NodeId Graph::reshape(NodeId a, std::vector<std::size_t> new_shape) {
    return emit(
        {a},
        [new_shape](const std::vector<const Tensor*>& in) {
            return wico::reshape(*in[0], new_shape);
        },
        [](const std::vector<const Tensor*>& in, const Tensor&, const Tensor& g,
           std::vector<Tensor*>& gin) {
            accumulate(*gin[0], wico::reshape(g, in[0]->shape()));
        },
        "reshape");
}

NodeId Graph::transpose2d(NodeId a) {
    return emit(
        {a},
        [](const std::vector<const Tensor*>& in) { return wico::transpose2d(*in[0]); },
        [](const std::vector<const Tensor*>&, const Tensor&, const Tensor& g,
           std::vector<Tensor*>& gin) {
            accumulate(*gin[0], wico::transpose2d(g));
        },
        "transpose2d");
}

NodeId Graph::gelu(NodeId a) {
    return emit(
        {a},
        [](const std::vector<const Tensor*>& in) { return wico::gelu(*in[0]); },
        [](const std::vector<const Tensor*>& in, const Tensor&, const Tensor& g,
           std::vector<Tensor*>& gin) {
            const Tensor& x = *in[0];
            Tensor dx(x.shape(), x.dtype());
            for (std::size_t i = 0; i < x.size(); ++i) {
                dx[i] = g[i] * gelu_grad_scalar(x[i]);
            }
            accumulate(*gin[0], dx);
        },
        "gelu");
}

NodeId Graph::add(NodeId a, NodeId b) {
    return emit(
        {a, b},
        [](const std::vector<const Tensor*>& in) { return wico::add(*in[0], *in[1]); },
        [](const std::vector<const Tensor*>&, const Tensor&, const Tensor& g,
           std::vector<Tensor*>& gin) {
            accumulate(*gin[0], g);
            accumulate(*gin[1], g);
        },
        "add");
}

NodeId Graph::mul(NodeId a, NodeId b) {
    return emit(
        {a, b},
        [](const std::vector<const Tensor*>& in) { return wico::mul(*in[0], *in[1]); },
        [](const std::vector<const Tensor*>& in, const Tensor&, const Tensor& g,
           std::vector<Tensor*>& gin) {
            accumulate(*gin[0], wico::mul(g, *in[1]));
            accumulate(*gin[1], wico::mul(g, *in[0]));
        },
        "mul");
}

NodeId Graph::scale(NodeId a, double s) {
    return emit(
        {a},
        [s](const std::vector<const Tensor*>& in) { return wico::scale(*in[0], s); },
        [s](const std::vector<const Tensor*>&, const Tensor&, const Tensor& g,
            std::vector<Tensor*>& gin) {
            accumulate(*gin[0], wico::scale(g, s));
        },
        "scale");
}

NodeId Graph::add_rowvec(NodeId a, NodeId b) {
    return emit(
        {a, b},
        [](const std::vector<const Tensor*>& in) {
            return wico::add_rowvec(*in[0], *in[1]);
        },
        [](const std::vector<const Tensor*>& in, const Tensor&, const Tensor& g,
           std::vector<Tensor*>& gin) {
            accumulate(*gin[0], g);
            const std::size_t m = g.extent(0), d = g.extent(1);
            Tensor db(in[1]->shape(), in[1]->dtype());
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < d; ++j) db[j] += g.at2(i, j);
            }
            accumulate(*gin[1], db);
        },
        "add_rowvec");
}

NodeId Graph::sum(NodeId a) {
    return emit(
        {a},
        [](const std::vector<const Tensor*>& in) { return wico::sum(*in[0]); },
        [](const std::vector<const Tensor*>& in, const Tensor&, const Tensor& g,
           std::vector<Tensor*>& gin) {
            accumulate(*gin[0], Tensor::full(in[0]->shape(), g[0], in[0]->dtype()));
        },
        "sum");
}

NodeId Graph::gather(NodeId a, std::vector<std::size_t> index_map,
                     std::vector<std::size_t> out_shape) {
    return emit(
        {a},
        [index_map, out_shape](const std::vector<const Tensor*>& in) {
            return wico::gather(*in[0], index_map, out_shape);
        },
        [index_map](const std::vector<const Tensor*>& in, const Tensor&,
                    const Tensor& g, std::vector<Tensor*>& gin) {
            Tensor dx(in[0]->shape(), in[0]->dtype());
            for (std::size_t i = 0; i < index_map.size(); ++i) {
                dx[index_map[i]] += g[i];
            }
            accumulate(*gin[0], dx);
        },
        "gather");
}

NodeId Graph::slice_cols(NodeId a, std::size_t start, std::size_t count) {
    return emit(
        {a},
        [start, count](const std::vector<const Tensor*>& in) {
            return wico::slice_cols(*in[0], start, count);
        },
        [start, count](const std::vector<const Tensor*>& in, const Tensor&,
                       const Tensor& g, std::vector<Tensor*>& gin) {
            Tensor dx(in[0]->shape(), in[0]->dtype());
            const std::size_t m = g.extent(0);
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < count; ++j) {
                    dx.at2(i, start + j) = g.at2(i, j);
                }
            }
            accumulate(*gin[0], dx);
        },
        "slice_cols");
}

NodeId Graph::concat_cols(const std::vector<NodeId>& parts) {
    return emit(
        parts,
        [](const std::vector<const Tensor*>& in) {
            std::vector<Tensor> vals;
            vals.reserve(in.size());
            for (const Tensor* t : in) vals.push_back(*t);
            return wico::concat_cols(vals);
        },
        [](const std::vector<const Tensor*>& in, const Tensor&, const Tensor& g,
           std::vector<Tensor*>& gin) {
            std::size_t off = 0;
            for (std::size_t p = 0; p < in.size(); ++p) {
                const std::size_t cols = in[p]->extent(1);
                accumulate(*gin[p], wico::slice_cols(g, off, cols));
                off += cols;
            }
        },
        "concat_cols");
}

NodeId Graph::mse(NodeId a, NodeId b) {
    const std::size_t n = value(a).size();
    NodeId diff = add(a, scale(b, -1.0));
    NodeId sq = mul(diff, diff);
    return scale(sum(sq), 1.0 / static_cast<double>(n));
}

double grad_check(Graph& g, NodeId loss, double eps) {
    for (NodeId id : g.trainable()) {
        if (g.value(id).dtype() != DType::f64) {
            throw PrecisionError("grad_check: graph must be float64");
        }
    }
    if (g.value(loss).dtype() != DType::f64) {
        throw PrecisionError("grad_check: graph must be float64");
    }
    g.recompute();
    g.backward(loss);
    std::vector<Tensor> analytic;
    const std::vector<NodeId> params = g.trainable();
    analytic.reserve(params.size());
    for (NodeId id : params) analytic.push_back(g.grad(id));

    double worst = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& leaf = g.leaf_value(params[p]);
        for (std::size_t i = 0; i < leaf.size(); ++i) {
            const double saved = leaf[i];
            leaf[i] = saved + eps;
            g.recompute();
            const double fp = g.value(loss)[0];
            leaf[i] = saved - eps;
            g.recompute();
            const double fm = g.value(loss)[0];
            leaf[i] = saved;
            const double numeric = (fp - fm) / (2.0 * eps);
            const double a = analytic[p][i];
            const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
            worst = std::max(worst, std::fabs(a - numeric) / denom);
        }
    }
    g.recompute();
    return worst;
}

}  // namespace wico
