#include "wico/projector.hpp"

#include <cmath>

namespace wico {

TokenGrid TokenGrid::from_flat(const Tensor& tokens, std::size_t h, std::size_t w) {
    if (tokens.rank() != 2 || tokens.extent(0) != h * w) {
        throw DimError("TokenGrid: expected [" + std::to_string(h * w) +
                       " x d_v] tokens, got " + tokens.shape_str());
    }
    TokenGrid g;
    g.h = h;
    g.w = w;
    g.d_v = tokens.extent(1);
    g.data = reshape(tokens, {h, w, g.d_v});
    return g;
}

TokenGrid TokenGrid::from_tensor(const Tensor& t) {
    if (t.rank() != 3) {
        throw DimError("TokenGrid: expected rank-3 tensor, got " + t.shape_str());
    }
    TokenGrid g;
    g.h = t.extent(0);
    g.w = t.extent(1);
    g.d_v = t.extent(2);
    g.data = t;
    return g;
}

Tensor TokenGrid::flat() const { return reshape(data, {h * w, d_v}); }

WindowSpec compute_window_spec(std::size_t h, std::size_t w, std::size_t h_out,
                               std::size_t w_out) {
    if (h < 1 || w < 1) throw RangeError("window spec: grid extents must be >= 1");
    if (h_out < 1 || h_out > h || w_out < 1 || w_out > w) {
        throw RangeError("window spec: output extents must satisfy 1 <= h' <= h, "
                         "1 <= w' <= w (got h'=" + std::to_string(h_out) +
                         ", w'=" + std::to_string(w_out) + " for " +
                         std::to_string(h) + "x" + std::to_string(w) + ")");
    }
    WindowSpec s;
    s.h = h;
    s.w = w;
    s.h_out = h_out;
    s.w_out = w_out;
    s.s_h = h / h_out;
    s.s_w = w / w_out;
    s.w_h = h - (h_out - 1) * s.s_h;
    s.w_w = w - (w_out - 1) * s.s_w;
    s.overlapping = (s.w_h > s.s_h) || (s.w_w > s.s_w);
    return s;
}

std::vector<std::size_t> window_index_map(const WindowSpec& spec, std::size_t d_v) {
    std::vector<std::size_t> map;
    map.reserve(spec.k() * spec.d_t(d_v));
    for (std::size_t i = 0; i < spec.h_out; ++i) {
        for (std::size_t j = 0; j < spec.w_out; ++j) {
            const std::size_t r0 = i * spec.s_h;
            const std::size_t c0 = j * spec.s_w;
            for (std::size_t wr = 0; wr < spec.w_h; ++wr) {
                for (std::size_t wc = 0; wc < spec.w_w; ++wc) {
                    const std::size_t tok = (r0 + wr) * spec.w + (c0 + wc);
                    for (std::size_t ch = 0; ch < d_v; ++ch) {
                        map.push_back(tok * d_v + ch);
                    }
                }
            }
        }
    }
    return map;
}

Tensor window_concat(const TokenGrid& grid, const WindowSpec& spec) {
    if (spec.h != grid.h || spec.w != grid.w) {
        throw DimError("window_concat: spec built for " + std::to_string(spec.h) +
                       "x" + std::to_string(spec.w) + ", grid is " +
                       std::to_string(grid.h) + "x" + std::to_string(grid.w));
    }
    const std::vector<std::size_t> map = window_index_map(spec, grid.d_v);
    return gather(grid.flat(), map,
                  {spec.h_out, spec.w_out, spec.d_t(grid.d_v)});
}

TokenGrid window_scatter(const Tensor& concatenated, const WindowSpec& spec,
                         std::size_t d_v) {
    if (spec.overlapping) {
        throw RangeError("window_scatter: spec has overlapping windows");
    }
    if (concatenated.size() != spec.k() * spec.d_t(d_v)) {
        throw DimError("window_scatter: element count mismatch");
    }
    Tensor flat({spec.h * spec.w, d_v}, concatenated.dtype());
    const std::vector<std::size_t> map = window_index_map(spec, d_v);
    for (std::size_t i = 0; i < map.size(); ++i) flat[map[i]] = concatenated[i];
    return TokenGrid::from_flat(flat, spec.h, spec.w);
}

MlpParams MlpParams::init(std::size_t d_in, std::size_t d_hidden, std::size_t d_out,
                          std::mt19937_64& rng, DType dtype) {
    auto bound = [](std::size_t fi, std::size_t fo) {
        return std::sqrt(6.0 / static_cast<double>(fi + fo));
    };
    MlpParams p;
    p.w1 = Tensor::uniform({d_in, d_hidden}, bound(d_in, d_hidden), rng, dtype);
    p.b1 = Tensor::zeros({d_hidden}, dtype);
    p.w2 = Tensor::uniform({d_hidden, d_out}, bound(d_hidden, d_out), rng, dtype);
    p.b2 = Tensor::zeros({d_out}, dtype);
    return p;
}

MlpParams MlpParams::identity(std::size_t d, DType dtype) {
    MlpParams p;
    p.w1 = Tensor::eye(d, dtype);
    p.b1 = Tensor::zeros({d}, dtype);
    p.w2 = Tensor::eye(d, dtype);
    p.b2 = Tensor::zeros({d}, dtype);
    p.linear_mode = true;
    return p;
}

MlpNodes add_mlp_params(Graph& g, const MlpParams& p, bool trainable) {
    MlpNodes n;
    n.w1 = g.input(p.w1, trainable);
    n.b1 = g.input(p.b1, trainable);
    n.w2 = g.input(p.w2, trainable);
    n.b2 = g.input(p.b2, trainable);
    n.linear_mode = p.linear_mode;
    return n;
}

NodeId build_mlp(Graph& g, NodeId x, const MlpNodes& mlp) {
    NodeId h = g.add_rowvec(g.matmul(x, mlp.w1), mlp.b1);
    if (!mlp.linear_mode) h = g.gelu(h);
    return g.add_rowvec(g.matmul(h, mlp.w2), mlp.b2);
}

MlpParams read_mlp(const Graph& g, const MlpNodes& nodes, bool linear_mode) {
    MlpParams p;
    p.w1 = g.value(nodes.w1);
    p.b1 = g.value(nodes.b1);
    p.w2 = g.value(nodes.w2);
    p.b2 = g.value(nodes.b2);
    p.linear_mode = linear_mode;
    return p;
}

Tensor project(const Tensor& windowed, const MlpParams& mlp) {
    if (windowed.rank() != 2 || windowed.extent(1) != mlp.d_in()) {
        throw DimError("project: input " + windowed.shape_str() +
                       " does not match MLP input dim " +
                       std::to_string(mlp.d_in()));
    }
    Graph g;
    NodeId x = g.input(windowed);
    NodeId out = build_mlp(g, x, add_mlp_params(g, mlp));
    return g.value(out);
}

NodeId build_wico(Graph& g, NodeId v0, const std::vector<BlockNodes>& blocks,
                  const WindowSpec& spec, std::size_t d_v, const MlpNodes& mlp) {
    const Tensor& v = g.value(v0);
    if (v.rank() != 2 || v.extent(0) != spec.h * spec.w || v.extent(1) != d_v) {
        throw DimError("wico: tokens " + v.shape_str() + " inconsistent with " +
                       std::to_string(spec.h) + "x" + std::to_string(spec.w) +
                       " grid of d_v=" + std::to_string(d_v));
    }
    NodeId x = v0;
    for (const BlockNodes& b : blocks) x = build_block(g, x, b);
    NodeId windows =
        g.gather(x, window_index_map(spec, d_v), {spec.k(), spec.d_t(d_v)});
    return build_mlp(g, windows, mlp);
}

Tensor wico_forward(const Tensor& v0, const std::vector<AttentionBlockParams>& blocks,
                    const WindowSpec& spec, const MlpParams& mlp) {
    Graph g;
    NodeId in = g.input(v0);
    std::vector<BlockNodes> bn;
    bn.reserve(blocks.size());
    for (const AttentionBlockParams& b : blocks) bn.push_back(add_block_params(g, b));
    NodeId out = build_wico(g, in, bn, spec, v0.extent(1), add_mlp_params(g, mlp));
    return g.value(out);
}

}  // namespace wico
