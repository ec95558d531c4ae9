#include "wico/encoder.hpp"

#include <cmath>

#include "wico/projector.hpp"

namespace wico {

namespace {

constexpr double kLnEps = 1e-5;

Tensor scaled_uniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                      DType dtype) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    return Tensor::uniform({rows, cols}, bound, rng, dtype);
}

}  // namespace

AttentionBlockParams AttentionBlockParams::init(std::size_t d_v, std::size_t heads,
                                                std::mt19937_64& rng, DType dtype) {
    if (heads < 1 || d_v % heads != 0) {
        throw DimError("attention block: d_v=" + std::to_string(d_v) +
                       " not divisible by heads=" + std::to_string(heads));
    }
    AttentionBlockParams p;
    p.w_q = scaled_uniform(d_v, d_v, rng, dtype);
    p.w_k = scaled_uniform(d_v, d_v, rng, dtype);
    p.w_v = scaled_uniform(d_v, d_v, rng, dtype);
    p.w_o = scaled_uniform(d_v, d_v, rng, dtype);
    p.mlp_w1 = scaled_uniform(d_v, 4 * d_v, rng, dtype);
    p.mlp_b1 = Tensor::zeros({4 * d_v}, dtype);
    p.mlp_w2 = scaled_uniform(4 * d_v, d_v, rng, dtype);
    p.mlp_b2 = Tensor::zeros({d_v}, dtype);
    p.ln1_gain = Tensor::full({d_v}, 1.0, dtype);
    p.ln1_bias = Tensor::zeros({d_v}, dtype);
    p.ln2_gain = Tensor::full({d_v}, 1.0, dtype);
    p.ln2_bias = Tensor::zeros({d_v}, dtype);
    p.heads = heads;
    return p;
}

void AttentionBlockParams::validate(std::size_t d) const {
    if (w_q.shape() != std::vector<std::size_t>{d, d}) {
        throw DimError("attention block: weights sized " + w_q.shape_str() +
                       " do not match d_v=" + std::to_string(d));
    }
    if (heads < 1 || d % heads != 0) {
        throw DimError("attention block: d_v not divisible by head count");
    }
}

BlockNodes add_block_params(Graph& g, const AttentionBlockParams& p, bool trainable) {
    BlockNodes n;
    n.w_q = g.input(p.w_q, trainable);
    n.w_k = g.input(p.w_k, trainable);
    n.w_v = g.input(p.w_v, trainable);
    n.w_o = g.input(p.w_o, trainable);
    n.mlp_w1 = g.input(p.mlp_w1, trainable);
    n.mlp_b1 = g.input(p.mlp_b1, trainable);
    n.mlp_w2 = g.input(p.mlp_w2, trainable);
    n.mlp_b2 = g.input(p.mlp_b2, trainable);
    n.ln1_gain = g.input(p.ln1_gain, trainable);
    n.ln1_bias = g.input(p.ln1_bias, trainable);
    n.ln2_gain = g.input(p.ln2_gain, trainable);
    n.ln2_bias = g.input(p.ln2_bias, trainable);
    n.heads = p.heads;
    return n;
}

NodeId build_block(Graph& g, NodeId x, const BlockNodes& b) {
    const std::size_t d = g.value(x).extent(1);
    if (d % b.heads != 0) {
        throw DimError("attention block: d_v not divisible by head count");
    }
    const std::size_t dh = d / b.heads;
    const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));

    NodeId x1 = g.layer_norm(x, b.ln1_gain, b.ln1_bias, kLnEps);
    NodeId q = g.matmul(x1, b.w_q);
    NodeId k = g.matmul(x1, b.w_k);
    NodeId v = g.matmul(x1, b.w_v);
    std::vector<NodeId> head_outs;
    head_outs.reserve(b.heads);
    for (std::size_t h = 0; h < b.heads; ++h) {
        NodeId qh = g.slice_cols(q, h * dh, dh);
        NodeId kh = g.slice_cols(k, h * dh, dh);
        NodeId vh = g.slice_cols(v, h * dh, dh);
        NodeId scores = g.scale(g.matmul(qh, g.transpose2d(kh)), att_scale);
        NodeId weights = g.softmax_rows(scores);
        head_outs.push_back(g.matmul(weights, vh));
    }
    NodeId attn = g.matmul(b.heads == 1 ? head_outs[0] : g.concat_cols(head_outs),
                           b.w_o);
    NodeId x2 = g.add(x, attn);
    NodeId x3 = g.layer_norm(x2, b.ln2_gain, b.ln2_bias, kLnEps);
    NodeId hidden = g.gelu(g.add_rowvec(g.matmul(x3, b.mlp_w1), b.mlp_b1));
    NodeId mlp_out = g.add_rowvec(g.matmul(hidden, b.mlp_w2), b.mlp_b2);
    return g.add(x2, mlp_out);
}

AttentionBlockParams read_block(const Graph& g, const BlockNodes& n) {
    AttentionBlockParams p;
    p.w_q = g.value(n.w_q);
    p.w_k = g.value(n.w_k);
    p.w_v = g.value(n.w_v);
    p.w_o = g.value(n.w_o);
    p.mlp_w1 = g.value(n.mlp_w1);
    p.mlp_b1 = g.value(n.mlp_b1);
    p.mlp_w2 = g.value(n.mlp_w2);
    p.mlp_b2 = g.value(n.mlp_b2);
    p.ln1_gain = g.value(n.ln1_gain);
    p.ln1_bias = g.value(n.ln1_bias);
    p.ln2_gain = g.value(n.ln2_gain);
    p.ln2_bias = g.value(n.ln2_bias);
    p.heads = n.heads;
    return p;
}

Tensor adjust_tokens(const Tensor& v0,
                     const std::vector<AttentionBlockParams>& blocks) {
    if (v0.rank() != 2 || v0.extent(0) < 1) {
        throw DimError("adjust_tokens: expected [n x d_v] tokens, got " +
                       v0.shape_str());
    }
    if (blocks.empty()) return v0;
    const std::size_t d = v0.extent(1);
    Graph g;
    NodeId x = g.input(v0);
    for (const AttentionBlockParams& b : blocks) {
        b.validate(d);
        x = build_block(g, x, add_block_params(g, b));
    }
    return g.value(x);
}

std::vector<Tensor> attention_matrices(const Tensor& x,
                                       const AttentionBlockParams& block) {
    block.validate(x.extent(1));
    const std::size_t d = x.extent(1);
    const std::size_t dh = d / block.heads;
    Tensor x1 = layer_norm(x, block.ln1_gain, block.ln1_bias, kLnEps);
    Tensor q = matmul(x1, block.w_q);
    Tensor k = matmul(x1, block.w_k);
    std::vector<Tensor> out;
    out.reserve(block.heads);
    for (std::size_t h = 0; h < block.heads; ++h) {
        Tensor qh = slice_cols(q, h * dh, dh);
        Tensor kh = slice_cols(k, h * dh, dh);
        Tensor scores =
            scale(matmul(qh, transpose2d(kh)), 1.0 / std::sqrt(static_cast<double>(dh)));
        out.push_back(softmax_rows(scores));
    }
    return out;
}

namespace {

// Mean squared difference between 4-neighbor cells of the channel-mean map,
// built from graph primitives so it can serve as a training penalty.
NodeId build_smoothness_penalty(Graph& g, NodeId tokens, std::size_t h,
                                std::size_t w, std::size_t d_v) {
    Tensor avg({d_v, 1}, std::vector<double>(d_v, 1.0 / static_cast<double>(d_v)));
    NodeId mean_map = g.matmul(tokens, g.input(avg));  // [n, 1]
    std::vector<std::size_t> a_idx, b_idx;
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c + 1 < w; ++c) {
            a_idx.push_back(r * w + c);
            b_idx.push_back(r * w + c + 1);
        }
    }
    for (std::size_t r = 0; r + 1 < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            a_idx.push_back(r * w + c);
            b_idx.push_back((r + 1) * w + c);
        }
    }
    if (a_idx.empty()) return g.input(Tensor::zeros({}));
    NodeId left = g.gather(mean_map, a_idx, {a_idx.size()});
    NodeId right = g.gather(mean_map, b_idx, {b_idx.size()});
    NodeId diff = g.add(left, g.scale(right, -1.0));
    return g.scale(g.sum(g.mul(diff, diff)),
                   1.0 / static_cast<double>(a_idx.size()));
}

}  // namespace

FitResult fit_adjuster(const Tensor& v0, const WindowSpec& spec,
                       FitObjective objective, const FitOptions& opts) {
    if (opts.lr <= 0.0) throw RangeError("fit_adjuster: lr must be > 0");
    if (v0.rank() != 2 || v0.extent(0) != spec.h * spec.w) {
        throw DimError("fit_adjuster: tokens " + v0.shape_str() +
                       " inconsistent with spec grid");
    }
    const std::size_t d_v = v0.extent(1);
    std::mt19937_64 rng(opts.seed);

    std::vector<AttentionBlockParams> init_blocks;
    for (std::size_t i = 0; i < opts.k_v; ++i) {
        init_blocks.push_back(
            AttentionBlockParams::init(d_v, opts.heads, rng, v0.dtype()));
    }
    const std::size_t d_t = spec.d_t(d_v);
    MlpParams init_mlp =
        MlpParams::init(d_t, d_t, d_t, rng, v0.dtype());

    Graph g;
    NodeId in = g.input(v0);
    std::vector<BlockNodes> block_nodes;
    for (const AttentionBlockParams& b : init_blocks) {
        block_nodes.push_back(add_block_params(g, b, /*trainable=*/true));
    }
    const bool through_projector =
        objective == FitObjective::ReconstructThroughProjector;
    MlpNodes mlp_nodes{};
    NodeId loss;
    NodeId adjusted = in;
    for (const BlockNodes& b : block_nodes) adjusted = build_block(g, adjusted, b);
    if (through_projector) {
        mlp_nodes = add_mlp_params(g, init_mlp, /*trainable=*/true);
        NodeId windows = g.gather(adjusted, window_index_map(spec, d_v),
                                  {spec.k(), d_t});
        NodeId projected = build_mlp(g, windows, mlp_nodes);
        // Target: window grouping of the raw tokens, held fixed.
        Tensor target = gather(v0, window_index_map(spec, d_v), {spec.k(), d_t});
        loss = g.mse(projected, g.input(target));
    } else {
        loss = g.mse(adjusted, in);
    }
    if (opts.smoothness_weight > 0.0) {
        NodeId penalty = build_smoothness_penalty(g, adjusted, spec.h, spec.w, d_v);
        loss = g.add(loss, g.scale(penalty, opts.smoothness_weight));
    }

    FitResult result;
    result.trace.reserve(opts.steps);
    const std::vector<NodeId> params = g.trainable();
    for (std::size_t step = 0; step < opts.steps; ++step) {
        g.recompute();
        const double l = g.value(loss)[0];
        if (std::isnan(l)) {
            throw DivergenceError("fit_adjuster: NaN loss at step " +
                                  std::to_string(step), step);
        }
        result.trace.push_back(l);
        g.backward(loss);
        for (NodeId p : params) {
            Tensor& value = g.leaf_value(p);
            const Tensor& grad = g.grad(p);
            for (std::size_t i = 0; i < value.size(); ++i) {
                value[i] -= opts.lr * grad[i];
            }
            value.quantize();
        }
    }
    g.recompute();

    for (const BlockNodes& b : block_nodes) result.blocks.push_back(read_block(g, b));
    if (through_projector) {
        result.mlp_w1 = g.value(mlp_nodes.w1);
        result.mlp_b1 = g.value(mlp_nodes.b1);
        result.mlp_w2 = g.value(mlp_nodes.w2);
        result.mlp_b2 = g.value(mlp_nodes.b2);
    }

    // Convergence check: the 50-step moving average must be non-increasing.
    const std::size_t win = 50;
    if (result.trace.size() > win) {
        double prev = 0.0;
        bool first = true;
        for (std::size_t i = 0; i + win <= result.trace.size(); ++i) {
            double avg = 0.0;
            for (std::size_t j = 0; j < win; ++j) avg += result.trace[i + j];
            avg /= static_cast<double>(win);
            if (!first && avg > prev * (1.0 + 1e-12)) {
                result.convergence_warning = true;
                break;
            }
            prev = avg;
            first = false;
        }
    }
    return result;
}

}  // namespace wico
