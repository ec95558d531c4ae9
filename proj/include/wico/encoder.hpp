#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "wico/graph.hpp"
#include "wico/tensor.hpp"

namespace wico {

struct WindowSpec;

// One pre-norm transformer block: LN -> multi-head self-attention -> residual
// -> LN -> MLP -> residual. Randomly initialized stand-in for the tuned last
// blocks of a vision encoder.
struct AttentionBlockParams {
    Tensor w_q, w_k, w_v, w_o;        // d_v × d_v
    Tensor mlp_w1, mlp_b1, mlp_w2, mlp_b2;  // d_v×4d_v, 4d_v×d_v
    Tensor ln1_gain, ln1_bias, ln2_gain, ln2_bias;
    std::size_t heads = 1;

    // Scaled-uniform init, bound sqrt(6/(fan_in+fan_out)).
    static AttentionBlockParams init(std::size_t d_v, std::size_t heads,
                                     std::mt19937_64& rng, DType dtype = DType::f64);
    std::size_t d_v() const { return w_q.extent(0); }
    void validate(std::size_t d_v) const;
};

struct BlockNodes {
    NodeId w_q, w_k, w_v, w_o;
    NodeId mlp_w1, mlp_b1, mlp_w2, mlp_b2;
    NodeId ln1_gain, ln1_bias, ln2_gain, ln2_bias;
    std::size_t heads = 1;
};

BlockNodes add_block_params(Graph& g, const AttentionBlockParams& p,
                            bool trainable = false);
NodeId build_block(Graph& g, NodeId x, const BlockNodes& b);
AttentionBlockParams read_block(const Graph& g, const BlockNodes& nodes);

// Applies the block stack; an empty list returns v0 unchanged.
Tensor adjust_tokens(const Tensor& v0,
                     const std::vector<AttentionBlockParams>& blocks);

// Per-head attention weight matrices of a single block (rows sum to 1).
std::vector<Tensor> attention_matrices(const Tensor& x,
                                       const AttentionBlockParams& block);

enum class FitObjective {
    // MSE between projector output and the window-grouped raw tokens; the
    // projector must keep the window content recoverable.
    ReconstructThroughProjector,
    // MSE between adjusted tokens and the input itself.
    MatchInput,
};

struct FitOptions {
    std::size_t steps = 200;
    double lr = 0.05;
    std::uint64_t seed = 0;
    std::size_t k_v = 1;
    std::size_t heads = 2;
    // Weight on the squared-neighbor-difference penalty of the adjusted
    // channel-mean map; 0 disables it.
    double smoothness_weight = 0.0;
};

struct MlpParams;

struct FitResult {
    std::vector<AttentionBlockParams> blocks;
    std::vector<double> trace;
    bool convergence_warning = false;
    // Projection head trained jointly for ReconstructThroughProjector.
    Tensor mlp_w1, mlp_b1, mlp_w2, mlp_b2;
};

// Plain gradient descent on block (and, for the projector objective, MLP)
// parameters. Throws DivergenceError when the loss becomes NaN.
FitResult fit_adjuster(const Tensor& v0, const WindowSpec& spec,
                       FitObjective objective, const FitOptions& opts);

}  // namespace wico
