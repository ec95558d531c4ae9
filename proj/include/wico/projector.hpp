#pragma once

#include <random>
#include <vector>

#include "wico/encoder.hpp"
#include "wico/graph.hpp"
#include "wico/tensor.hpp"

namespace wico {

// Visual tokens viewed as an h×w spatial map with d_v channels.
struct TokenGrid {
    std::size_t h = 0;
    std::size_t w = 0;
    std::size_t d_v = 0;
    Tensor data;  // [h, w, d_v]

    static TokenGrid from_flat(const Tensor& tokens, std::size_t h, std::size_t w);
    static TokenGrid from_tensor(const Tensor& t);  // rank-3 input
    Tensor flat() const;                            // [h*w, d_v]
    std::size_t n() const { return h * w; }
};

// Window/step geometry derived from (h, w, h', w'):
//   S = floor(in/out), W = in - (out-1)*S
// so the last window always ends flush with the grid edge.
struct WindowSpec {
    std::size_t h = 0, w = 0;        // source extents
    std::size_t h_out = 0, w_out = 0;
    std::size_t s_h = 0, s_w = 0;    // step
    std::size_t w_h = 0, w_w = 0;    // window extents
    bool overlapping = false;

    std::size_t k() const { return h_out * w_out; }
    std::size_t d_t(std::size_t d_v) const { return w_h * w_w * d_v; }
};

WindowSpec compute_window_spec(std::size_t h, std::size_t w, std::size_t h_out,
                               std::size_t w_out);

// Flat index map for the window gather: output element i of the
// [h'*w', d_t] tensor reads source element map[i] of the flat [h*w, d_v]
// token tensor. Channel blocks are ordered (window-row, window-col, channel).
std::vector<std::size_t> window_index_map(const WindowSpec& spec, std::size_t d_v);

// Concatenates each window's tokens channel-wise: [h', w', d_t].
Tensor window_concat(const TokenGrid& grid, const WindowSpec& spec);
// Inverse of window_concat for non-overlapping specs (a pure permutation).
TokenGrid window_scatter(const Tensor& concatenated, const WindowSpec& spec,
                         std::size_t d_v);

// Two-layer projection head. linear_mode skips the activation so tests can
// build exact-identity pipelines.
struct MlpParams {
    Tensor w1, b1, w2, b2;
    bool linear_mode = false;

    static MlpParams init(std::size_t d_in, std::size_t d_hidden, std::size_t d_out,
                          std::mt19937_64& rng, DType dtype = DType::f64);
    // d_in == d_hidden == d_out, exact identity with linear_mode on.
    static MlpParams identity(std::size_t d, DType dtype = DType::f64);
    std::size_t d_in() const { return w1.extent(0); }
    std::size_t d_out() const { return w2.extent(1); }
};

struct MlpNodes {
    NodeId w1, b1, w2, b2;
    bool linear_mode = false;
};
MlpNodes add_mlp_params(Graph& g, const MlpParams& p, bool trainable = false);
NodeId build_mlp(Graph& g, NodeId x, const MlpNodes& mlp);
MlpParams read_mlp(const Graph& g, const MlpNodes& nodes, bool linear_mode);

// linear -> gelu -> linear, row-wise.
Tensor project(const Tensor& windowed, const MlpParams& mlp);

// adjust_tokens -> grid reshape -> window_concat -> flatten -> project.
NodeId build_wico(Graph& g, NodeId v0, const std::vector<BlockNodes>& blocks,
                  const WindowSpec& spec, std::size_t d_v, const MlpNodes& mlp);
Tensor wico_forward(const Tensor& v0, const std::vector<AttentionBlockParams>& blocks,
                    const WindowSpec& spec, const MlpParams& mlp);

}  // namespace wico
