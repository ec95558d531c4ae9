#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "wico/projector.hpp"
#include "wico/tensor.hpp"

namespace wico {

enum class ProjectorTag { Wico, Concat1D, TokenFilter, Perceiver, TokenMixer, CAbstractor };

const char* projector_tag_name(ProjectorTag tag);
ProjectorTag parse_projector_tag(const std::string& name);

// ---- compression cores (pre-MLP feature stages) ----

// Raster groups of r consecutive tokens, concatenated channel-wise.
Tensor concat_groups(const Tensor& v, std::size_t group);

// Redundancy score of token i = max cosine similarity to any other token;
// the k lowest-scoring tokens are kept in original order, ties to lower index.
// Zero-norm tokens contribute similarity 0.
std::vector<std::size_t> token_filter_indices(const Tensor& v, std::size_t k);
Tensor token_filter(const Tensor& v, std::size_t k);

struct PerceiverParams {
    Tensor queries;          // [k, d_v]
    Tensor w_q, w_k, w_v;    // [d_v, d_v]
    static PerceiverParams init(std::size_t k, std::size_t d_v,
                                std::mt19937_64& rng, DType dtype = DType::f64);
};
// Single cross-attention layer: queries attend over v.
Tensor perceiver_attend(const Tensor& v, const PerceiverParams& p);
NodeId build_perceiver(Graph& g, NodeId v, NodeId queries, NodeId w_q, NodeId w_k,
                       NodeId w_v);

// out = mix^T . v, learned mixing over the token dimension.
Tensor token_mix(const Tensor& v, const Tensor& mix);

// Bin [floor(i*in/out), ceil((i+1)*in/out)) along each axis.
std::pair<std::size_t, std::size_t> adaptive_bin(std::size_t i, std::size_t in,
                                                 std::size_t out);
Tensor adaptive_avg_pool(const TokenGrid& grid, std::size_t h_out, std::size_t w_out);

struct CAbstractorParams {
    Tensor pre, post;  // pointwise d_v×d_v linear maps around the pooling
    static CAbstractorParams init(std::size_t d_v, std::mt19937_64& rng,
                                  DType dtype = DType::f64);
};
Tensor c_abstractor_features(const TokenGrid& grid, std::size_t h_out,
                             std::size_t w_out, const CAbstractorParams& p);

// ---- the shared projector contract: n×d_v -> k×d_l ----

struct Projector {
    ProjectorTag tag = ProjectorTag::Wico;
    std::size_t h = 0, w = 0, d_v = 0, k = 0, d_l = 0;
    WindowSpec spec;                 // Wico / CAbstractor
    std::size_t group = 1;           // Concat1D
    std::vector<AttentionBlockParams> blocks;  // Wico adjuster (may be empty)
    PerceiverParams perceiver;
    Tensor mix;                      // TokenMixer [n, k]
    CAbstractorParams cabs;
    MlpParams mlp;                   // shared projection head

    // Pre-MLP compression core output, k×d_feature.
    Tensor features(const Tensor& v) const;
    // Full k×d_l projection.
    Tensor apply(const Tensor& v) const;
};

// Builds a seeded projector of the given kind. h*w tokens; k must be
// h'*w'-compatible for spatial kinds and divide n for Concat1D.
Projector make_projector(ProjectorTag tag, std::size_t h, std::size_t w,
                         std::size_t d_v, std::size_t k, std::size_t d_l,
                         std::uint64_t seed, std::size_t k_v = 0,
                         std::optional<std::pair<std::size_t, std::size_t>>
                             out_grid = std::nullopt);

}  // namespace wico
