#pragma once

#include <cstddef>

#include "wico/tensor.hpp"

namespace wico {

enum class DecomposeStrategy { TokenInterp, ChannelInterp };

// Late-layer upsampling schedule: layers before l_l - k_l pass tokens through
// untouched; the expansion fires once at layer l_l - k_l.
struct DecompositionConfig {
    DecomposeStrategy strategy = DecomposeStrategy::TokenInterp;
    std::size_t l_l = 32;  // total decoder layers
    std::size_t k_l = 2;   // late layers that see expanded tokens
    std::size_t n = 0;     // target token count
    std::size_t k = 0;     // source token count

    void validate() const;
    std::size_t insertion_layer() const { return l_l - k_l; }
};

// Linear upsampling along the token axis, k -> n rows.
Tensor token_interpolate(const Tensor& v_l, std::size_t n);

// Channel-axis upsampling: transpose, interpolate to floor(n/k)*d_l columns
// per token, transpose back, reshape to k*floor(n/k) tokens. The output count
// may undershoot n; callers read the actual extent.
Tensor channel_interpolate(const Tensor& v_l, std::size_t n);

Tensor decompose_at(const DecompositionConfig& config, std::size_t layer_index,
                    const Tensor& v_l);

}  // namespace wico
