#include "wico/decompose.hpp"

namespace wico {

void DecompositionConfig::validate() const {
    if (k_l > l_l) {
        throw RangeError("decompose: K_l=" + std::to_string(k_l) +
                         " exceeds L_l=" + std::to_string(l_l));
    }
    if (k < 1 || n < k) {
        throw RangeError("decompose: need 1 <= k <= n (k=" + std::to_string(k) +
                         ", n=" + std::to_string(n) + ")");
    }
}

namespace {

void require_upsample(const Tensor& v_l, std::size_t n, const char* op) {
    if (v_l.rank() != 2 || v_l.extent(0) < 1) {
        throw DimError(std::string(op) + ": expected [k x d_l] tokens, got " +
                       v_l.shape_str());
    }
    if (n < v_l.extent(0)) {
        throw RangeError(std::string(op) + ": target n=" + std::to_string(n) +
                         " below source k=" + std::to_string(v_l.extent(0)) +
                         "; downsampling is not supported");
    }
}

}  // namespace

Tensor token_interpolate(const Tensor& v_l, std::size_t n) {
    require_upsample(v_l, n, "token_interpolate");
    return interp_axis0(v_l, n);
}

Tensor channel_interpolate(const Tensor& v_l, std::size_t n) {
    require_upsample(v_l, n, "channel_interpolate");
    const std::size_t k = v_l.extent(0);
    const std::size_t d_l = v_l.extent(1);
    const std::size_t m = n / k;  // floor
    Tensor channels = transpose2d(v_l);                    // [d_l, k]
    Tensor expanded = interp_axis0(channels, m * d_l);     // [m*d_l, k]
    Tensor back = transpose2d(expanded);                   // [k, m*d_l]
    return reshape(back, {k * m, d_l});
}

Tensor decompose_at(const DecompositionConfig& config, std::size_t layer_index,
                    const Tensor& v_l) {
    config.validate();
    if (layer_index >= config.l_l) {
        throw RangeError("decompose_at: layer " + std::to_string(layer_index) +
                         " out of range for L_l=" + std::to_string(config.l_l));
    }
    if (config.k_l == 0 || layer_index != config.insertion_layer()) {
        return v_l;
    }
    return config.strategy == DecomposeStrategy::TokenInterp
               ? token_interpolate(v_l, config.n)
               : channel_interpolate(v_l, config.n);
}

}  // namespace wico
