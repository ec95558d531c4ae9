#include "wico/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace wico {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t p = 1;
    for (std::size_t e : shape) p *= e;
    return p;
}

DType promote(DType a, DType b) {
    return (a == DType::f64 || b == DType::f64) ? DType::f64 : DType::f32;
}

Tensor::Tensor(std::vector<std::size_t> shape, DType dtype)
    : shape_(std::move(shape)), dtype_(dtype), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values, DType dtype)
    : shape_(std::move(shape)), dtype_(dtype), data_(std::move(values)) {
    if (data_.size() != shape_product(shape_)) {
        throw DimError("value count " + std::to_string(data_.size()) +
                       " does not match shape " + shape_str());
    }
    quantize();
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, DType dtype) {
    return Tensor(std::move(shape), dtype);
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value, DType dtype) {
    Tensor t(std::move(shape), dtype);
    std::fill(t.data_.begin(), t.data_.end(), value);
    t.quantize();
    return t;
}

Tensor Tensor::eye(std::size_t n, DType dtype) {
    Tensor t({n, n}, dtype);
    for (std::size_t i = 0; i < n; ++i) t.at2(i, i) = 1.0;
    return t;
}

Tensor Tensor::randn(std::vector<std::size_t> shape, std::mt19937_64& rng, DType dtype) {
    Tensor t(std::move(shape), dtype);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (double& v : t.data_) v = dist(rng);
    t.quantize();
    return t;
}

Tensor Tensor::uniform(std::vector<std::size_t> shape, double bound,
                       std::mt19937_64& rng, DType dtype) {
    Tensor t(std::move(shape), dtype);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : t.data_) v = dist(rng);
    t.quantize();
    return t;
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](double v) { return std::isfinite(v); });
}

void Tensor::quantize() {
    if (dtype_ == DType::f32) {
        for (double& v : data_) v = static_cast<double>(static_cast<float>(v));
    }
}

Tensor Tensor::astype(DType d) const {
    Tensor t = *this;
    t.dtype_ = d;
    t.quantize();
    return t;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << 'x';
        os << shape_[i];
    }
    os << ']';
    return os.str();
}

namespace {

void require_rank2(const Tensor& a, const char* op) {
    if (a.rank() != 2) {
        throw DimError(std::string(op) + ": expected rank-2 tensor, got " + a.shape_str());
    }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul");
    require_rank2(b, "matmul");
    if (a.extent(1) != b.extent(0)) {
        throw DimError("matmul: inner extents differ, " + a.shape_str() + " vs " +
                       b.shape_str());
    }
    const std::size_t m = a.extent(0), p = a.extent(1), q = b.extent(1);
    Tensor c({m, q}, promote(a.dtype(), b.dtype()));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t kk = 0; kk < p; ++kk) {
            const double av = a.at2(i, kk);
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < q; ++j) {
                c.at2(i, j) += av * b.at2(kk, j);
            }
        }
    }
    c.quantize();
    return c;
}

Tensor softmax_rows(const Tensor& a) {
    require_rank2(a, "softmax_rows");
    const std::size_t m = a.extent(0), q = a.extent(1);
    Tensor out({m, q}, a.dtype());
    for (std::size_t i = 0; i < m; ++i) {
        double mx = -HUGE_VAL;
        for (std::size_t j = 0; j < q; ++j) mx = std::max(mx, a.at2(i, j));
        double denom = 0.0;
        for (std::size_t j = 0; j < q; ++j) {
            const double e = std::exp(a.at2(i, j) - mx);
            out.at2(i, j) = e;
            denom += e;
        }
        for (std::size_t j = 0; j < q; ++j) out.at2(i, j) /= denom;
    }
    out.quantize();
    return out;
}

Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias, double eps) {
    require_rank2(a, "layer_norm");
    if (eps <= 0.0) throw RangeError("layer_norm: eps must be > 0");
    const std::size_t m = a.extent(0), d = a.extent(1);
    if (gain.size() != d || bias.size() != d) {
        throw DimError("layer_norm: gain/bias extent must be " + std::to_string(d));
    }
    Tensor out({m, d}, promote(a.dtype(), promote(gain.dtype(), bias.dtype())));
    for (std::size_t i = 0; i < m; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += a.at2(i, j);
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double c = a.at2(i, j) - mean;
            var += c * c;
        }
        var /= static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < d; ++j) {
            out.at2(i, j) = (a.at2(i, j) - mean) * inv * gain[j] + bias[j];
        }
    }
    out.quantize();
    return out;
}

Tensor interp_axis0(const Tensor& a, std::size_t target) {
    if (a.rank() < 1 || a.extent(0) < 1) {
        throw DimError("interp_axis0: need at least one source row");
    }
    if (target < 1) throw RangeError("interp_axis0: target must be >= 1");
    const std::size_t s = a.extent(0);
    const std::size_t row = a.size() / s;
    std::vector<std::size_t> out_shape = a.shape();
    out_shape[0] = target;
    if (s == target) {
        Tensor out = a;
        return out;
    }
    Tensor out(out_shape, a.dtype());
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
            if (frac == 0.0) {
                out[i * row + j] = a[i0 * row + j];
            } else {
                out[i * row + j] =
                    (1.0 - frac) * a[i0 * row + j] + frac * a[i1 * row + j];
            }
        }
    }
    out.quantize();
    return out;
}

Tensor reshape(const Tensor& a, std::vector<std::size_t> new_shape) {
    if (shape_product(new_shape) != a.size()) {
        throw DimError("reshape: element count mismatch, " + a.shape_str() +
                       " has " + std::to_string(a.size()) + " elements");
    }
    Tensor out(std::move(new_shape), a.data(), a.dtype());
    return out;
}

Tensor transpose2d(const Tensor& a) {
    require_rank2(a, "transpose2d");
    const std::size_t m = a.extent(0), n = a.extent(1);
    Tensor out({n, m}, a.dtype());
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) out.at2(j, i) = a.at2(i, j);
    }
    return out;
}

double gelu_scalar(double x) {
    constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
    constexpr double a = 0.044715;
    return 0.5 * x * (1.0 + std::tanh(c * (x + a * x * x * x)));
}

double gelu_grad_scalar(double x) {
    constexpr double c = 0.7978845608028654;
    constexpr double a = 0.044715;
    const double u = c * (x + a * x * x * x);
    const double t = std::tanh(u);
    const double sech2 = 1.0 - t * t;
    return 0.5 * (1.0 + t) + 0.5 * x * sech2 * c * (1.0 + 3.0 * a * x * x);
}

Tensor gelu(const Tensor& a) {
    Tensor out(a.shape(), a.dtype());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = gelu_scalar(a[i]);
    out.quantize();
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw DimError("add: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    }
    Tensor out(a.shape(), promote(a.dtype(), b.dtype()));
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    out.quantize();
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw DimError("mul: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    }
    Tensor out(a.shape(), promote(a.dtype(), b.dtype()));
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    out.quantize();
    return out;
}

Tensor scale(const Tensor& a, double s) {
    Tensor out(a.shape(), a.dtype());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
    out.quantize();
    return out;
}

Tensor add_rowvec(const Tensor& a, const Tensor& b) {
    require_rank2(a, "add_rowvec");
    const std::size_t m = a.extent(0), d = a.extent(1);
    if (b.size() != d) {
        throw DimError("add_rowvec: vector extent " + b.shape_str() +
                       " does not match columns of " + a.shape_str());
    }
    Tensor out({m, d}, promote(a.dtype(), b.dtype()));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < d; ++j) out.at2(i, j) = a.at2(i, j) + b[j];
    }
    out.quantize();
    return out;
}

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    Tensor out(std::vector<std::size_t>{}, a.dtype());
    out[0] = s;
    out.quantize();
    return out;
}

Tensor gather(const Tensor& a, const std::vector<std::size_t>& index_map,
              std::vector<std::size_t> out_shape) {
    if (shape_product(out_shape) != index_map.size()) {
        throw DimError("gather: index map size does not match output shape");
    }
    Tensor out(std::move(out_shape), a.dtype());
    for (std::size_t i = 0; i < index_map.size(); ++i) {
        if (index_map[i] >= a.size()) {
            throw RangeError("gather: index out of bounds");
        }
        out[i] = a[index_map[i]];
    }
    return out;
}

Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t count) {
    require_rank2(a, "slice_cols");
    if (start + count > a.extent(1)) {
        throw RangeError("slice_cols: columns out of range for " + a.shape_str());
    }
    const std::size_t m = a.extent(0);
    Tensor out({m, count}, a.dtype());
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < count; ++j) out.at2(i, j) = a.at2(i, start + j);
    }
    return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DimError("concat_cols: no inputs");
    const std::size_t m = parts[0].extent(0);
    std::size_t total = 0;
    DType dt = parts[0].dtype();
    for (const Tensor& p : parts) {
        require_rank2(p, "concat_cols");
        if (p.extent(0) != m) {
            throw DimError("concat_cols: row count mismatch");
        }
        total += p.extent(1);
        dt = promote(dt, p.dtype());
    }
    Tensor out({m, total}, dt);
    std::size_t off = 0;
    for (const Tensor& p : parts) {
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < p.extent(1); ++j) {
                out.at2(i, off + j) = p.at2(i, j);
            }
        }
        off += p.extent(1);
    }
    out.quantize();
    return out;
}

}  // namespace wico
