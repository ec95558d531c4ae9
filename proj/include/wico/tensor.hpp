#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "wico/errors.hpp"

namespace wico {

enum class DType { f32, f64 };

inline std::size_t dtype_size(DType d) { return d == DType::f32 ? 4 : 8; }
inline const char* dtype_name(DType d) { return d == DType::f32 ? "f32" : "f64"; }

// Dense row-major n-dimensional array. Values are held as double; tensors
// tagged f32 are quantized to float precision after every operation so that
// results are identical to a single-precision pipeline bit for bit.
class Tensor {
public:
    Tensor() : dtype_(DType::f64) {}
    explicit Tensor(std::vector<std::size_t> shape, DType dtype = DType::f64);
    Tensor(std::vector<std::size_t> shape, std::vector<double> values,
           DType dtype = DType::f64);

    static Tensor zeros(std::vector<std::size_t> shape, DType dtype = DType::f64);
    static Tensor full(std::vector<std::size_t> shape, double value,
                       DType dtype = DType::f64);
    // Identity matrix n×n.
    static Tensor eye(std::size_t n, DType dtype = DType::f64);
    // i.i.d. standard normal entries.
    static Tensor randn(std::vector<std::size_t> shape, std::mt19937_64& rng,
                        DType dtype = DType::f64);
    // Uniform on [-bound, bound].
    static Tensor uniform(std::vector<std::size_t> shape, double bound,
                          std::mt19937_64& rng, DType dtype = DType::f64);

    const std::vector<std::size_t>& shape() const { return shape_; }
    DType dtype() const { return dtype_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_.at(axis); }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double at2(std::size_t i, std::size_t j) const {
        return data_[i * shape_[1] + j];
    }
    double& at2(std::size_t i, std::size_t j) {
        return data_[i * shape_[1] + j];
    }
    double at3(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double& at3(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    bool all_finite() const;
    // Re-rounds the payload to the tensor's precision (no-op for f64).
    void quantize();
    Tensor astype(DType d) const;

    std::string shape_str() const;

private:
    std::vector<std::size_t> shape_;
    DType dtype_;
    std::vector<double> data_;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);
DType promote(DType a, DType b);

// ---- operations (pure, deterministic) ----

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor softmax_rows(const Tensor& a);
Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias,
                  double eps);
// Endpoint-aligned linear resampling along axis 0: output row i samples
// source position i*(s-1)/(t-1); t==s is the identity, s==1 replicates.
Tensor interp_axis0(const Tensor& a, std::size_t target);
Tensor reshape(const Tensor& a, std::vector<std::size_t> new_shape);
Tensor transpose2d(const Tensor& a);
// tanh approximation, chosen for its closed-form gradient.
Tensor gelu(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
// a[m×d] + row vector b[d], broadcast over rows.
Tensor add_rowvec(const Tensor& a, const Tensor& b);
// Sum of all elements, returned as a scalar tensor (shape {}).
Tensor sum(const Tensor& a);
// out[i] = a[index_map[i]]; the linear gather behind window/group ops.
Tensor gather(const Tensor& a, const std::vector<std::size_t>& index_map,
              std::vector<std::size_t> out_shape);
Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t count);
Tensor concat_cols(const std::vector<Tensor>& parts);

double gelu_scalar(double x);
double gelu_grad_scalar(double x);

}  // namespace wico
