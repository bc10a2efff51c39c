#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lmot/errors.hpp"

namespace lmot::numerics {

/// Dense 4-D tensor (N, C, H, W), row-major doubles.
class Tensor {
   public:
    Tensor() : shape_{0, 0, 0, 0} {}

    Tensor(long n, long c, long h, long w, double fill = 0.0);

    static Tensor from_data(long n, long c, long h, long w, std::vector<double> data);

    long n() const { return shape_[0]; }
    long c() const { return shape_[1]; }
    long h() const { return shape_[2]; }
    long w() const { return shape_[3]; }
    long size() const { return static_cast<long>(data_.size()); }
    const std::array<long, 4>& shape() const { return shape_; }

    double& at(long n, long c, long h, long w) {
        return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }
    double at(long n, long c, long h, long w) const {
        return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    bool all_finite() const;

    /// Throws NumericalError naming `what` if any entry is NaN/Inf.
    void require_finite(const char* what) const;

    std::string shape_str() const;

   private:
    std::array<long, 4> shape_;
    std::vector<double> data_;
};

/// Seeded N(0, scale) fill, deterministic per seed.
Tensor randn(long n, long c, long h, long w, std::uint64_t seed, double scale = 1.0);

/// Seeded U[lo, hi) fill.
Tensor rand_uniform(long n, long c, long h, long w, std::uint64_t seed, double lo = 0.0, double hi = 1.0);

}  // namespace lmot::numerics
