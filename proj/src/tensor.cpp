#include "lmot/tensor.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace lmot::numerics {

Tensor::Tensor(long n, long c, long h, long w, double fill) : shape_{n, c, h, w} {
    if (n < 0 || c < 0 || h < 0 || w < 0) {
        throw DimensionError("negative tensor dimension");
    }
    data_.assign(static_cast<std::size_t>(n) * c * h * w, fill);
}

Tensor Tensor::from_data(long n, long c, long h, long w, std::vector<double> data) {
    Tensor t;
    t.shape_ = {n, c, h, w};
    if (static_cast<long>(data.size()) != n * c * h * w) {
        throw DimensionError("data length " + std::to_string(data.size()) + " does not match shape " +
                             t.shape_str());
    }
    t.data_ = std::move(data);
    return t;
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::require_finite(const char* what) const {
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) {
            throw NumericalError(std::string(what) + ": non-finite value at flat index " + std::to_string(i));
        }
    }
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "(" << shape_[0] << "," << shape_[1] << "," << shape_[2] << "," << shape_[3] << ")";
    return os.str();
}

Tensor randn(long n, long c, long h, long w, std::uint64_t seed, double scale) {
    Tensor t(n, c, h, w);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (double& v : t.data()) v = dist(rng) * scale;
    return t;
}

Tensor rand_uniform(long n, long c, long h, long w, std::uint64_t seed, double lo, double hi) {
    Tensor t(n, c, h, w);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    for (double& v : t.data()) v = dist(rng);
    return t;
}

}  // namespace lmot::numerics
