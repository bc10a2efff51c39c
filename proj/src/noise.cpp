#include "lmot/noise.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace lmot::noise {

using raw::RawFrame;

void NoiseParams::validate() const {
    if (K < 0 || sigma_read < 0 || sigma_row < 0 || quant_step < 0 || gp_a < 0 || gp_b < 0) {
        throw ContractViolation("noise params must be non-negative");
    }
    if (!(ratio > 0.0 && ratio <= 1.0)) {
        throw ContractViolation("noise ratio must be in (0,1], got " + std::to_string(ratio));
    }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t row_stream_seed(std::uint64_t seed, std::uint64_t frame, std::uint64_t row) {
    return splitmix64(splitmix64(seed ^ 0x6c0ff5eULL) ^ splitmix64(frame * 0x100000001b3ULL + row));
}

// Exact Poisson draw. Knuth inversion for small means, chunked into
// mean<=30 pieces (Poisson additivity) to avoid exp underflow; normal
// approximation above mean 1000.
long sample_poisson(double mean, std::mt19937_64& rng) {
    if (mean <= 0.0) return 0;
    if (mean > 1000.0) {
        std::normal_distribution<double> n(mean, std::sqrt(mean));
        return std::max(0L, std::lround(n(rng)));
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    long total = 0;
    double remaining = mean;
    while (remaining > 0.0) {
        const double chunk = std::min(remaining, 30.0);
        remaining -= chunk;
        const double limit = std::exp(-chunk);
        double p = 1.0;
        long k = 0;
        do {
            ++k;
            p *= u(rng);
        } while (p > limit);
        total += k - 1;
    }
    return total;
}

}  // namespace

RawFrame synthesize(const RawFrame& clean, const NoiseParams& params, std::uint64_t seed) {
    clean.validate();
    params.validate();
    RawFrame out = clean;
    const int max_count = (1 << clean.bit_depth) - 1;
    for (int y = 0; y < clean.height; ++y) {
        std::mt19937_64 rng(row_stream_seed(seed, static_cast<std::uint64_t>(clean.frame_index),
                                            static_cast<std::uint64_t>(y)));
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> uni(-0.5, 0.5);
        const double row_offset = params.sigma_row > 0 ? gauss(rng) * params.sigma_row : 0.0;
        for (int x = 0; x < clean.width; ++x) {
            const double s = std::max(0.0, (clean.at(y, x) - clean.black_level) * params.ratio);
            double v;
            if (params.kind == NoiseKind::Physics) {
                double shot;
                if (params.K > 0) {
                    shot = static_cast<double>(sample_poisson(s / params.K, rng)) * params.K;
                } else {
                    shot = s;
                }
                v = shot;
                if (params.sigma_read > 0) v += gauss(rng) * params.sigma_read;
                v += row_offset;
                if (params.quant_step > 0) v += uni(rng) * params.quant_step;
            } else {
                const double var = params.gp_a * s + params.gp_b;
                v = s + (var > 0 ? gauss(rng) * std::sqrt(var) : 0.0);
            }
            v += clean.black_level;
            v = std::clamp(v, 0.0, static_cast<double>(max_count));
            out.at(y, x) = static_cast<std::uint16_t>(std::lround(v));
        }
    }
    return out;
}

double model_variance(double s, const NoiseParams& params) {
    if (s < 0) throw ContractViolation("model_variance: s must be >= 0");
    if (params.kind == NoiseKind::Physics) {
        return params.K * s + params.sigma_read * params.sigma_read + params.sigma_row * params.sigma_row +
               params.quant_step * params.quant_step / 12.0;
    }
    return params.gp_a * s + params.gp_b;
}

NoiseParams sample_params(std::uint64_t seed, std::pair<double, double> gain_range,
                          std::pair<double, double> ratio_range) {
    if (!(gain_range.first > 0 && gain_range.first <= gain_range.second) ||
        !(ratio_range.first > 0 && ratio_range.first <= ratio_range.second)) {
        throw ContractViolation("sample_params: ranges must be positive and ordered");
    }
    // pinned log-linear read-noise relation: log sigma_read = 0.85*log K + log 0.8 + N(0, 0.2)
    constexpr double kReadSlope = 0.85;
    constexpr double kReadIntercept = -0.2231435513;  // ln 0.8
    constexpr double kReadJitter = 0.2;

    std::mt19937_64 rng(splitmix64(seed ^ 0x5a6e5eULL));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    NoiseParams p;
    p.kind = NoiseKind::Physics;
    const double lk = std::log(gain_range.first) +
                      u(rng) * (std::log(gain_range.second) - std::log(gain_range.first));
    p.K = gain_range.first == gain_range.second ? gain_range.first : std::exp(lk);
    p.sigma_read = std::exp(kReadSlope * lk + kReadIntercept + gauss(rng) * kReadJitter);
    p.sigma_row = 0.25 * p.sigma_read;
    p.quant_step = 1.0;
    const double lr = std::log(ratio_range.first) +
                      u(rng) * (std::log(ratio_range.second) - std::log(ratio_range.first));
    p.ratio = ratio_range.first == ratio_range.second ? ratio_range.first : std::min(1.0, std::exp(lr));
    return p;
}

}  // namespace lmot::noise
