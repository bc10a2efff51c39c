#pragma once

#include <cstdint>
#include <utility>

#include "lmot/raw.hpp"

namespace lmot::noise {

enum class NoiseKind { GaussianPoisson, Physics };

struct NoiseParams {
    NoiseKind kind = NoiseKind::Physics;
    double K = 1.0;           // system gain, counts per electron
    double sigma_read = 1.0;  // read noise std, counts
    double sigma_row = 0.0;   // row noise std, counts (one draw per row)
    double quant_step = 0.0;  // LSB size, counts
    double gp_a = 0.0;        // heteroscedastic slope (gaussian_poisson)
    double gp_b = 0.0;        // heteroscedastic offset (gaussian_poisson)
    double ratio = 1.0;       // darkening factor in (0,1]

    void validate() const;
};

/// Darken + noise a clean frame. Deterministic per (inputs, seed); random
/// streams are per (seed, frame_index, row) so row-parallel runs reproduce.
raw::RawFrame synthesize(const raw::RawFrame& clean, const NoiseParams& params, std::uint64_t seed);

/// Analytic variance of the synthesized signal at mean signal level s (counts).
double model_variance(double s, const NoiseParams& params);

/// Randomized augmentation parameters: K log-uniform in gain_range, sigma_read
/// tied to K by a log-linear relation with jitter, ratio log-uniform in ratio_range.
NoiseParams sample_params(std::uint64_t seed, std::pair<double, double> gain_range,
                          std::pair<double, double> ratio_range);

}  // namespace lmot::noise
