#pragma once

#include <cstdint>
#include <vector>

#include "lmot/numerics.hpp"

namespace lmot::ald {

using numerics::Tensor;

/// Adaptive low-pass downsampling block: a strided 3x3 main branch plus a
/// depthwise softmax-constrained 5x5 low-pass branch, fused per channel by
/// sigmoid weights computed from pooled descriptors of both branches.
struct ALDBlock {
    int channels = 0;
    Tensor sconv_logits;   // (C,1,5,5), depthwise groups=C
    Tensor down_kernel;    // (C,C,3,3), stride 2, zero pad 1
    Tensor fc_weights;     // (C,2C,1,1)
    std::vector<double> fc_bias;  // C
    // additive: y = orig + w*low; convex: y = (1-w)*orig + w*low
    bool convex_fusion = false;
};

/// Low-pass branch logits start as the log of a discrete sigma=1 Gaussian, so the
/// softmax reproduces that Gaussian exactly; other parameters ~ N(0, 1/sqrt(fan_in)).
ALDBlock ald_init(int channels, std::uint64_t seed);

/// The normalized 5x5 sigma=1 Gaussian used for initialization (unit sum).
Tensor gaussian_kernel_5x5();

struct ALDCache {
    Tensor x;
    Tensor orig, low;          // branch outputs
    Tensor sconv_kernel;       // softmax-normalized
    Tensor descriptors;        // (N,2C,1,1)
    Tensor fusion_weights;     // (N,C,1,1), sigmoid outputs
    bool valid = false;
};

Tensor ald_forward(const ALDBlock& block, const Tensor& x, ALDCache& cache);

struct ALDGrads {
    Tensor grad_x;
    Tensor grad_sconv_logits;
    Tensor grad_down_kernel;
    Tensor grad_fc_weights;
    std::vector<double> grad_fc_bias;
};

ALDGrads ald_backward(const ALDBlock& block, const ALDCache& cache, const Tensor& grad_y);

struct DSLConfig {
    double alpha = 1.0;   // low-light detection loss weight
    double beta = 1.0;    // L_DS weight
    double gamma = 0.01;  // L_TV weight
    bool detach_well = false;  // treat well-lit features as a fixed teacher
};

struct LossGrad {
    double value = 0.0;
    std::vector<Tensor> grad_low;
    std::vector<Tensor> grad_well;  // zero tensors when detached
};

/// Sum over layers of squared L2 feature differences.
LossGrad loss_ds(const std::vector<Tensor>& f_well, const std::vector<Tensor>& f_low, bool detach_well = false);

/// Squared first differences along both spatial axes, summed over layers.
LossGrad loss_tv(const std::vector<Tensor>& f_low);

double loss_total(double l_det_well, double l_det_low, double l_ds, double l_tv, const DSLConfig& cfg);

}  // namespace lmot::ald
