#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lmot/tensor.hpp"

namespace lmot::numerics {

enum class Padding { Zero, Reflect };

struct Conv2dSpec {
    int stride = 1;
    Padding padding = Padding::Zero;
    int pad = 0;
    int groups = 1;
};

/// Cross-correlation. input (N,Cin,H,W), kernel (Cout,Cin/groups,k,k).
/// Output spatial dims: floor((H + 2*pad - k)/stride) + 1.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Conv2dSpec& spec);

struct Conv2dGrads {
    Tensor grad_input;
    Tensor grad_kernel;
};

Conv2dGrads conv2d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& kernel,
                            const Conv2dSpec& spec);

/// Logits for softmax-constrained convolution kernels; one softmax per output filter
/// over its full (C_in_per_group, k, k) support.
struct KernelLogits {
    Tensor logits;  // (C_out, C_in_per_group, k, k), k odd
    int groups = 1;
};

/// Per-filter softmax over the (C_in_per_group, k, k) support, max-stabilized.
/// Every entry in (0,1); each filter sums to 1.
Tensor softmax_normalize(const KernelLogits& logits);

/// VJP of softmax_normalize given the saved normalized output.
Tensor softmax_normalize_backward(const Tensor& grad_out, const Tensor& normalized);

/// (N,C,H,W) -> (N,C,1,1), mean over the spatial plane.
Tensor global_avg_pool(const Tensor& x);
Tensor global_avg_pool_backward(const Tensor& grad_out, long in_h, long in_w);

/// Affine map on channel descriptors: x (N,Cin,1,1), weights (Cout,Cin,1,1), bias[Cout].
Tensor fully_connected(const Tensor& x, const Tensor& weights, const std::vector<double>& bias);

struct FcGrads {
    Tensor grad_x;
    Tensor grad_weights;
    std::vector<double> grad_bias;
};

FcGrads fully_connected_backward(const Tensor& grad_out, const Tensor& x, const Tensor& weights);

Tensor sigmoid(const Tensor& x);
/// Takes the saved forward *output* (sigmoid(x)).
Tensor sigmoid_backward(const Tensor& grad_out, const Tensor& output);

Tensor relu(const Tensor& x);
/// Takes the saved forward *input*.
Tensor relu_backward(const Tensor& grad_out, const Tensor& input);

struct GradCheckReport {
    double max_rel_err = 0.0;
    bool pass = false;
    std::string location;  // coordinate of the worst (or first non-finite) entry
};

/// Central-difference check of analytic gradients for a scalarized (summed) forward map.
/// forward_sum evaluates the op on perturbed inputs and returns the sum of its output.
/// analytic_grads[i] must match inputs[i] in shape.
GradCheckReport grad_check(const std::function<double(const std::vector<Tensor>&)>& forward_sum,
                           const std::vector<Tensor>& inputs, const std::vector<Tensor>& analytic_grads,
                           double eps, double tol);

}  // namespace lmot::numerics
