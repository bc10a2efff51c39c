#include "lmot/ald.hpp"

#include <cmath>

namespace lmot::ald {

using namespace numerics;

Tensor gaussian_kernel_5x5() {
    Tensor k(1, 1, 5, 5);
    double sum = 0.0;
    for (int i = -2; i <= 2; ++i)
        for (int j = -2; j <= 2; ++j) {
            const double v = std::exp(-(i * i + j * j) / 2.0);
            k.at(0, 0, i + 2, j + 2) = v;
            sum += v;
        }
    for (double& v : k.data()) v /= sum;
    return k;
}

ALDBlock ald_init(int channels, std::uint64_t seed) {
    if (channels < 1) throw ContractViolation("ald_init: channels must be >= 1");
    ALDBlock b;
    b.channels = channels;
    const Tensor gauss = gaussian_kernel_5x5();
    b.sconv_logits = Tensor(channels, 1, 5, 5);
    for (int c = 0; c < channels; ++c)
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) b.sconv_logits.at(c, 0, i, j) = std::log(gauss.at(0, 0, i, j));
    b.down_kernel = randn(channels, channels, 3, 3, seed ^ 0x9e3779b97f4a7c15ULL,
                          1.0 / std::sqrt(static_cast<double>(channels) * 9.0));
    b.fc_weights = randn(channels, 2 * channels, 1, 1, seed ^ 0xbf58476d1ce4e5b9ULL,
                         1.0 / std::sqrt(2.0 * channels));
    const Tensor bias = randn(channels, 1, 1, 1, seed ^ 0x94d049bb133111ebULL,
                              1.0 / std::sqrt(2.0 * channels));
    b.fc_bias.assign(bias.data().begin(), bias.data().end());
    return b;
}

Tensor ald_forward(const ALDBlock& block, const Tensor& x, ALDCache& cache) {
    if (x.c() != block.channels) {
        throw DimensionError("ald_forward: input has " + std::to_string(x.c()) + " channels, block expects " +
                             std::to_string(block.channels));
    }
    if (x.h() < 5 || x.w() < 5) throw DimensionError("ald_forward: spatial dims must be >= 5");
    cache = ALDCache{};
    cache.x = x;

    Conv2dSpec main_spec{2, Padding::Zero, 1, 1};
    cache.orig = conv2d(x, block.down_kernel, main_spec);

    cache.sconv_kernel = softmax_normalize({block.sconv_logits, block.channels});
    Conv2dSpec low_spec{2, Padding::Reflect, 2, block.channels};
    cache.low = conv2d(x, cache.sconv_kernel, low_spec);

    const Tensor d_orig = global_avg_pool(cache.orig);
    const Tensor d_low = global_avg_pool(cache.low);
    cache.descriptors = Tensor(x.n(), 2 * block.channels, 1, 1);
    for (long n = 0; n < x.n(); ++n)
        for (long c = 0; c < block.channels; ++c) {
            cache.descriptors.at(n, c, 0, 0) = d_orig.at(n, c, 0, 0);
            cache.descriptors.at(n, block.channels + c, 0, 0) = d_low.at(n, c, 0, 0);
        }
    cache.fusion_weights = sigmoid(fully_connected(cache.descriptors, block.fc_weights, block.fc_bias));

    Tensor y(cache.orig.n(), cache.orig.c(), cache.orig.h(), cache.orig.w());
    for (long n = 0; n < y.n(); ++n)
        for (long c = 0; c < y.c(); ++c) {
            const double w = cache.fusion_weights.at(n, c, 0, 0);
            const double w_orig = block.convex_fusion ? (1.0 - w) : 1.0;
            for (long i = 0; i < y.h(); ++i)
                for (long j = 0; j < y.w(); ++j) {
                    y.at(n, c, i, j) = w_orig * cache.orig.at(n, c, i, j) + w * cache.low.at(n, c, i, j);
                }
        }
    cache.valid = true;
    return y;
}

ALDGrads ald_backward(const ALDBlock& block, const ALDCache& cache, const Tensor& grad_y) {
    if (!cache.valid) throw ContractViolation("ald_backward: stale or missing forward cache");
    if (!grad_y.same_shape(cache.orig)) {
        throw DimensionError("ald_backward: grad_y " + grad_y.shape_str() + " vs forward output " +
                             cache.orig.shape_str());
    }

    Tensor grad_orig = grad_y;
    Tensor grad_low(cache.low.n(), cache.low.c(), cache.low.h(), cache.low.w());
    Tensor grad_w(grad_y.n(), block.channels, 1, 1);
    for (long n = 0; n < grad_y.n(); ++n)
        for (long c = 0; c < grad_y.c(); ++c) {
            const double w = cache.fusion_weights.at(n, c, 0, 0);
            double gw = 0.0;
            for (long i = 0; i < grad_y.h(); ++i)
                for (long j = 0; j < grad_y.w(); ++j) {
                    const double g = grad_y.at(n, c, i, j);
                    grad_low.at(n, c, i, j) = g * w;
                    if (block.convex_fusion) {
                        grad_orig.at(n, c, i, j) = g * (1.0 - w);
                        gw += g * (cache.low.at(n, c, i, j) - cache.orig.at(n, c, i, j));
                    } else {
                        gw += g * cache.low.at(n, c, i, j);
                    }
                }
            grad_w.at(n, c, 0, 0) = gw;
        }

    // fusion weights -> fc -> descriptors -> GAP of both branches
    const Tensor grad_fc_out = sigmoid_backward(grad_w, cache.fusion_weights);
    FcGrads fc = fully_connected_backward(grad_fc_out, cache.descriptors, block.fc_weights);
    Tensor grad_d_orig(grad_y.n(), block.channels, 1, 1);
    Tensor grad_d_low(grad_y.n(), block.channels, 1, 1);
    for (long n = 0; n < grad_y.n(); ++n)
        for (long c = 0; c < block.channels; ++c) {
            grad_d_orig.at(n, c, 0, 0) = fc.grad_x.at(n, c, 0, 0);
            grad_d_low.at(n, c, 0, 0) = fc.grad_x.at(n, block.channels + c, 0, 0);
        }
    {
        const Tensor g1 = global_avg_pool_backward(grad_d_orig, cache.orig.h(), cache.orig.w());
        const Tensor g2 = global_avg_pool_backward(grad_d_low, cache.low.h(), cache.low.w());
        for (long i = 0; i < grad_orig.size(); ++i) grad_orig.data()[i] += g1.data()[i];
        for (long i = 0; i < grad_low.size(); ++i) grad_low.data()[i] += g2.data()[i];
    }

    Conv2dSpec main_spec{2, Padding::Zero, 1, 1};
    Conv2dGrads main_g = conv2d_backward(grad_orig, cache.x, block.down_kernel, main_spec);
    Conv2dSpec low_spec{2, Padding::Reflect, 2, block.channels};
    Conv2dGrads low_g = conv2d_backward(grad_low, cache.x, cache.sconv_kernel, low_spec);

    ALDGrads out;
    out.grad_x = main_g.grad_input;
    for (long i = 0; i < out.grad_x.size(); ++i) out.grad_x.data()[i] += low_g.grad_input.data()[i];
    out.grad_down_kernel = main_g.grad_kernel;
    out.grad_sconv_logits = softmax_normalize_backward(low_g.grad_kernel, cache.sconv_kernel);
    out.grad_fc_weights = fc.grad_weights;
    out.grad_fc_bias = fc.grad_bias;
    return out;
}

LossGrad loss_ds(const std::vector<Tensor>& f_well, const std::vector<Tensor>& f_low, bool detach_well) {
    if (f_well.size() != f_low.size()) {
        throw DimensionError("loss_ds: layer lists differ in length");
    }
    LossGrad out;
    for (std::size_t l = 0; l < f_well.size(); ++l) {
        if (!f_well[l].same_shape(f_low[l])) {
            throw DimensionError("loss_ds: shape mismatch at layer " + std::to_string(l) + ": " +
                                 f_well[l].shape_str() + " vs " + f_low[l].shape_str());
        }
        Tensor g_low(f_low[l].n(), f_low[l].c(), f_low[l].h(), f_low[l].w());
        Tensor g_well = g_low;
        for (long i = 0; i < f_low[l].size(); ++i) {
            const double diff = f_low[l].data()[i] - f_well[l].data()[i];
            out.value += diff * diff;
            g_low.data()[i] = 2.0 * diff;
            if (!detach_well) g_well.data()[i] = -2.0 * diff;
        }
        out.grad_low.push_back(std::move(g_low));
        out.grad_well.push_back(std::move(g_well));
    }
    return out;
}

LossGrad loss_tv(const std::vector<Tensor>& f_low) {
    LossGrad out;
    for (std::size_t l = 0; l < f_low.size(); ++l) {
        const Tensor& f = f_low[l];
        if (f.h() < 2 || f.w() < 2) {
            throw DimensionError("loss_tv: layer " + std::to_string(l) + " needs H,W >= 2, got " +
                                 f.shape_str());
        }
        Tensor g(f.n(), f.c(), f.h(), f.w());
        for (long n = 0; n < f.n(); ++n)
            for (long c = 0; c < f.c(); ++c) {
                for (long i = 0; i + 1 < f.h(); ++i)
                    for (long j = 0; j < f.w(); ++j) {
                        const double d = f.at(n, c, i + 1, j) - f.at(n, c, i, j);
                        out.value += d * d;
                        g.at(n, c, i + 1, j) += 2.0 * d;
                        g.at(n, c, i, j) -= 2.0 * d;
                    }
                for (long i = 0; i < f.h(); ++i)
                    for (long j = 0; j + 1 < f.w(); ++j) {
                        const double d = f.at(n, c, i, j + 1) - f.at(n, c, i, j);
                        out.value += d * d;
                        g.at(n, c, i, j + 1) += 2.0 * d;
                        g.at(n, c, i, j) -= 2.0 * d;
                    }
            }
        out.grad_low.push_back(std::move(g));
    }
    return out;
}

double loss_total(double l_det_well, double l_det_low, double l_ds, double l_tv, const DSLConfig& cfg) {
    if (l_det_well < 0 || l_det_low < 0 || l_ds < 0 || l_tv < 0) {
        throw ContractViolation("loss_total: loss components must be non-negative");
    }
    if (!std::isfinite(l_det_well) || !std::isfinite(l_det_low) || !std::isfinite(l_ds) ||
        !std::isfinite(l_tv)) {
        throw ContractViolation("loss_total: non-finite loss component");
    }
    return l_det_well + cfg.alpha * l_det_low + cfg.beta * l_ds + cfg.gamma * l_tv;
}

}  // namespace lmot::ald
