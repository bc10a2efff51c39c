#include "lmot/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lmot::numerics {

namespace {

// Reflect-101 index into [0, size).
long reflect_index(long t, long size) {
    if (size == 1) return 0;
    while (t < 0 || t >= size) {
        if (t < 0) t = -t;
        if (t >= size) t = 2 * size - 2 - t;
    }
    return t;
}

struct ConvDims {
    long n, cin, h, w;
    long cout, cig, k;
    long cog;  // output channels per group
    long ho, wo;
};

ConvDims check_conv(const Tensor& input, const Tensor& kernel, const Conv2dSpec& spec) {
    ConvDims d{};
    d.n = input.n();
    d.cin = input.c();
    d.h = input.h();
    d.w = input.w();
    d.cout = kernel.n();
    d.cig = kernel.c();
    d.k = kernel.h();
    if (kernel.w() != d.k) {
        throw DimensionError("conv2d: kernel must be square, got " + kernel.shape_str());
    }
    if (spec.groups < 1 || d.cin % spec.groups != 0 || d.cout % spec.groups != 0) {
        throw DimensionError("conv2d: channels (" + std::to_string(d.cin) + " in, " + std::to_string(d.cout) +
                             " out) not divisible by groups " + std::to_string(spec.groups));
    }
    if (d.cig != d.cin / spec.groups) {
        throw DimensionError("conv2d: kernel input channels " + std::to_string(d.cig) + " != " +
                             std::to_string(d.cin / spec.groups) + " (C_in/groups)");
    }
    if (spec.stride < 1) throw DimensionError("conv2d: stride must be positive");
    if (spec.pad < 0) throw DimensionError("conv2d: negative padding");
    d.cog = d.cout / spec.groups;
    d.ho = (d.h + 2 * spec.pad - d.k) / spec.stride + 1;
    d.wo = (d.w + 2 * spec.pad - d.k) / spec.stride + 1;
    if (d.h + 2 * spec.pad < d.k || d.w + 2 * spec.pad < d.k || d.ho <= 0 || d.wo <= 0) {
        throw DimensionError("conv2d: non-positive output dims for input " + input.shape_str() + ", kernel " +
                             kernel.shape_str());
    }
    return d;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Conv2dSpec& spec) {
    const ConvDims d = check_conv(input, kernel, spec);
    Tensor out(d.n, d.cout, d.ho, d.wo);
    for (long n = 0; n < d.n; ++n) {
        for (long g = 0; g < spec.groups; ++g) {
            for (long oc = g * d.cog; oc < (g + 1) * d.cog; ++oc) {
                for (long oy = 0; oy < d.ho; ++oy) {
                    for (long ox = 0; ox < d.wo; ++ox) {
                        double acc = 0.0;
                        for (long ic = 0; ic < d.cig; ++ic) {
                            const long c_in = g * d.cig + ic;
                            for (long ky = 0; ky < d.k; ++ky) {
                                long iy = oy * spec.stride - spec.pad + ky;
                                for (long kx = 0; kx < d.k; ++kx) {
                                    long ix = ox * spec.stride - spec.pad + kx;
                                    double v;
                                    if (iy >= 0 && iy < d.h && ix >= 0 && ix < d.w) {
                                        v = input.at(n, c_in, iy, ix);
                                    } else if (spec.padding == Padding::Reflect) {
                                        v = input.at(n, c_in, reflect_index(iy, d.h), reflect_index(ix, d.w));
                                    } else {
                                        v = 0.0;
                                    }
                                    acc += v * kernel.at(oc, ic, ky, kx);
                                }
                            }
                        }
                        out.at(n, oc, oy, ox) = acc;
                    }
                }
            }
        }
    }
    return out;
}

Conv2dGrads conv2d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& kernel,
                            const Conv2dSpec& spec) {
    const ConvDims d = check_conv(input, kernel, spec);
    if (grad_out.n() != d.n || grad_out.c() != d.cout || grad_out.h() != d.ho || grad_out.w() != d.wo) {
        throw DimensionError("conv2d_backward: grad_out shape " + grad_out.shape_str() +
                             " does not match forward output");
    }
    Conv2dGrads g;
    g.grad_input = Tensor(d.n, d.cin, d.h, d.w);
    g.grad_kernel = Tensor(d.cout, d.cig, d.k, d.k);
    for (long n = 0; n < d.n; ++n) {
        for (long grp = 0; grp < spec.groups; ++grp) {
            for (long oc = grp * d.cog; oc < (grp + 1) * d.cog; ++oc) {
                for (long oy = 0; oy < d.ho; ++oy) {
                    for (long ox = 0; ox < d.wo; ++ox) {
                        const double go = grad_out.at(n, oc, oy, ox);
                        if (go == 0.0) continue;
                        for (long ic = 0; ic < d.cig; ++ic) {
                            const long c_in = grp * d.cig + ic;
                            for (long ky = 0; ky < d.k; ++ky) {
                                long iy = oy * spec.stride - spec.pad + ky;
                                for (long kx = 0; kx < d.k; ++kx) {
                                    long ix = ox * spec.stride - spec.pad + kx;
                                    long sy = iy, sx = ix;
                                    if (iy < 0 || iy >= d.h || ix < 0 || ix >= d.w) {
                                        if (spec.padding == Padding::Zero) continue;
                                        sy = reflect_index(iy, d.h);
                                        sx = reflect_index(ix, d.w);
                                    }
                                    g.grad_kernel.at(oc, ic, ky, kx) += go * input.at(n, c_in, sy, sx);
                                    g.grad_input.at(n, c_in, sy, sx) += go * kernel.at(oc, ic, ky, kx);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    return g;
}

Tensor softmax_normalize(const KernelLogits& logits) {
    const Tensor& l = logits.logits;
    if (l.h() != l.w() || l.h() % 2 == 0) {
        throw DimensionError("softmax_normalize: kernel support must be square with odd size, got " +
                             l.shape_str());
    }
    l.require_finite("softmax_normalize logits");
    Tensor out(l.n(), l.c(), l.h(), l.w());
    const long support = l.c() * l.h() * l.w();
    for (long f = 0; f < l.n(); ++f) {
        const double* src = l.data().data() + f * support;
        double* dst = out.data().data() + f * support;
        double m = src[0];
        for (long i = 1; i < support; ++i) m = std::max(m, src[i]);
        double sum = 0.0;
        for (long i = 0; i < support; ++i) {
            dst[i] = std::exp(src[i] - m);
            sum += dst[i];
        }
        for (long i = 0; i < support; ++i) dst[i] /= sum;
    }
    return out;
}

Tensor softmax_normalize_backward(const Tensor& grad_out, const Tensor& normalized) {
    if (!grad_out.same_shape(normalized)) {
        throw DimensionError("softmax_normalize_backward: grad_out " + grad_out.shape_str() +
                             " vs normalized " + normalized.shape_str());
    }
    Tensor grad(normalized.n(), normalized.c(), normalized.h(), normalized.w());
    const long support = normalized.c() * normalized.h() * normalized.w();
    for (long f = 0; f < normalized.n(); ++f) {
        const double* s = normalized.data().data() + f * support;
        const double* g = grad_out.data().data() + f * support;
        double* out = grad.data().data() + f * support;
        double dot = 0.0;
        for (long i = 0; i < support; ++i) dot += g[i] * s[i];
        for (long i = 0; i < support; ++i) out[i] = s[i] * (g[i] - dot);
    }
    return grad;
}

Tensor global_avg_pool(const Tensor& x) {
    if (x.h() < 1 || x.w() < 1) throw DimensionError("global_avg_pool: empty spatial plane");
    Tensor out(x.n(), x.c(), 1, 1);
    const double inv = 1.0 / static_cast<double>(x.h() * x.w());
    for (long n = 0; n < x.n(); ++n) {
        for (long c = 0; c < x.c(); ++c) {
            double acc = 0.0;
            for (long i = 0; i < x.h(); ++i)
                for (long j = 0; j < x.w(); ++j) acc += x.at(n, c, i, j);
            out.at(n, c, 0, 0) = acc * inv;
        }
    }
    return out;
}

Tensor global_avg_pool_backward(const Tensor& grad_out, long in_h, long in_w) {
    if (grad_out.h() != 1 || grad_out.w() != 1) {
        throw DimensionError("global_avg_pool_backward: grad_out must be (N,C,1,1)");
    }
    Tensor grad(grad_out.n(), grad_out.c(), in_h, in_w);
    const double inv = 1.0 / static_cast<double>(in_h * in_w);
    for (long n = 0; n < grad.n(); ++n)
        for (long c = 0; c < grad.c(); ++c) {
            const double g = grad_out.at(n, c, 0, 0) * inv;
            for (long i = 0; i < in_h; ++i)
                for (long j = 0; j < in_w; ++j) grad.at(n, c, i, j) = g;
        }
    return grad;
}

Tensor fully_connected(const Tensor& x, const Tensor& weights, const std::vector<double>& bias) {
    if (x.h() != 1 || x.w() != 1 || weights.h() != 1 || weights.w() != 1) {
        throw DimensionError("fully_connected: expects (N,Cin,1,1) input and (Cout,Cin,1,1) weights");
    }
    if (weights.c() != x.c() || static_cast<long>(bias.size()) != weights.n()) {
        throw DimensionError("fully_connected: inner dims disagree, x " + x.shape_str() + ", weights " +
                             weights.shape_str() + ", bias " + std::to_string(bias.size()));
    }
    Tensor out(x.n(), weights.n(), 1, 1);
    for (long n = 0; n < x.n(); ++n)
        for (long o = 0; o < weights.n(); ++o) {
            double acc = bias[o];
            for (long i = 0; i < x.c(); ++i) acc += weights.at(o, i, 0, 0) * x.at(n, i, 0, 0);
            out.at(n, o, 0, 0) = acc;
        }
    return out;
}

FcGrads fully_connected_backward(const Tensor& grad_out, const Tensor& x, const Tensor& weights) {
    if (grad_out.n() != x.n() || grad_out.c() != weights.n()) {
        throw DimensionError("fully_connected_backward: grad_out " + grad_out.shape_str());
    }
    FcGrads g;
    g.grad_x = Tensor(x.n(), x.c(), 1, 1);
    g.grad_weights = Tensor(weights.n(), weights.c(), 1, 1);
    g.grad_bias.assign(weights.n(), 0.0);
    for (long n = 0; n < x.n(); ++n)
        for (long o = 0; o < weights.n(); ++o) {
            const double go = grad_out.at(n, o, 0, 0);
            g.grad_bias[o] += go;
            for (long i = 0; i < x.c(); ++i) {
                g.grad_x.at(n, i, 0, 0) += go * weights.at(o, i, 0, 0);
                g.grad_weights.at(o, i, 0, 0) += go * x.at(n, i, 0, 0);
            }
        }
    return g;
}

Tensor sigmoid(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.data()) {
        // split by sign to avoid overflow in exp
        v = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    }
    return out;
}

Tensor sigmoid_backward(const Tensor& grad_out, const Tensor& output) {
    if (!grad_out.same_shape(output)) throw DimensionError("sigmoid_backward: shape mismatch");
    Tensor grad = grad_out;
    for (long i = 0; i < grad.size(); ++i) {
        const double s = output.data()[i];
        grad.data()[i] *= s * (1.0 - s);
    }
    return grad;
}

Tensor relu(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.data()) v = std::max(v, 0.0);
    return out;
}

Tensor relu_backward(const Tensor& grad_out, const Tensor& input) {
    if (!grad_out.same_shape(input)) throw DimensionError("relu_backward: shape mismatch");
    Tensor grad = grad_out;
    for (long i = 0; i < grad.size(); ++i) {
        if (input.data()[i] <= 0.0) grad.data()[i] = 0.0;
    }
    return grad;
}

GradCheckReport grad_check(const std::function<double(const std::vector<Tensor>&)>& forward_sum,
                           const std::vector<Tensor>& inputs, const std::vector<Tensor>& analytic_grads,
                           double eps, double tol) {
    if (eps <= 0.0 || eps > 1e-2) throw ContractViolation("grad_check: eps must be in (0, 1e-2]");
    if (inputs.size() != analytic_grads.size()) {
        throw DimensionError("grad_check: inputs/grads count mismatch");
    }
    GradCheckReport report;
    report.pass = true;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        if (!inputs[t].same_shape(analytic_grads[t])) {
            throw DimensionError("grad_check: grad shape mismatch for input " + std::to_string(t));
        }
        std::vector<Tensor> work = inputs;
        for (long i = 0; i < inputs[t].size(); ++i) {
            const double orig = work[t].data()[i];
            work[t].data()[i] = orig + eps;
            const double fp = forward_sum(work);
            work[t].data()[i] = orig - eps;
            const double fm = forward_sum(work);
            work[t].data()[i] = orig;
            if (!std::isfinite(fp) || !std::isfinite(fm)) {
                report.pass = false;
                report.location = "input " + std::to_string(t) + " flat " + std::to_string(i) +
                                  ": non-finite forward value";
                report.max_rel_err = std::numeric_limits<double>::infinity();
                return report;
            }
            const double numeric = (fp - fm) / (2.0 * eps);
            const double analytic = analytic_grads[t].data()[i];
            // the floor turns the check absolute for near-zero entries, where
            // central differences carry ~1e-11 of cancellation noise
            const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
            const double rel = std::abs(numeric - analytic) / denom;
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.location = "input " + std::to_string(t) + " flat " + std::to_string(i);
            }
        }
    }
    report.pass = report.max_rel_err < tol;
    return report;
}

}  // namespace lmot::numerics
