#include "lmot/gradsuite.hpp"

#include <algorithm>
#include <cmath>

#include "lmot/ald.hpp"
#include "lmot/numerics.hpp"

namespace lmot::gradsuite {

using namespace numerics;
using ald::ALDBlock;
using ald::ALDCache;
using ald::ALDGrads;

namespace {

constexpr double kEpsDefault = 1e-5;

// keep relu inputs away from the kink so central differences stay valid
Tensor randn_off_zero(long n, long c, long h, long w, std::uint64_t seed) {
    Tensor t = randn(n, c, h, w, seed);
    for (double& v : t.data()) {
        if (std::abs(v) < 1e-3) v = v < 0 ? v - 1e-3 : v + 1e-3;
    }
    return t;
}

double weighted_sum(const Tensor& out, const Tensor& weights) {
    double acc = 0.0;
    for (long i = 0; i < out.size(); ++i) acc += out.data()[i] * weights.data()[i];
    return acc;
}

void merge(std::vector<OpReport>& reports, const std::string& name, const GradCheckReport& r) {
    for (auto& existing : reports) {
        if (existing.name == name) {
            existing.max_rel_err = std::max(existing.max_rel_err, r.max_rel_err);
            existing.pass = existing.pass && r.pass;
            return;
        }
    }
    reports.push_back({name, r.max_rel_err, r.pass});
}

}  // namespace

std::vector<OpReport> run_suite(int n_seeds, double eps, double tol, bool mutate) {
    std::vector<OpReport> reports;
    if (eps <= 0) eps = kEpsDefault;

    for (int s = 0; s < n_seeds; ++s) {
        const std::uint64_t seed = 1000 + 17 * static_cast<std::uint64_t>(s);

        // conv2d, alternating padding mode / stride / groups across seeds
        {
            const Conv2dSpec spec{(s % 2) + 1, s % 3 == 0 ? Padding::Reflect : Padding::Zero, 1,
                                  s % 4 == 0 ? 2 : 1};
            const long cin = spec.groups == 2 ? 4 : 2;
            const long cout = spec.groups == 2 ? 2 : 3;
            const Tensor input = randn(2, cin, 6, 6, seed);
            const Tensor kernel = randn(cout, cin / spec.groups, 3, 3, seed + 1);
            const Tensor probe = rand_uniform(conv2d(input, kernel, spec).n(), cout,
                                              conv2d(input, kernel, spec).h(),
                                              conv2d(input, kernel, spec).w(), seed + 2);
            Conv2dGrads g = conv2d_backward(probe, input, kernel, spec);
            if (mutate) g.grad_kernel.data()[0] *= 2.0;
            const auto fwd = [&](const std::vector<Tensor>& in) {
                return weighted_sum(conv2d(in[0], in[1], spec), probe);
            };
            merge(reports, "conv2d", grad_check(fwd, {input, kernel}, {g.grad_input, g.grad_kernel}, eps, tol));
        }

        // softmax_normalize over a (4,1,5,5) and a (3,2,3,3) support
        {
            const bool depthwise = s % 2 == 0;
            const Tensor logits = randn(depthwise ? 4 : 3, depthwise ? 1 : 2, depthwise ? 5 : 3,
                                        depthwise ? 5 : 3, seed + 3);
            const int groups = depthwise ? 4 : 1;
            const Tensor out = softmax_normalize({logits, groups});
            const Tensor probe = rand_uniform(out.n(), out.c(), out.h(), out.w(), seed + 4);
            const Tensor grad = softmax_normalize_backward(probe, out);
            const auto fwd = [&](const std::vector<Tensor>& in) {
                return weighted_sum(softmax_normalize({in[0], groups}), probe);
            };
            merge(reports, "softmax_normalize", grad_check(fwd, {logits}, {grad}, eps, tol));
        }

        // fully_connected; bias passed as a (1,Cout,1,1) tensor
        {
            const Tensor x = randn(2, 4, 1, 1, seed + 5);
            const Tensor w = randn(3, 4, 1, 1, seed + 6);
            const Tensor b = randn(1, 3, 1, 1, seed + 7);
            const Tensor probe = rand_uniform(2, 3, 1, 1, seed + 8);
            const auto as_bias = [](const Tensor& t) {
                return std::vector<double>(t.data().begin(), t.data().end());
            };
            FcGrads g = fully_connected_backward(probe, x, w);
            Tensor gb = Tensor::from_data(1, 3, 1, 1, g.grad_bias);
            const auto fwd = [&](const std::vector<Tensor>& in) {
                return weighted_sum(fully_connected(in[0], in[1], as_bias(in[2])), probe);
            };
            merge(reports, "fully_connected",
                  grad_check(fwd, {x, w, b}, {g.grad_x, g.grad_weights, gb}, eps, tol));
        }

        // sigmoid / relu
        {
            const Tensor x = randn(2, 4, 8, 8, seed + 9);
            const Tensor probe = rand_uniform(2, 4, 8, 8, seed + 10);
            const Tensor out = sigmoid(x);
            const auto fwd = [&](const std::vector<Tensor>& in) { return weighted_sum(sigmoid(in[0]), probe); };
            merge(reports, "sigmoid", grad_check(fwd, {x}, {sigmoid_backward(probe, out)}, eps, tol));
        }
        {
            const Tensor x = randn_off_zero(2, 4, 8, 8, seed + 11);
            const Tensor probe = rand_uniform(2, 4, 8, 8, seed + 12);
            const auto fwd = [&](const std::vector<Tensor>& in) { return weighted_sum(relu(in[0]), probe); };
            merge(reports, "relu", grad_check(fwd, {x}, {relu_backward(probe, x)}, eps, tol));
        }

        // global_avg_pool
        {
            const Tensor x = randn(2, 3, 5, 7, seed + 13);
            const Tensor probe = rand_uniform(2, 3, 1, 1, seed + 14);
            const auto fwd = [&](const std::vector<Tensor>& in) {
                return weighted_sum(global_avg_pool(in[0]), probe);
            };
            merge(reports, "global_avg_pool",
                  grad_check(fwd, {x}, {global_avg_pool_backward(probe, 5, 7)}, eps, tol));
        }

        // ald_forward through all parameters and the input
        {
            const int C = 3;
            const ALDBlock block = ald::ald_init(C, seed + 15);
            const Tensor x = randn(1, C, 8, 8, seed + 16);
            ALDCache cache;
            const Tensor y = ald::ald_forward(block, x, cache);
            const Tensor probe = rand_uniform(y.n(), y.c(), y.h(), y.w(), seed + 17);
            const ALDGrads g = ald::ald_backward(block, cache, probe);
            const Tensor gb = Tensor::from_data(1, C, 1, 1, g.grad_fc_bias);
            const auto fwd = [&](const std::vector<Tensor>& in) {
                ALDBlock b = block;
                b.sconv_logits = in[1];
                b.down_kernel = in[2];
                b.fc_weights = in[3];
                b.fc_bias.assign(in[4].data().begin(), in[4].data().end());
                ALDCache c;
                return weighted_sum(ald::ald_forward(b, in[0], c), probe);
            };
            const Tensor bias = Tensor::from_data(1, C, 1, 1, block.fc_bias);
            merge(reports, "ald_forward",
                  grad_check(fwd, {x, block.sconv_logits, block.down_kernel, block.fc_weights, bias},
                             {g.grad_x, g.grad_sconv_logits, g.grad_down_kernel, g.grad_fc_weights, gb}, eps,
                             tol));
        }

        // loss_ds / loss_tv
        {
            const std::vector<Tensor> well = {randn(1, 2, 4, 4, seed + 18), randn(1, 2, 3, 3, seed + 19)};
            const std::vector<Tensor> low = {randn(1, 2, 4, 4, seed + 20), randn(1, 2, 3, 3, seed + 21)};
            ald::LossGrad g = ald::loss_ds(well, low, false);
            const auto fwd = [&](const std::vector<Tensor>& in) {
                return ald::loss_ds({in[2], in[3]}, {in[0], in[1]}, false).value;
            };
            merge(reports, "loss_ds",
                  grad_check(fwd, {low[0], low[1], well[0], well[1]},
                             {g.grad_low[0], g.grad_low[1], g.grad_well[0], g.grad_well[1]}, eps, tol));

            ald::LossGrad tv = ald::loss_tv(low);
            const auto fwd_tv = [&](const std::vector<Tensor>& in) {
                return ald::loss_tv({in[0], in[1]}).value;
            };
            merge(reports, "loss_tv",
                  grad_check(fwd_tv, {low[0], low[1]}, {tv.grad_low[0], tv.grad_low[1]}, eps, tol));
        }
    }
    return reports;
}

bool all_pass(const std::vector<OpReport>& reports) {
    return std::all_of(reports.begin(), reports.end(), [](const OpReport& r) { return r.pass; });
}

}  // namespace lmot::gradsuite
