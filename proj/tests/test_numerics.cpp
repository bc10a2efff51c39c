#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lmot/gradsuite.hpp"
#include "lmot/numerics.hpp"

using namespace lmot;
using namespace lmot::numerics;

namespace {

// independent naive reference: six nested loops, zero padding only
Tensor conv2d_naive(const Tensor& in, const Tensor& k, int stride, int pad) {
    const long oh = (in.h() + 2 * pad - k.h()) / stride + 1;
    const long ow = (in.w() + 2 * pad - k.w()) / stride + 1;
    Tensor out(in.n(), k.n(), oh, ow);
    for (long n = 0; n < in.n(); ++n)
        for (long co = 0; co < k.n(); ++co)
            for (long oy = 0; oy < oh; ++oy)
                for (long ox = 0; ox < ow; ++ox) {
                    double acc = 0;
                    for (long ci = 0; ci < in.c(); ++ci)
                        for (long ky = 0; ky < k.h(); ++ky)
                            for (long kx = 0; kx < k.w(); ++kx) {
                                const long iy = oy * stride + ky - pad;
                                const long ix = ox * stride + kx - pad;
                                if (iy < 0 || iy >= in.h() || ix < 0 || ix >= in.w()) continue;
                                acc += in.at(n, ci, iy, ix) * k.at(co, ci, ky, kx);
                            }
                    out.at(n, co, oy, ox) = acc;
                }
    return out;
}

}  // namespace

TEST_CASE("conv2d identity kernel") {
    Tensor in = randn(1, 1, 3, 3, 11);
    Tensor k(1, 1, 1, 1, 1.0);
    Tensor out = conv2d(in, k, {1, Padding::Zero, 0, 1});
    REQUIRE(out.same_shape(in));
    for (long i = 0; i < in.size(); ++i) CHECK(out.data()[i] == doctest::Approx(in.data()[i]).epsilon(1e-12));
}

TEST_CASE("conv2d DC gain one under reflect padding") {
    Tensor in(1, 1, 6, 6, 3.25);
    Tensor k = rand_uniform(1, 1, 3, 3, 5);
    double s = 0;
    for (double v : k.data()) s += v;
    for (double& v : k.data()) v /= s;
    Tensor out = conv2d(in, k, {1, Padding::Reflect, 1, 1});
    REQUIRE(out.same_shape(in));
    for (double v : out.data()) CHECK(v == doctest::Approx(3.25).epsilon(1e-12));
}

TEST_CASE("conv2d matches the naive nested-loop reference") {
    Tensor in = randn(1, 2, 6, 6, 42);
    Tensor k = randn(3, 2, 3, 3, 43);
    for (int stride : {1, 2}) {
        for (int pad : {0, 1}) {
            Tensor got = conv2d(in, k, {stride, Padding::Zero, pad, 1});
            Tensor want = conv2d_naive(in, k, stride, pad);
            REQUIRE(got.same_shape(want));
            for (long i = 0; i < got.size(); ++i)
                CHECK(got.data()[i] == doctest::Approx(want.data()[i]).epsilon(1e-10));
        }
    }
}

TEST_CASE("conv2d grouped matches per-group naive computation") {
    Tensor in = randn(2, 4, 5, 5, 7);
    Tensor k = randn(4, 2, 3, 3, 8);
    Tensor got = conv2d(in, k, {1, Padding::Zero, 1, 2});
    // split into two group convolutions and compare
    for (int g = 0; g < 2; ++g) {
        Tensor in_g(2, 2, 5, 5);
        Tensor k_g(2, 2, 3, 3);
        for (long n = 0; n < 2; ++n)
            for (long c = 0; c < 2; ++c)
                for (long y = 0; y < 5; ++y)
                    for (long x = 0; x < 5; ++x) in_g.at(n, c, y, x) = in.at(n, g * 2 + c, y, x);
        for (long co = 0; co < 2; ++co)
            for (long c = 0; c < 2; ++c)
                for (long y = 0; y < 3; ++y)
                    for (long x = 0; x < 3; ++x) k_g.at(co, c, y, x) = k.at(g * 2 + co, c, y, x);
        Tensor want = conv2d_naive(in_g, k_g, 1, 1);
        for (long n = 0; n < 2; ++n)
            for (long co = 0; co < 2; ++co)
                for (long y = 0; y < 5; ++y)
                    for (long x = 0; x < 5; ++x)
                        CHECK(got.at(n, g * 2 + co, y, x) ==
                              doctest::Approx(want.at(n, co, y, x)).epsilon(1e-10));
    }
}

TEST_CASE("conv2d shape mismatch raises a dimension error") {
    Tensor in = randn(1, 3, 4, 4, 1);
    Tensor k = randn(2, 2, 3, 3, 2);
    CHECK_THROWS_AS(conv2d(in, k, {1, Padding::Zero, 0, 1}), DimensionError);
}

TEST_CASE("conv2d_backward zero cotangent gives zero gradients") {
    Tensor in = randn(1, 2, 5, 5, 3);
    Tensor k = randn(2, 2, 3, 3, 4);
    const Conv2dSpec spec{1, Padding::Zero, 1, 1};
    Tensor g0(1, 2, 5, 5);
    auto grads = conv2d_backward(g0, in, k, spec);
    for (double v : grads.grad_input.data()) CHECK(v == 0.0);
    for (double v : grads.grad_kernel.data()) CHECK(v == 0.0);
}

TEST_CASE("softmax_normalize uniform logits") {
    Tensor logits(1, 1, 5, 5, 0.7);
    Tensor out = softmax_normalize({logits, 1});
    for (double v : out.data()) CHECK(v == doctest::Approx(1.0 / 25.0).epsilon(1e-12));
}

TEST_CASE("softmax_normalize ln(24) center fixture") {
    Tensor logits(1, 1, 5, 5, 0.0);
    logits.at(0, 0, 2, 2) = std::log(24.0);
    Tensor out = softmax_normalize({logits, 1});
    CHECK(out.at(0, 0, 2, 2) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(out.at(0, 0, 0, 0) == doctest::Approx(1.0 / 48.0).epsilon(1e-12));
}

TEST_CASE("softmax_normalize shift invariance and unit sum") {
    Tensor logits = randn(3, 1, 5, 5, 21);
    Tensor shifted = logits;
    for (double& v : shifted.data()) v += 17.5;
    Tensor a = softmax_normalize({logits, 3});
    Tensor b = softmax_normalize({shifted, 3});
    for (long i = 0; i < a.size(); ++i) CHECK(a.data()[i] == doctest::Approx(b.data()[i]).epsilon(1e-12));
    for (long f = 0; f < 3; ++f) {
        double s = 0;
        for (long y = 0; y < 5; ++y)
            for (long x = 0; x < 5; ++x) {
                CHECK(a.at(f, 0, y, x) > 0.0);
                s += a.at(f, 0, y, x);
            }
        CHECK(std::abs(s - 1.0) < 1e-12);
    }
}

TEST_CASE("softmax_normalize_backward constants in the cotangent vanish") {
    Tensor logits = randn(2, 1, 3, 3, 31);
    Tensor out = softmax_normalize({logits, 2});
    Tensor g(2, 1, 3, 3, 4.2);  // constant per filter
    Tensor grad = softmax_normalize_backward(g, out);
    for (double v : grad.data()) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("global_avg_pool fixtures") {
    Tensor ones(2, 3, 4, 4, 1.0);
    Tensor p = global_avg_pool(ones);
    for (double v : p.data()) CHECK(v == 1.0);

    Tensor plane = Tensor::from_data(1, 1, 2, 2, {1, 2, 3, 4});
    CHECK(global_avg_pool(plane).at(0, 0, 0, 0) == doctest::Approx(2.5));

    Tensor single = Tensor::from_data(1, 1, 1, 1, {7.0});
    CHECK(global_avg_pool(single).at(0, 0, 0, 0) == 7.0);
}

TEST_CASE("fully_connected fixtures") {
    Tensor x = Tensor::from_data(1, 3, 1, 1, {1.0, -2.0, 0.5});
    Tensor eye(3, 3, 1, 1);
    for (int i = 0; i < 3; ++i) eye.at(i, i, 0, 0) = 1.0;
    Tensor out = fully_connected(x, eye, {0, 0, 0});
    for (int i = 0; i < 3; ++i) CHECK(out.at(0, i, 0, 0) == doctest::Approx(x.at(0, i, 0, 0)));

    Tensor zero(2, 3, 1, 1);
    Tensor out2 = fully_connected(x, zero, {4.0, -1.0});
    CHECK(out2.at(0, 0, 0, 0) == 4.0);
    CHECK(out2.at(0, 1, 0, 0) == -1.0);
}

TEST_CASE("sigmoid and relu point values") {
    Tensor x = Tensor::from_data(1, 1, 1, 3, {0.0, -3.0, 2.0});
    CHECK(sigmoid(x).at(0, 0, 0, 0) == doctest::Approx(0.5));
    CHECK(relu(x).at(0, 0, 0, 1) == 0.0);
    CHECK(relu(x).at(0, 0, 0, 2) == 2.0);
}

TEST_CASE("grad_check is near-exact on a linear map") {
    Tensor x = randn(1, 1, 4, 4, 55);
    Tensor w = rand_uniform(1, 1, 4, 4, 56);
    auto fwd = [&](const std::vector<Tensor>& in) {
        double acc = 0;
        for (long i = 0; i < in[0].size(); ++i) acc += in[0].data()[i] * w.data()[i];
        return acc;
    };
    auto report = grad_check(fwd, {x}, {w}, 1e-5, 1e-4);
    CHECK(report.pass);
    CHECK(report.max_rel_err < 1e-9);
}

TEST_CASE("grad_check rejects a non-positive or oversized step") {
    Tensor x = randn(1, 1, 2, 2, 1);
    auto fwd = [](const std::vector<Tensor>&) { return 0.0; };
    CHECK_THROWS_AS(grad_check(fwd, {x}, {x}, 0.0, 1e-4), ContractViolation);
    CHECK_THROWS_AS(grad_check(fwd, {x}, {x}, 1.0, 1e-4), ContractViolation);
}

TEST_CASE("gradient suite passes over 20 seeds") {
    auto reports = gradsuite::run_suite(20, 1e-5, 1e-4, false);
    REQUIRE(!reports.empty());
    for (const auto& r : reports) {
        INFO(r.name << " max_rel_err=" << r.max_rel_err);
        CHECK(r.pass);
    }
}

TEST_CASE("gradient suite catches a corrupted backward") {
    auto reports = gradsuite::run_suite(3, 1e-5, 1e-4, true);
    CHECK(!gradsuite::all_pass(reports));
}
