#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lmot/ald.hpp"
#include "lmot/toy.hpp"

using namespace lmot;
using namespace lmot::ald;
using namespace lmot::numerics;

TEST_CASE("gaussian 5x5 kernel: unit sum, symmetric, pinned center weight") {
    Tensor g = gaussian_kernel_5x5();
    double s = 0;
    for (double v : g.data()) s += v;
    CHECK(std::abs(s - 1.0) < 1e-12);
    // discrete sigma=1 Gaussian over a 5x5 support, renormalized
    double num = 0, den = 0;
    for (int y = -2; y <= 2; ++y)
        for (int x = -2; x <= 2; ++x) {
            const double w = std::exp(-(y * y + x * x) / 2.0);
            den += w;
            if (y == 0 && x == 0) num = w;
        }
    CHECK(std::abs(g.at(0, 0, 2, 2) - num / den) < 1e-9);
    CHECK(g.at(0, 0, 0, 1) == doctest::Approx(g.at(0, 0, 4, 3)).epsilon(1e-12));
}

TEST_CASE("ald_init low-pass branch reproduces the Gaussian after softmax") {
    ALDBlock block = ald_init(3, 99);
    Tensor norm = softmax_normalize({block.sconv_logits, 3});
    Tensor g = gaussian_kernel_5x5();
    for (long c = 0; c < 3; ++c)
        for (long y = 0; y < 5; ++y)
            for (long x = 0; x < 5; ++x)
                CHECK(std::abs(norm.at(c, 0, y, x) - g.at(0, 0, y, x)) < 1e-9);
}

TEST_CASE("ald_init determinism") {
    ALDBlock a = ald_init(4, 123), b = ald_init(4, 123);
    CHECK(a.down_kernel.data() == b.down_kernel.data());
    CHECK(a.fc_weights.data() == b.fc_weights.data());
    CHECK(a.fc_bias == b.fc_bias);
}

TEST_CASE("ald_forward fusion off: output equals the main branch") {
    ALDBlock block = ald_init(2, 5);
    for (double& b : block.fc_bias) b = -1e6;  // sigmoid -> 0
    Tensor x = randn(1, 2, 8, 8, 6);
    ALDCache cache;
    Tensor y = ald_forward(block, x, cache);
    for (long i = 0; i < y.size(); ++i)
        CHECK(std::abs(y.data()[i] - cache.orig.data()[i]) < 1e-6);
}

TEST_CASE("ald_forward constant input with zero main kernels: y = w*c") {
    ALDBlock block = ald_init(2, 7);
    for (double& v : block.down_kernel.data()) v = 0.0;
    const double c = 0.8;
    Tensor x(1, 2, 8, 8, c);
    ALDCache cache;
    Tensor y = ald_forward(block, x, cache);
    // the low branch preserves constants (unit-sum kernel), orig is zero
    for (long ch = 0; ch < 2; ++ch) {
        const double w = cache.fusion_weights.at(0, ch, 0, 0);
        for (long i = 0; i < y.h(); ++i)
            for (long j = 0; j < y.w(); ++j)
                CHECK(y.at(0, ch, i, j) == doctest::Approx(w * c).epsilon(1e-9));
    }
}

TEST_CASE("ald_forward equals the composition of the individual ops") {
    ALDBlock block = ald_init(2, 17);
    Tensor x = randn(1, 2, 8, 8, 18);
    ALDCache cache;
    Tensor y = ald_forward(block, x, cache);

    Tensor k = softmax_normalize({block.sconv_logits, 2});
    Tensor low = conv2d(x, k, {2, numerics::Padding::Reflect, 2, 2});
    Tensor orig = conv2d(x, block.down_kernel, {2, numerics::Padding::Zero, 1, 1});
    REQUIRE(low.same_shape(orig));
    Tensor stacked(1, 4, 1, 1);
    Tensor p_orig = global_avg_pool(orig), p_low = global_avg_pool(low);
    for (long c = 0; c < 2; ++c) {
        stacked.at(0, c, 0, 0) = p_orig.at(0, c, 0, 0);
        stacked.at(0, 2 + c, 0, 0) = p_low.at(0, c, 0, 0);
    }
    Tensor w = sigmoid(fully_connected(stacked, block.fc_weights, block.fc_bias));
    for (long c = 0; c < 2; ++c)
        for (long i = 0; i < y.h(); ++i)
            for (long j = 0; j < y.w(); ++j) {
                const double want = orig.at(0, c, i, j) + w.at(0, c, 0, 0) * low.at(0, c, i, j);
                CHECK(y.at(0, c, i, j) == doctest::Approx(want).epsilon(1e-10));
            }
}

TEST_CASE("ald_backward zero cotangent and stale cache") {
    ALDBlock block = ald_init(2, 20);
    Tensor x = randn(1, 2, 8, 8, 21);
    ALDCache cache;
    Tensor y = ald_forward(block, x, cache);
    ALDGrads g = ald_backward(block, cache, Tensor(y.n(), y.c(), y.h(), y.w()));
    for (double v : g.grad_x.data()) CHECK(v == 0.0);
    for (double v : g.grad_sconv_logits.data()) CHECK(v == 0.0);

    ALDCache stale;
    CHECK_THROWS_AS(ald_backward(block, stale, y), ContractViolation);
}

TEST_CASE("loss_ds fixtures") {
    CHECK(loss_ds({randn(1, 1, 3, 3, 1)}, {randn(1, 1, 3, 3, 1)}).value == doctest::Approx(0.0));
    Tensor well(1, 1, 2, 2, 1.0), low(1, 1, 2, 2, 0.0);
    LossGrad g = loss_ds({well}, {low});
    CHECK(g.value == doctest::Approx(4.0));
    // mismatched layer shapes name the layer index
    CHECK_THROWS_AS(loss_ds({Tensor(1, 1, 2, 2)}, {Tensor(1, 1, 3, 3)}), DimensionError);
}

TEST_CASE("loss_ds detach keeps the well-side gradient at zero") {
    Tensor well = randn(1, 2, 3, 3, 2), low = randn(1, 2, 3, 3, 3);
    LossGrad g = loss_ds({well}, {low}, true);
    for (double v : g.grad_well[0].data()) CHECK(v == 0.0);
    LossGrad g2 = loss_ds({well}, {low}, false);
    bool any = false;
    for (double v : g2.grad_well[0].data()) any = any || v != 0.0;
    CHECK(any);
}

TEST_CASE("loss_tv fixtures") {
    CHECK(loss_tv({Tensor(1, 2, 4, 4, 3.0)}).value == doctest::Approx(0.0));
    Tensor m = Tensor::from_data(1, 1, 2, 2, {0, 1, 0, 1});
    CHECK(loss_tv({m}).value == doctest::Approx(2.0));
    CHECK_THROWS_AS(loss_tv({Tensor(1, 1, 1, 1, 0.0)}), DimensionError);
}

TEST_CASE("loss_total fixtures") {
    CHECK(loss_total(1, 2, 3, 4, {}) == doctest::Approx(6.04));
    CHECK(loss_total(0, 0, 0, 0, {}) == doctest::Approx(0.0));
    DSLConfig off{1.0, 0.0, 0.0, false};
    CHECK(loss_total(0.3, 0.7, 123.0, 456.0, off) == doctest::Approx(1.0));
    CHECK_THROWS_AS(loss_total(-1.0, 0, 0, 0, {}), ContractViolation);
}

TEST_CASE("toy_train determinism and steps=0") {
    ToyTrainConfig cfg;
    cfg.steps = 3;
    cfg.data.image_size = 8;
    cfg.data.n_train = 2;
    cfg.data.n_heldout = 1;
    ToyReport a = toy_train(cfg), b = toy_train(cfg);
    CHECK(a.heldout_feature_distance == b.heldout_feature_distance);
    CHECK(a.final_train_loss == b.final_train_loss);

    cfg.steps = 0;
    ToyReport init = toy_train(cfg);
    CHECK(init.steps == 0);
    CHECK(init.heldout_feature_distance > 0.0);
}
