"""Smoke tests for the pylmot extension module."""

import math

import numpy as np
import pytest

import pylmot


def test_conv2d_identity():
    x = np.random.default_rng(0).normal(size=(1, 1, 6, 6))
    k = np.zeros((1, 1, 3, 3))
    k[0, 0, 1, 1] = 1.0
    y = pylmot.conv2d(x, k, stride=1, padding="zero", pad=1)
    np.testing.assert_allclose(y, x, atol=1e-12)


def test_softmax_kernel_is_a_distribution():
    logits = np.random.default_rng(1).normal(size=(2, 3, 5, 5))
    k = pylmot.softmax_kernel(logits)
    assert (k > 0).all()
    np.testing.assert_allclose(k.reshape(2, -1).sum(axis=1), 1.0, atol=1e-12)


def test_gaussian_init_kernel():
    k = pylmot.gaussian_kernel_5x5()
    assert k.shape == (1, 1, 5, 5)
    assert abs(k.sum() - 1.0) < 1e-12
    assert k[0, 0, 2, 2] == k.max()


def test_downsample_block_halves_resolution():
    block = pylmot.DownsampleBlock(channels=4, seed=3)
    x = np.abs(np.random.default_rng(2).normal(size=(1, 4, 16, 16)))
    y, w = block.forward(x)
    assert y.shape == (1, 4, 8, 8)
    assert w.shape == (1, 4, 1, 1)
    assert ((w > 0) & (w < 1)).all()


def test_losses():
    a = np.ones((1, 1, 2, 2))
    b = np.zeros((1, 1, 2, 2))
    assert pylmot.feature_loss(a, b) == 4.0
    ramp = np.array([[[[0.0, 1.0], [0.0, 1.0]]]])
    assert pylmot.smoothness_loss(ramp) == 2.0
    assert abs(pylmot.total_loss(1, 2, 3, 4) - 6.04) < 1e-12


def test_gradient_suite():
    results = pylmot.run_gradient_suite(seeds=3)
    assert results, "suite returned no ops"
    for name, (ok, err) in results.items():
        assert ok, f"{name}: max_rel_err={err}"


def test_noise_determinism_and_variance():
    clean = np.full((64, 64), 1240, dtype=np.uint16)
    a = pylmot.synthesize_noise(clean, seed=5, K=2.0, sigma_read=3.0)
    b = pylmot.synthesize_noise(clean, seed=5, K=2.0, sigma_read=3.0)
    c = pylmot.synthesize_noise(clean, seed=6, K=2.0, sigma_read=3.0)
    assert (a == b).all()
    assert (a != c).any()
    v = pylmot.noise_model_variance(1000.0, K=2.0, sigma_read=3.0)
    assert v == pytest.approx(2009.0)


def test_iou_and_hungarian():
    assert pylmot.iou(0, 0, 10, 10, 0, 0, 10, 10) == 1.0
    assert pylmot.iou(0, 0, 10, 10, 5, 0, 10, 10) == pytest.approx(50.0 / 150.0)
    pairs, cost = pylmot.hungarian([[1.0, 2.0], [2.0, 4.0]])
    assert sorted(pairs) == [(0, 1), (1, 0)]
    assert cost == 4.0


def test_tracker_end_to_end_with_evaluation():
    dets, gt = [], []
    for f in range(1, 31):
        for obj, (x0, v) in enumerate([(0.0, 3.0), (300.0, -2.0)]):
            x = x0 + v * (f - 1)
            gt.append((f, obj + 1, x, 50.0, 30.0, 60.0, 1))
            if not (obj == 0 and f in (10, 11)):  # short dropout for object 0
                dets.append((f, x, 50.0, 30.0, 60.0, 0.9, 1))
    rows = pylmot.run_tracker(dets)
    ids = {r[1] for r in rows}
    assert len(ids) == 2
    pred = [(r[0], r[1], r[2], r[3], r[4], r[5], r[7]) for r in rows]
    scores = pylmot.evaluate(gt, pred)
    assert scores["idf1"] > 0.95
    assert scores["mota"] > 0.95
    assert scores["hota"] > 0.9


def test_error_mapping():
    with pytest.raises(ValueError):
        pylmot.conv2d(np.ones((1, 1, 2, 2)), np.ones((1, 2, 3, 3)))
    with pytest.raises(ValueError):
        pylmot.synthesize_noise(np.zeros((4, 4), dtype=np.uint16), seed=1, ratio=0.0)


def test_toy_train_short_run():
    r = pylmot.toy_train(use_dsl=True, steps=5, seed=7)
    assert math.isfinite(r["final_train_loss"])
    assert r["heldout_feature_distance"] > 0.0
