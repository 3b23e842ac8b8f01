"""Smoke tests for the vw4c extension module.

Run directly (PYTHONPATH must include the built module):
    python3 python/tests/test_smoke.py
"""

import math
import os
import sys
import tempfile

import numpy as np

import vw4c


def test_elu():
    x = np.array([0.0, 2.0, -1.0]).reshape(1, 1, 1, 3)
    y = vw4c.elu(x)
    assert y.shape == (1, 1, 1, 3)
    assert y[0, 0, 0, 0] == 0.0
    assert y[0, 0, 0, 1] == 2.0
    assert abs(y[0, 0, 0, 2] - (math.exp(-1.0) - 1.0)) < 1e-12


def test_conv2d():
    x = np.ones((1, 1, 3, 3))
    w = np.ones((1, 1, 3, 3))
    b = np.zeros(1)
    y = vw4c.conv2d(x, w, b)
    assert y.shape == (1, 1, 1, 1)
    assert abs(y[0, 0, 0, 0] - 9.0) < 1e-12


def test_max_pool2d():
    x = np.array([[1.0, 2.0], [3.0, 4.0]]).reshape(1, 1, 2, 2)
    y = vw4c.max_pool2d(x)
    assert y[0, 0, 0, 0] == 4.0


def test_group_norm():
    rng = np.random.RandomState(0)
    x = rng.randn(2, 4, 3, 3)
    y = vw4c.group_norm(x, 2, np.ones(4), np.zeros(4))
    group = y[:, :2].reshape(2, -1)
    assert np.all(np.abs(group.mean(axis=1)) < 1e-6)


def test_losses():
    pred = np.zeros((1, 128, 4, 4))
    target = np.zeros((1, 128, 4, 4))
    mask = np.ones((1, 128, 4, 4))
    value, breakdown = vw4c.masked_l2(pred, target, mask)
    assert value == 0.0
    assert set(breakdown) == {"temperature", "crr_intensity", "asii_turb_trop_prob", "cma"}

    pred[:, 0::4] = 1.0  # unit error on every temperature channel
    value, breakdown = vw4c.masked_l2(pred, target, mask)
    assert abs(value - 7.9025) < 1e-9
    assert abs(breakdown["temperature"] - 7.9025) < 1e-9

    assert vw4c.kl_divergence(np.zeros(8), np.ones(8)) == 0.0
    assert abs(vw4c.kl_divergence(np.ones(512), np.ones(512)) - 256.0) < 1e-9
    assert vw4c.total_loss(0.0, 1.0) == 80.0


def test_schedule():
    assert vw4c.cyclic_cosine_lr(0, 100) == 2e-4
    assert abs(vw4c.cyclic_cosine_lr(50, 100) - 1e-4) < 1e-12


def test_model_shapes():
    m = vw4c.Model(in_channels=35, out_channels=128, levels=2, base_width=4,
                   latent_dim=8, dropout_rate=0.0, groups=4, input_size=8, seed=3)
    x = np.random.RandomState(1).rand(2, 35, 8, 8)
    y, mu, sigma = m.forward(x)
    assert y.shape == (2, 128, 8, 8)
    assert mu.shape == (2, 8)
    assert sigma.shape == (2, 8)
    assert np.all(sigma > 0)
    assert np.all(np.isfinite(y))
    # mean mode is deterministic
    y2, _, _ = m.forward(x)
    assert np.array_equal(y, y2)
    assert m.param_count() > 0


def test_model_checkpoint_roundtrip():
    m = vw4c.Model(in_channels=35, out_channels=128, levels=2, base_width=4,
                   latent_dim=8, dropout_rate=0.0, groups=4, input_size=8, seed=4)
    x = np.random.RandomState(2).rand(1, 35, 8, 8)
    y1, _, _ = m.forward(x)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "model.ckpt")
        m.save(path)
        restored = vw4c.Model.load(path)
        y2, _, _ = restored.forward(x)
    assert np.array_equal(y1, y2)


def test_dataset_generation():
    with tempfile.TemporaryDirectory() as tmp:
        vw4c.generate_dataset(tmp, size=8, days=1, frames=40, missing=0.0, seed=9)
        assert vw4c.window_count(tmp) == 5  # 40 - 36 + 1


def test_config_errors_are_python_exceptions():
    try:
        vw4c.Model(input_size=10, levels=4)
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError for an invalid config")


def main():
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for test in tests:
        test()
        print(f"ok  {test.__name__}")
    print(f"{len(tests)} smoke tests passed")


if __name__ == "__main__":
    sys.exit(main())
