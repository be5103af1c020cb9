"""Backward passes vs central finite differences, all in float64.

The tolerance is 1e-4 relative error at eps = 1e-5. Shapes stay small so
the full battery runs in seconds.
"""

import numpy as np
import pytest

from autorc.nn.layers import LSTM, Conv2D, Dense, Flatten, ReLU, Sequential, TimeDistributed
from autorc.nn.losses import mse, mse_grad

import fd

TOL = 1e-4


@pytest.mark.parametrize("case", [
    "conv2d", "dense", "relu", "lstm_bptt_sequences", "lstm_bptt_last_step",
    "time_distributed_composition", "mse",
])
@pytest.mark.parametrize("seed", [0, 1])
def test_standard_battery(case, seed):
    errs = fd.standard_checks(seed)
    assert errs[case] < TOL, f"{case}: rel err {errs[case]:.3e}"


@pytest.mark.parametrize("stride", [1, 2, 3])
def test_conv_strides(rng, stride):
    layer = Conv2D(2, 3, kernel=3, stride=stride, name="c", rng=rng)
    x = rng.normal(size=(2, 9, 11, 2))
    errs = fd.layer_grad_check(layer, x)
    assert max(errs.values()) < TOL


def test_conv_kernel_one(rng):
    layer = Conv2D(3, 2, kernel=1, stride=1, name="c1", rng=rng)
    errs = fd.layer_grad_check(layer, rng.normal(size=(2, 4, 5, 3)))
    assert max(errs.values()) < TOL


def test_dense_glorot(rng):
    layer = Dense(6, 4, name="d", rng=rng, init="glorot")
    errs = fd.layer_grad_check(layer, rng.normal(size=(3, 6)))
    assert max(errs.values()) < TOL


def test_lstm_single_step(rng):
    # T=1 exercises the h_prev=0 boundary of the recurrence
    layer = LSTM(4, 3, name="l", rng=rng, return_sequences=False)
    errs = fd.layer_grad_check(layer, rng.normal(size=(2, 1, 4)))
    assert max(errs.values()) < TOL


def test_stacked_lstm_composition(rng):
    stack = Sequential([
        LSTM(5, 4, name="l1", rng=rng, return_sequences=True),
        LSTM(4, 3, name="l2", rng=rng, return_sequences=False),
        Dense(3, 2, name="head", rng=rng),
    ], name="stack")
    errs = fd.layer_grad_check(stack, rng.normal(size=(2, 4, 5)))
    assert max(errs.values()) < TOL


def test_flatten_roundtrip(rng):
    layer = Flatten()
    x = rng.normal(size=(2, 3, 4, 5))
    out = layer.forward(x, train=True)
    assert out.shape == (2, 60)
    back = layer.backward(out)
    assert back.shape == x.shape
    np.testing.assert_array_equal(back, x)


def test_mse_matches_hand_value():
    pred = np.array([[1.0, 2.0], [3.0, 4.0]])
    target = np.array([[0.0, 2.0], [5.0, 2.0]])
    # mean over all four entries: (1 + 0 + 4 + 4) / 4
    assert mse(pred, target) == pytest.approx(2.25)
    np.testing.assert_allclose(mse_grad(pred, target),
                               np.array([[0.5, 0.0], [-1.0, 1.0]]))


def test_relu_subgradient_at_zero_is_zero(rng):
    layer = ReLU()
    x = np.array([[0.0, -1.0, 2.0]])
    layer.forward(x, train=True)
    dx = layer.backward(np.ones_like(x))
    np.testing.assert_array_equal(dx, [[0.0, 0.0, 1.0]])
