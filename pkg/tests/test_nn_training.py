"""Optimizer oracle, training determinism, early stopping, divergence."""

import csv

import numpy as np
import pytest

from autorc.nn.layers import Dense, Param
from autorc.nn.models import LinearCnnModel
from autorc.nn.optim import Adam
from autorc.nn.training import TrainConfig, TrainingError, train
from autorc.tub import ArrayDataset


def test_adam_two_steps_match_hand_calculation():
    # one scalar parameter, constant gradient g = 2.0, lr = 0.1
    p = Param("p", np.array([1.0]))
    adam = Adam([p], learning_rate=0.1, beta1=0.9, beta2=0.999, eps=1e-8)

    g = 2.0
    m = v = 0.0
    theta = 1.0
    for t in (1, 2):
        p.grad[...] = g
        adam.step()
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        m_hat = m / (1 - 0.9**t)
        v_hat = v / (1 - 0.999**t)
        theta -= 0.1 * m_hat / (np.sqrt(v_hat) + 1e-8)
        assert p.value[0] == pytest.approx(theta, abs=1e-15)


def test_adam_zero_grad_resets():
    p = Param("p", np.zeros(3))
    adam = Adam([p], learning_rate=0.1)
    p.grad += 1.0
    adam.zero_grad()
    np.testing.assert_array_equal(p.grad, np.zeros(3))


def test_adam_rejects_bad_hyper():
    p = Param("p", np.zeros(1))
    with pytest.raises(ValueError):
        Adam([p], learning_rate=0.0)
    with pytest.raises(ValueError):
        Adam([p], beta1=1.0)


def _toy_views(n=24, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.random((n, 120, 160, 3))
    y = rng.uniform(-1.0, 1.0, (n, 2))
    return ArrayDataset(x[: n - 8], y[: n - 8]), ArrayDataset(x[n - 8:], y[n - 8:])


def test_training_is_deterministic():
    tr, va = _toy_views()
    reports = []
    weights = []
    for _ in range(2):
        model = LinearCnnModel(seed=3)
        cfg = TrainConfig(epochs=2, batch_size=8, seed=3, early_stopping=False)
        reports.append(train(model, tr, va, cfg))
        weights.append([p.value.copy() for p in model.params()])
    assert reports[0].epochs[-1].train_mse == reports[1].epochs[-1].train_mse
    for a, b in zip(weights[0], weights[1]):
        np.testing.assert_array_equal(a, b)


def test_early_stopping_stops_and_restores_best():
    tr, va = _toy_views()
    model = LinearCnnModel(seed=1)
    cfg = TrainConfig(epochs=40, batch_size=8, learning_rate=0.5,
                      early_stopping=True, patience=2, seed=1)
    report = train(model, tr, va, cfg)
    assert report.stopped_early
    assert len(report.epochs) < 40
    best = min(e.val_mse for e in report.epochs)
    assert report.best_val_mse == pytest.approx(best)


@pytest.mark.filterwarnings("ignore:overflow encountered")
def test_divergence_raises():
    tr, va = _toy_views()
    model = LinearCnnModel(seed=0)
    # blow up the head weights so the first forward already overflows
    model.params()[0].value[...] *= 1e200
    cfg = TrainConfig(epochs=1, batch_size=8)
    with pytest.raises((TrainingError, FloatingPointError)):
        train(model, tr, va, cfg)


def test_target_train_mse_stops_early():
    rng = np.random.default_rng(0)
    x = rng.random((8, 120, 160, 3))
    y = np.zeros((8, 2))
    view = ArrayDataset(x, y)
    model = LinearCnnModel(seed=0)
    cfg = TrainConfig(epochs=200, batch_size=8, target_train_mse=1e-2,
                      early_stopping=False, seed=0)
    report = train(model, view, view, cfg)
    assert report.epochs[-1].train_mse < 1e-2
    assert len(report.epochs) < 200


def test_report_csv_roundtrip(tmp_path):
    tr, va = _toy_views()
    model = LinearCnnModel(seed=2)
    report = train(model, tr, va, TrainConfig(epochs=2, batch_size=8,
                                              early_stopping=False))
    path = tmp_path / "report.csv"
    report.write_csv(path)
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 2
    assert float(rows[0]["train_mse"]) == pytest.approx(
        report.epochs[0].train_mse, rel=1e-6)


def test_single_dense_converges_on_linear_map():
    # sanity that the optimizer actually minimizes: y = x @ w_true
    rng = np.random.default_rng(4)
    w_true = rng.normal(size=(5, 2))
    x = rng.normal(size=(64, 5))
    y = x @ w_true
    layer = Dense(5, 2, name="d", rng=rng)
    adam = Adam(layer.params(), learning_rate=0.05)
    for _ in range(400):
        pred = layer.forward(x, train=True)
        adam.zero_grad()
        layer.backward(2.0 * (pred - y) / pred.size)
        adam.step()
    final = float(np.mean((layer.forward(x) - y) ** 2))
    assert final < 1e-6
