"""Training loop: Adam on joint MSE with optional early stopping."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from .losses import mse, mse_grad
from .models import Model
from .optim import Adam


class TrainingError(RuntimeError):
    """Raised when training cannot proceed (divergence, empty data)."""


@dataclass
class TrainConfig:
    epochs: int = 60
    batch_size: int = 64
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    early_stopping: bool = True
    patience: int = 5
    min_delta: float = 1e-5
    target_train_mse: float | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be > 0")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


@dataclass
class EpochStats:
    epoch: int
    train_mse: float
    val_mse: float
    seconds: float


@dataclass
class TrainingReport:
    epochs: list[EpochStats] = field(default_factory=list)
    best_epoch: int = -1
    best_val_mse: float = float("inf")
    wall_seconds: float = 0.0
    stopped_early: bool = False

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["epoch", "train_mse", "val_mse", "seconds"])
            for e in self.epochs:
                writer.writerow([e.epoch, f"{e.train_mse:.8e}", f"{e.val_mse:.8e}",
                                 f"{e.seconds:.3f}"])


def _eval_mse(model: Model, view, batch_size: int, sequence_len: int) -> float:
    total_se = 0.0
    total_n = 0
    for x, y in view.batches(batch_size, seed=0, sequence_len=sequence_len,
                             shuffle=False):
        pred = model.forward(x, train=False)
        diff = pred - y
        total_se += float(np.sum(diff * diff))
        total_n += diff.size
    if total_n == 0:
        raise TrainingError("validation view is empty")
    return total_se / total_n


def train(model: Model, train_view, val_view, cfg: TrainConfig,
          log=None) -> TrainingReport:
    """Fit the model, tracking per-epoch MSE and restoring best-val weights.

    ``train_view`` / ``val_view`` are anything with ``batches(batch_size,
    seed, sequence_len, shuffle)`` and ``window_count(sequence_len)``.
    Deterministic for a fixed config seed: per-epoch shuffles derive
    from it, and Adam state carries no other randomness.
    """
    T = model.sequence_len
    if train_view.window_count(T) == 0:
        raise TrainingError("training view has no usable samples")
    if val_view.window_count(T) == 0:
        raise TrainingError("validation view has no usable samples")

    params = model.params()
    adam = Adam(params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    report = TrainingReport()
    best_weights: list[np.ndarray] | None = None
    stale = 0
    start = time.perf_counter()

    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        se = 0.0
        n = 0
        for x, y in train_view.batches(cfg.batch_size,
                                       seed=cfg.seed + 9973 * epoch,
                                       sequence_len=T, shuffle=True):
            pred = model.forward(x, train=True)
            loss = mse(pred, y)
            if not np.isfinite(loss):
                raise TrainingError(f"loss diverged at epoch {epoch}")
            se += loss * pred.size
            n += pred.size
            adam.zero_grad()
            model.backward(mse_grad(pred, y))
            adam.step()
        train_mse = se / n
        val_mse = _eval_mse(model, val_view, cfg.batch_size, T)
        stats = EpochStats(epoch, train_mse, val_mse, time.perf_counter() - t0)
        report.epochs.append(stats)
        if log is not None:
            log(f"epoch {epoch:3d}  train_mse {train_mse:.6e}  "
                f"val_mse {val_mse:.6e}  {stats.seconds:.1f}s")

        if val_mse < report.best_val_mse - cfg.min_delta:
            report.best_val_mse = val_mse
            report.best_epoch = epoch
            best_weights = [p.value.copy() for p in params]
            stale = 0
        else:
            stale += 1
            if cfg.early_stopping and stale >= cfg.patience:
                report.stopped_early = True
                break
        if cfg.target_train_mse is not None and train_mse < cfg.target_train_mse:
            report.stopped_early = True
            break

    if best_weights is not None:
        for p, w in zip(params, best_weights):
            p.value[...] = w
    report.wall_seconds = time.perf_counter() - start
    return report
