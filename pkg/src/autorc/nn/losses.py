"""Loss functions.

Only mean squared error: both control heads are regression targets and
share one joint mean over every output element in the batch.
"""

from __future__ import annotations

import numpy as np


def mse(pred: np.ndarray, target: np.ndarray) -> float:
    if pred.shape != target.shape:
        raise ValueError(f"pred {pred.shape} vs target {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff))


def mse_grad(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """d mse / d pred, matching the mean over all elements."""
    if pred.shape != target.shape:
        raise ValueError(f"pred {pred.shape} vs target {target.shape}")
    return (2.0 / pred.size) * (pred - target)
