"""Self-contained neural-network engine.

Tensors are plain float64 numpy arrays (row-major); layers, losses and
the optimizer live in their own modules. Convolution patch kernels have
a compiled fast path with a pure-numpy fallback, selected at import
(see :mod:`autorc.nn.kernels`).
"""

from .container import (
    ArchitectureError,
    ArrayShapeError,
    BadMagicError,
    TruncatedError,
    VersionError,
    WeightsError,
    load_model,
    load_weights,
    read_container_meta,
    save_weights,
)
from .kernels import BACKEND
from .layers import NonFiniteError, Param, ShapeError
from .losses import mse, mse_grad
from .models import LinearCnnModel, Model, RnnModel, build_model
from .optim import Adam
from .saliency import overlay, saliency
from .training import TrainConfig, TrainingError, TrainingReport, train

__all__ = [
    "Adam",
    "ArchitectureError",
    "ArrayShapeError",
    "BACKEND",
    "BadMagicError",
    "LinearCnnModel",
    "Model",
    "NonFiniteError",
    "Param",
    "RnnModel",
    "ShapeError",
    "TrainConfig",
    "TrainingError",
    "TrainingReport",
    "TruncatedError",
    "VersionError",
    "WeightsError",
    "build_model",
    "load_model",
    "load_weights",
    "mse",
    "mse_grad",
    "overlay",
    "read_container_meta",
    "saliency",
    "save_weights",
    "train",
]
