"""Convolution kernel backend selection.

Two interchangeable implementations of the patch gather/scatter pair
(`im2col` / `col2im`):

* ``native``: compiled extension, built at install time when a C
  toolchain is present
* ``numpy``: pure-python fallback, always available

Selection happens once at import. The ``AUTORC_KERNELS`` environment
variable forces a backend: ``native``, ``numpy``, or ``auto``
(default). Forcing ``native`` when the extension is missing raises, so
deployments that rely on it fail loudly.
"""

from __future__ import annotations

import os

from . import numpy_backend

_choice = os.environ.get("AUTORC_KERNELS", "auto").strip().lower()

if _choice not in ("auto", "native", "numpy"):
    raise ValueError(
        f"AUTORC_KERNELS must be auto, native or numpy, got {_choice!r}"
    )

_backend = None
if _choice in ("auto", "native"):
    try:
        from . import _native as _backend  # type: ignore[no-redef]
    except ImportError:
        if _choice == "native":
            raise
        _backend = None
if _backend is None:
    _backend = numpy_backend

BACKEND = _backend.NAME
im2col = _backend.im2col
col2im = _backend.col2im
conv_out_size = numpy_backend.conv_out_size

__all__ = ["BACKEND", "im2col", "col2im", "conv_out_size", "numpy_backend"]
