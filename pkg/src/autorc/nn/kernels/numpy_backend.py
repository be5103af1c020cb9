"""Pure-numpy convolution kernels.

Fallback backend: patch extraction via a strided view (the reshape
makes the copy) and the scatter-add inverse as a k*k loop of strided
slice adds. Always available; the compiled backend replaces these two
functions when its extension module imported cleanly.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided

NAME = "numpy"


def conv_out_size(size: int, kernel: int, stride: int) -> int:
    return (size - kernel) // stride + 1


def im2col(x: np.ndarray, kernel: int, stride: int) -> np.ndarray:
    """(B,H,W,C) -> (B*OH*OW, kernel*kernel*C) patch matrix, valid padding."""
    b, h, w, c = x.shape
    oh = conv_out_size(h, kernel, stride)
    ow = conv_out_size(w, kernel, stride)
    sb, sh, sw, sc = x.strides
    view = as_strided(
        x,
        shape=(b, oh, ow, kernel, kernel, c),
        strides=(sb, sh * stride, sw * stride, sh, sw, sc),
    )
    return np.ascontiguousarray(view).reshape(b * oh * ow, kernel * kernel * c)


def col2im(cols: np.ndarray, x_shape: tuple, kernel: int, stride: int) -> np.ndarray:
    """Scatter-add inverse of im2col; returns an array of x_shape."""
    b, h, w, c = x_shape
    oh = conv_out_size(h, kernel, stride)
    ow = conv_out_size(w, kernel, stride)
    cols6 = cols.reshape(b, oh, ow, kernel, kernel, c)
    out = np.zeros(x_shape, dtype=cols.dtype)
    for ki in range(kernel):
        i_end = ki + (oh - 1) * stride + 1
        for kj in range(kernel):
            j_end = kj + (ow - 1) * stride + 1
            out[:, ki:i_end:stride, kj:j_end:stride, :] += cols6[:, :, :, ki, kj, :]
    return out
