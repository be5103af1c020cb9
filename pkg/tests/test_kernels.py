"""Backend parity: the compiled patch kernels must match the numpy ones."""

import subprocess
import sys

import numpy as np
import pytest

from autorc.nn.kernels import BACKEND, col2im, conv_out_size, im2col, numpy_backend

try:
    from autorc.nn.kernels import _native
except ImportError:
    _native = None

CASES = [
    # (batch, height, width, channels, kernel, stride)
    (2, 12, 17, 3, 3, 1),
    (1, 58, 78, 8, 5, 2),
    (3, 9, 9, 4, 3, 3),
    (2, 7, 7, 2, 1, 1),
    (1, 5, 6, 1, 5, 1),
]


def test_conv_out_size():
    assert conv_out_size(120, 5, 2) == 58
    assert conv_out_size(58, 5, 2) == 27
    assert conv_out_size(5, 3, 1) == 3
    # an undersized input yields a non-positive count; layers reject it
    assert conv_out_size(4, 5, 1) == 0


@pytest.mark.skipif(_native is None, reason="compiled backend not built")
@pytest.mark.parametrize("case", CASES)
def test_backends_agree_on_im2col(case):
    b, h, w, c, k, s = case
    x = np.random.default_rng(hash(case) % 2**32).random((b, h, w, c))
    a = numpy_backend.im2col(x, k, s)
    n = _native.im2col(x, k, s)
    assert np.array_equal(a, n)


@pytest.mark.skipif(_native is None, reason="compiled backend not built")
@pytest.mark.parametrize("case", CASES)
def test_backends_agree_on_col2im(case):
    b, h, w, c, k, s = case
    oh, ow = conv_out_size(h, k, s), conv_out_size(w, k, s)
    cols = np.random.default_rng(hash(case) % 2**31).random(
        (b * oh * ow, k * k * c))
    a = numpy_backend.col2im(cols, (b, h, w, c), k, s)
    n = _native.col2im(cols, (b, h, w, c), k, s)
    # overlapping windows scatter-add in different orders between the
    # two implementations; only reassociation error is allowed
    np.testing.assert_allclose(a, n, rtol=1e-13, atol=1e-15)


def test_im2col_col2im_adjoint_property():
    """col2im is the transpose of im2col: <im2col(x), c> == <x, col2im(c)>."""
    rng = np.random.default_rng(7)
    x = rng.random((2, 10, 11, 3))
    k, s = 3, 2
    cols = im2col(x, k, s)
    c = rng.random(cols.shape)
    lhs = float((cols * c).sum())
    rhs = float((x * col2im(c, x.shape, k, s)).sum())
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_im2col_known_patches():
    x = np.arange(16, dtype=np.float64).reshape(1, 4, 4, 1)
    cols = im2col(x, 2, 2)
    assert cols.shape == (4, 4)
    assert cols.tolist() == [
        [0, 1, 4, 5],
        [2, 3, 6, 7],
        [8, 9, 12, 13],
        [10, 11, 14, 15],
    ]


def test_forced_numpy_backend_in_subprocess():
    code = (
        "import os; os.environ['AUTORC_KERNELS']='numpy';"
        "from autorc.nn.kernels import BACKEND; print(BACKEND)"
    )
    out = subprocess.run([sys.executable, "-c", code], capture_output=True,
                         text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_bad_backend_choice_rejected_in_subprocess():
    code = (
        "import os; os.environ['AUTORC_KERNELS']='cuda';"
        "import autorc.nn.kernels"
    )
    out = subprocess.run([sys.executable, "-c", code], capture_output=True,
                         text=True)
    assert out.returncode != 0
    assert "AUTORC_KERNELS" in out.stderr


def test_current_backend_is_exported():
    assert BACKEND in ("native", "numpy")
