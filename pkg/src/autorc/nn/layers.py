"""Neural-network layers with analytical backward passes.

Everything runs on float64 numpy arrays, batch-first and channels-last
(images are (B, H, W, C)). Each layer caches what its backward pass
needs during a training forward, accumulates parameter gradients into
``Param.grad``, and returns the gradient with respect to its input.

Every forward output is checked finite; a NaN or Inf anywhere raises
NonFiniteError naming the layer, which is cheaper to debug than a loss
that silently goes NaN three layers later.
"""

from __future__ import annotations

import numpy as np

from . import kernels


class ShapeError(ValueError):
    """Input does not match what the layer was built for."""


class NonFiniteError(FloatingPointError):
    """A layer produced NaN or Inf."""


class Param:
    """One learnable array plus its gradient accumulator."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def __repr__(self) -> str:
        return f"Param({self.name}, shape={self.value.shape})"


def check_finite(name: str, arr: np.ndarray) -> np.ndarray:
    # single reduction instead of isfinite over the full block; any
    # NaN/Inf poisons the sum
    if not np.isfinite(arr.sum()):
        raise NonFiniteError(f"non-finite values in output of {name}")
    return arr


class Layer:
    name: str = "layer"

    def params(self) -> list[Param]:
        return []

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class Conv2D(Layer):
    """Valid-padding 2D cross-correlation plus bias."""

    def __init__(self, in_channels: int, filters: int, kernel: int, stride: int,
                 name: str, rng: np.random.Generator):
        self.in_channels = in_channels
        self.filters = filters
        self.kernel = kernel
        self.stride = stride
        self.name = name
        fan_in = kernel * kernel * in_channels
        w = rng.normal(0.0, np.sqrt(2.0 / fan_in), (kernel, kernel, in_channels, filters))
        self.w = Param(f"{name}.w", w)
        self.b = Param(f"{name}.b", np.zeros(filters))
        self._cols: np.ndarray | None = None
        self._x_shape: tuple | None = None

    def params(self) -> list[Param]:
        return [self.w, self.b]

    def output_shape(self, h: int, w: int) -> tuple[int, int, int]:
        oh = kernels.conv_out_size(h, self.kernel, self.stride)
        ow = kernels.conv_out_size(w, self.kernel, self.stride)
        return oh, ow, self.filters

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if x.ndim != 4 or x.shape[3] != self.in_channels:
            raise ShapeError(
                f"{self.name}: expected (B,H,W,{self.in_channels}), got {x.shape}"
            )
        b, h, w, _ = x.shape
        oh, ow, f = self.output_shape(h, w)
        if oh < 1 or ow < 1:
            raise ShapeError(
                f"{self.name}: input {h}x{w} too small for kernel {self.kernel}"
                f" stride {self.stride}"
            )
        cols = kernels.im2col(np.ascontiguousarray(x, dtype=np.float64),
                              self.kernel, self.stride)
        wmat = self.w.value.reshape(-1, self.filters)
        out = (cols @ wmat + self.b.value).reshape(b, oh, ow, f)
        if train:
            self._cols = cols
            self._x_shape = x.shape
        return check_finite(self.name, out)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self._cols is None or self._x_shape is None:
            raise RuntimeError(f"{self.name}: backward before training forward")
        dy_mat = dy.reshape(-1, self.filters)
        wmat = self.w.value.reshape(-1, self.filters)
        self.w.grad += (self._cols.T @ dy_mat).reshape(self.w.value.shape)
        self.b.grad += dy_mat.sum(axis=0)
        dcols = dy_mat @ wmat.T
        dx = kernels.col2im(dcols, self._x_shape, self.kernel, self.stride)
        self._cols = None
        return dx


class Dense(Layer):
    """Affine layer y = x @ w + b."""

    def __init__(self, in_features: int, out_features: int, name: str,
                 rng: np.random.Generator, init: str = "he"):
        self.in_features = in_features
        self.out_features = out_features
        self.name = name
        if init == "he":
            w = rng.normal(0.0, np.sqrt(2.0 / in_features), (in_features, out_features))
        elif init == "glorot":
            limit = np.sqrt(6.0 / (in_features + out_features))
            w = rng.uniform(-limit, limit, (in_features, out_features))
        else:
            raise ValueError(f"unknown init {init!r}")
        self.w = Param(f"{name}.w", w)
        self.b = Param(f"{name}.b", np.zeros(out_features))
        self._x: np.ndarray | None = None

    def params(self) -> list[Param]:
        return [self.w, self.b]

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ShapeError(
                f"{self.name}: expected (B,{self.in_features}), got {x.shape}"
            )
        out = x @ self.w.value + self.b.value
        if train:
            self._x = x
        return check_finite(self.name, out)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self._x is None:
            raise RuntimeError(f"{self.name}: backward before training forward")
        self.w.grad += self._x.T @ dy
        self.b.grad += dy.sum(axis=0)
        dx = dy @ self.w.value.T
        self._x = None
        return dx


class ReLU(Layer):
    def __init__(self, name: str = "relu"):
        self.name = name
        self._mask: np.ndarray | None = None

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        out = np.maximum(x, 0.0)
        if train:
            self._mask = x > 0.0
        return out

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self._mask is None:
            raise RuntimeError(f"{self.name}: backward before training forward")
        dx = dy * self._mask
        self._mask = None
        return dx


class Flatten(Layer):
    def __init__(self, name: str = "flatten"):
        self.name = name
        self._shape: tuple | None = None

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if train:
            self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self._shape is None:
            raise RuntimeError(f"{self.name}: backward before training forward")
        dx = dy.reshape(self._shape)
        self._shape = None
        return dx


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    return q * np.sign(np.diag(r))


class LSTM(Layer):
    """Standard LSTM over (B, T, D) inputs.

    Gate order along the weight columns is (i, f, g, o). The forget
    gate bias starts at 1.0 so early training does not wipe the cell
    state. ``return_sequences`` keeps (B, T, H); otherwise only the
    last step (B, H) comes out, and backward treats incoming gradients
    accordingly.
    """

    def __init__(self, input_size: int, hidden_size: int, name: str,
                 rng: np.random.Generator, return_sequences: bool = False):
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.return_sequences = return_sequences
        self.name = name
        d, h = input_size, hidden_size
        limit = np.sqrt(6.0 / (d + 4 * h))
        wx = rng.uniform(-limit, limit, (d, 4 * h))
        wh = np.concatenate([_orthogonal(rng, h) for _ in range(4)], axis=1)
        b = np.zeros(4 * h)
        b[h : 2 * h] = 1.0
        self.wx = Param(f"{name}.wx", wx)
        self.wh = Param(f"{name}.wh", wh)
        self.b = Param(f"{name}.b", b)
        self._cache: dict | None = None

    def params(self) -> list[Param]:
        return [self.wx, self.wh, self.b]

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if x.ndim != 3 or x.shape[2] != self.input_size:
            raise ShapeError(
                f"{self.name}: expected (B,T,{self.input_size}), got {x.shape}"
            )
        b, t, _ = x.shape
        h = self.hidden_size
        h_t = np.zeros((b, h))
        c_t = np.zeros((b, h))
        hs = np.empty((b, t, h))
        steps = []
        for k in range(t):
            x_t = x[:, k, :]
            z = x_t @ self.wx.value + h_t @ self.wh.value + self.b.value
            i = _sigmoid(z[:, :h])
            f = _sigmoid(z[:, h : 2 * h])
            g = np.tanh(z[:, 2 * h : 3 * h])
            o = _sigmoid(z[:, 3 * h :])
            c_prev = c_t
            c_t = f * c_prev + i * g
            tanh_c = np.tanh(c_t)
            h_prev = h_t
            h_t = o * tanh_c
            hs[:, k, :] = h_t
            if train:
                steps.append((x_t, h_prev, c_prev, i, f, g, o, c_t, tanh_c))
        if train:
            self._cache = {"steps": steps, "x_shape": x.shape}
        out = hs if self.return_sequences else hs[:, -1, :]
        return check_finite(self.name, out)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise RuntimeError(f"{self.name}: backward before training forward")
        steps = self._cache["steps"]
        b, t, d = self._cache["x_shape"]
        h = self.hidden_size
        dx = np.zeros((b, t, d))
        dh_next = np.zeros((b, h))
        dc_next = np.zeros((b, h))
        for k in reversed(range(t)):
            x_t, h_prev, c_prev, i, f, g, o, c_t, tanh_c = steps[k]
            if self.return_sequences:
                dh = dy[:, k, :] + dh_next
            else:
                dh = dh_next + (dy if k == t - 1 else 0.0)
            do = dh * tanh_c
            dc = dh * o * (1.0 - tanh_c * tanh_c) + dc_next
            di = dc * g
            df = dc * c_prev
            dg = dc * i
            dc_next = dc * f
            dz = np.concatenate(
                [
                    di * i * (1.0 - i),
                    df * f * (1.0 - f),
                    dg * (1.0 - g * g),
                    do * o * (1.0 - o),
                ],
                axis=1,
            )
            self.wx.grad += x_t.T @ dz
            self.wh.grad += h_prev.T @ dz
            self.b.grad += dz.sum(axis=0)
            dx[:, k, :] = dz @ self.wx.value.T
            dh_next = dz @ self.wh.value.T
        self._cache = None
        return dx


class Sequential(Layer):
    """Chain of layers applied in order."""

    def __init__(self, layers: list[Layer], name: str = "sequential"):
        self.layers = layers
        self.name = name

    def params(self) -> list[Param]:
        out: list[Param] = []
        for layer in self.layers:
            out.extend(layer.params())
        return out

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x, train=train)
        return x

    def backward(self, dy: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy


class TimeDistributed(Layer):
    """Applies an inner layer to every step of a (B, T, ...) input.

    Folds time into the batch axis, so the inner layer sees (B*T, ...)
    and stays oblivious to sequences.
    """

    def __init__(self, inner: Layer, name: str = "time_distributed"):
        self.inner = inner
        self.name = name
        self._bt: tuple[int, int] | None = None

    def params(self) -> list[Param]:
        return self.inner.params()

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if x.ndim < 3:
            raise ShapeError(f"{self.name}: expected (B,T,...), got {x.shape}")
        b, t = x.shape[0], x.shape[1]
        folded = x.reshape(b * t, *x.shape[2:])
        out = self.inner.forward(folded, train=train)
        if train:
            self._bt = (b, t)
        return out.reshape(b, t, *out.shape[1:])

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self._bt is None:
            raise RuntimeError(f"{self.name}: backward before training forward")
        b, t = self._bt
        dx = self.inner.backward(dy.reshape(b * t, *dy.shape[2:]))
        self._bt = None
        return dx.reshape(b, t, *dx.shape[1:])
