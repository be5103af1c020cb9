"""The two control-policy architectures.

Both take 120x160 RGB frames scaled to [0, 1] and regress two scalars,
steering and throttle, with linear output heads (the drive loop clamps,
not the model).

* LinearCnnModel: five conv layers then two dense layers; per-frame.
* RnnModel: four time-distributed conv layers over a short frame
  sequence, two stacked LSTMs, three dense layers; temporal context.
"""

from __future__ import annotations

import numpy as np

from .layers import (
    LSTM,
    Conv2D,
    Dense,
    Flatten,
    Layer,
    Param,
    ReLU,
    Sequential,
    ShapeError,
    TimeDistributed,
)

INPUT_HEIGHT = 120
INPUT_WIDTH = 160
INPUT_CHANNELS = 3


class Model:
    arch_tag: str = "model"
    sequence_len: int = 1

    def params(self) -> list[Param]:
        raise NotImplementedError

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hyper(self) -> dict:
        return {}

    @property
    def param_count(self) -> int:
        return int(sum(p.value.size for p in self.params()))

    def predict(self, x: np.ndarray) -> tuple[float, float]:
        """Single-sample inference; returns (steering, throttle)."""
        batched = x[None, ...]
        out = self.forward(batched, train=False)
        return float(out[0, 0]), float(out[0, 1])


class LinearCnnModel(Model):
    """Per-frame CNN policy.

    Conv filters 24/32/64/64/64, kernels 5,5,5,3,3, strides 2,2,2,2,1,
    valid padding, each followed by ReLU; flatten; dense 100 and 50
    with ReLU. The output is two scalars, by default from two parallel
    single-unit linear heads; ``joint_head=True`` swaps in one
    two-unit linear layer instead.
    """

    arch_tag = "linear_cnn"
    sequence_len = 1

    CONV_SPECS = ((3, 24, 5, 2), (24, 32, 5, 2), (32, 64, 5, 2),
                  (64, 64, 3, 2), (64, 64, 3, 1))
    FLAT_FEATURES = 3 * 6 * 64  # final conv output 3x6x64

    def __init__(self, joint_head: bool = False, seed: int = 0):
        rng = np.random.default_rng(seed)
        self.joint_head = joint_head
        self.seed = seed
        layers: list[Layer] = []
        for idx, (cin, cout, k, s) in enumerate(self.CONV_SPECS, start=1):
            layers.append(Conv2D(cin, cout, k, s, f"conv{idx}", rng))
            layers.append(ReLU(f"relu{idx}"))
        layers.append(Flatten())
        layers.append(Dense(self.FLAT_FEATURES, 100, "dense1", rng))
        layers.append(ReLU("relu_dense1"))
        layers.append(Dense(100, 50, "dense2", rng))
        layers.append(ReLU("relu_dense2"))
        self.backbone = Sequential(layers, "backbone")
        if joint_head:
            self.head = Dense(50, 2, "head", rng, init="glorot")
            self._heads = [self.head]
        else:
            self.head_steering = Dense(50, 1, "head_steering", rng, init="glorot")
            self.head_throttle = Dense(50, 1, "head_throttle", rng, init="glorot")
            self._heads = [self.head_steering, self.head_throttle]

    def hyper(self) -> dict:
        return {"joint_head": self.joint_head, "seed": self.seed}

    def params(self) -> list[Param]:
        out = self.backbone.params()
        for head in self._heads:
            out.extend(head.params())
        return out

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if x.ndim != 4 or x.shape[1:] != (INPUT_HEIGHT, INPUT_WIDTH, INPUT_CHANNELS):
            raise ShapeError(
                f"{self.arch_tag}: expected (B,{INPUT_HEIGHT},{INPUT_WIDTH},"
                f"{INPUT_CHANNELS}), got {x.shape}"
            )
        h = self.backbone.forward(x, train=train)
        if self.joint_head:
            return self.head.forward(h, train=train)
        s = self.head_steering.forward(h, train=train)
        t = self.head_throttle.forward(h, train=train)
        return np.concatenate([s, t], axis=1)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self.joint_head:
            dh = self.head.backward(dy)
        else:
            dh = self.head_steering.backward(np.ascontiguousarray(dy[:, :1]))
            dh = dh + self.head_throttle.backward(np.ascontiguousarray(dy[:, 1:]))
        return self.backbone.backward(dh)


class RnnModel(Model):
    """Temporal policy over a short window of frames.

    Time-distributed conv filters 24/32/32/32, kernels 5,5,3,3, strides
    2,2,2,1, each with ReLU, then flatten per step; two stacked
    128-unit LSTMs (first returns the full sequence, second only the
    final step); dense 128, 64, 10 with ReLU; one two-unit linear head.
    """

    arch_tag = "rnn"

    CONV_SPECS = ((3, 24, 5, 2), (24, 32, 5, 2), (32, 32, 3, 2), (32, 32, 3, 1))
    FLAT_FEATURES = 11 * 16 * 32  # final conv output 11x16x32 per step

    def __init__(self, sequence_len: int = 3, seed: int = 0):
        if sequence_len < 1:
            raise ValueError("sequence_len must be >= 1")
        rng = np.random.default_rng(seed)
        self.sequence_len = sequence_len
        self.seed = seed
        conv_layers: list[Layer] = []
        for idx, (cin, cout, k, s) in enumerate(self.CONV_SPECS, start=1):
            conv_layers.append(Conv2D(cin, cout, k, s, f"conv{idx}", rng))
            conv_layers.append(ReLU(f"relu{idx}"))
        conv_layers.append(Flatten())
        self.encoder = Sequential(conv_layers, "encoder")
        self.td = TimeDistributed(self.encoder, "td_encoder")
        self.lstm1 = LSTM(self.FLAT_FEATURES, 128, "lstm1", rng, return_sequences=True)
        self.lstm2 = LSTM(128, 128, "lstm2", rng, return_sequences=False)
        self.dense1 = Dense(128, 128, "dense1", rng)
        self.relu1 = ReLU("relu_dense1")
        self.dense2 = Dense(128, 64, "dense2", rng)
        self.relu2 = ReLU("relu_dense2")
        self.dense3 = Dense(64, 10, "dense3", rng)
        self.relu3 = ReLU("relu_dense3")
        self.head = Dense(10, 2, "head", rng, init="glorot")
        self._tail = Sequential(
            [self.dense1, self.relu1, self.dense2, self.relu2,
             self.dense3, self.relu3, self.head],
            "tail",
        )

    def hyper(self) -> dict:
        return {"sequence_len": self.sequence_len, "seed": self.seed}

    def params(self) -> list[Param]:
        out = self.td.params()
        out.extend(self.lstm1.params())
        out.extend(self.lstm2.params())
        out.extend(self._tail.params())
        return out

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        expected = (self.sequence_len, INPUT_HEIGHT, INPUT_WIDTH, INPUT_CHANNELS)
        if x.ndim != 5 or x.shape[1:] != expected:
            raise ShapeError(
                f"{self.arch_tag}: expected (B,{expected[0]},{expected[1]},"
                f"{expected[2]},{expected[3]}), got {x.shape}"
            )
        feats = self.td.forward(x, train=train)
        seq = self.lstm1.forward(feats, train=train)
        last = self.lstm2.forward(seq, train=train)
        return self._tail.forward(last, train=train)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        dlast = self._tail.backward(dy)
        dseq = self.lstm2.backward(dlast)
        dfeats = self.lstm1.backward(dseq)
        return self.td.backward(dfeats)

    def encode_frame(self, frame: np.ndarray) -> np.ndarray:
        """Per-frame conv features for incremental inference.

        The drive loop keeps the last T feature vectors in a deque so
        each tick encodes only the newest frame instead of re-running
        the conv stack on the whole window.
        """
        out = self.encoder.forward(frame[None, ...], train=False)
        return out[0]

    def predict_from_features(self, features: np.ndarray) -> tuple[float, float]:
        """Inference from (T, FLAT_FEATURES) precomputed frame encodings."""
        if features.shape != (self.sequence_len, self.FLAT_FEATURES):
            raise ShapeError(
                f"{self.arch_tag}: expected ({self.sequence_len},"
                f"{self.FLAT_FEATURES}) features, got {features.shape}"
            )
        seq = self.lstm1.forward(features[None, ...], train=False)
        last = self.lstm2.forward(seq, train=False)
        out = self._tail.forward(last, train=False)
        return float(out[0, 0]), float(out[0, 1])


def build_model(arch: str, **hyper) -> Model:
    """Factory keyed by architecture tag, as stored in weight files."""
    if arch == LinearCnnModel.arch_tag:
        return LinearCnnModel(
            joint_head=bool(hyper.get("joint_head", False)),
            seed=int(hyper.get("seed", 0)),
        )
    if arch == RnnModel.arch_tag:
        return RnnModel(
            sequence_len=int(hyper.get("sequence_len", 3)),
            seed=int(hyper.get("seed", 0)),
        )
    raise ValueError(f"unknown architecture {arch!r}")
