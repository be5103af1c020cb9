"""Driving dataset store ("tub").

A tub is a directory holding one PNG per camera frame plus a
line-oriented manifest (`manifest.jsonl`, one JSON record per line) and
a `meta.json` snapshot of how the data was produced. Line-oriented
append keeps the store crash-safe: a record is a durable manifest line
or it does not exist, and a torn final line from an interrupted run is
dropped on reopen.

Records carry a `run` id so temporal models can build frame sequences
that never straddle two recording sessions.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator

import numpy as np

from .camera import CameraFrame, decode_png, encode_png
from .pwm import NormalizedCommand

MODES = ("user", "expert", "auto")

MANIFEST_NAME = "manifest.jsonl"
META_NAME = "meta.json"
IMAGE_DIR = "images"
FORMAT_VERSION = 1


class TubError(Exception):
    """Raised for tub-level failures: bad layout, corruption, empty data."""


@dataclass(frozen=True)
class TubRecord:
    frame_id: int
    image_ref: str
    steering: float
    throttle: float
    mode: str
    timestamp: float
    lap: int
    run: int = 0

    def __post_init__(self) -> None:
        if not -1.0 <= self.steering <= 1.0:
            raise ValueError(f"steering {self.steering} outside [-1, 1]")
        if not -1.0 <= self.throttle <= 1.0:
            raise ValueError(f"throttle {self.throttle} outside [-1, 1]")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")


def _record_to_line(rec: TubRecord) -> str:
    return json.dumps(asdict(rec), separators=(",", ":"), sort_keys=True)


def _record_from_obj(obj: dict) -> TubRecord:
    return TubRecord(
        frame_id=int(obj["frame_id"]),
        image_ref=str(obj["image_ref"]),
        steering=float(obj["steering"]),
        throttle=float(obj["throttle"]),
        mode=str(obj["mode"]),
        timestamp=float(obj["timestamp"]),
        lap=int(obj["lap"]),
        run=int(obj.get("run", 0)),
    )


class Tub:
    """One driving dataset directory.

    Use :meth:`create` for a fresh tub, :meth:`open` to read or resume
    an existing one. A tub holds at most one writer; readers may share
    the directory freely once writing stops.
    """

    def __init__(self, path: Path, meta: dict, records: list[TubRecord], writable: bool):
        self.path = Path(path)
        self.meta = meta
        self.records = records
        self.recovered_torn_line = False
        self._writable = writable
        self._manifest = None
        if writable:
            self._manifest = open(self.path / MANIFEST_NAME, "a", encoding="utf-8")

    # -- lifecycle ---------------------------------------------------

    @classmethod
    def create(cls, path, sim_config: dict | None = None, rate_hz: float = 20.0) -> "Tub":
        path = Path(path)
        if path.exists() and any(path.iterdir()):
            raise TubError(f"refusing to create tub in non-empty directory {path}")
        (path / IMAGE_DIR).mkdir(parents=True, exist_ok=True)
        meta = {
            "format_version": FORMAT_VERSION,
            "created_at": datetime.now(timezone.utc).isoformat(),
            "rate_hz": rate_hz,
            "sim_config": sim_config or {},
        }
        with open(path / META_NAME, "w", encoding="utf-8") as f:
            json.dump(meta, f, indent=2, sort_keys=True)
            f.write("\n")
        (path / MANIFEST_NAME).touch()
        return cls(path, meta, [], writable=True)

    @classmethod
    def open(cls, path, writable: bool = False) -> "Tub":
        path = Path(path)
        manifest = path / MANIFEST_NAME
        meta_path = path / META_NAME
        if not manifest.exists() or not meta_path.exists():
            raise TubError(f"{path} is not a tub (missing manifest or meta)")
        with open(meta_path, encoding="utf-8") as f:
            meta = json.load(f)
        version = meta.get("format_version")
        if version != FORMAT_VERSION:
            raise TubError(f"unsupported tub format_version {version!r}")

        raw = manifest.read_bytes()
        records: list[TubRecord] = []
        torn = False
        good_end = 0  # byte offset just past the last durable line
        start = 0
        n = len(raw)
        while start < n:
            nl = raw.find(b"\n", start)
            end = nl if nl >= 0 else n
            line = raw[start:end]
            complete = nl >= 0
            if line.strip():
                try:
                    records.append(_record_from_obj(json.loads(line)))
                except (ValueError, KeyError, TypeError):
                    if complete:
                        raise TubError(
                            f"corrupt manifest line at byte {start} in {manifest}"
                        ) from None
                    torn = True
                    break
                if not complete:
                    # parsed but never newline-terminated; treat as torn to
                    # keep the durable prefix newline-clean for appends
                    records.pop()
                    torn = True
                    break
            good_end = end + 1 if complete else end
            start = end + 1

        for a, b in zip(records, records[1:]):
            if b.frame_id <= a.frame_id:
                raise TubError(
                    f"frame ids not strictly increasing: {a.frame_id} then {b.frame_id}"
                )

        if torn and writable:
            with open(manifest, "r+b") as f:
                f.truncate(good_end)

        tub = cls(path, meta, records, writable=writable)
        tub.recovered_torn_line = torn
        return tub

    def close(self) -> None:
        if self._manifest is not None:
            self._manifest.close()
            self._manifest = None
        self._writable = False

    def __enter__(self) -> "Tub":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def __len__(self) -> int:
        return len(self.records)

    # -- writing -----------------------------------------------------

    def append(
        self,
        frame: CameraFrame,
        cmd: NormalizedCommand,
        mode: str,
        lap: int = 0,
        run: int = 0,
        timestamp: float | None = None,
    ) -> int:
        """Persist one frame + command pair; returns its frame_id.

        The image is written before the manifest line, so a failure at
        any point leaves the record uncounted.
        """
        if not self._writable or self._manifest is None:
            raise TubError("tub is not open for writing")
        frame_id = self.records[-1].frame_id + 1 if self.records else 0
        image_ref = f"{IMAGE_DIR}/{frame_id:06d}.png"
        rec = TubRecord(
            frame_id=frame_id,
            image_ref=image_ref,
            steering=cmd.steering,
            throttle=cmd.throttle,
            mode=mode,
            timestamp=frame.timestamp if timestamp is None else timestamp,
            lap=lap,
            run=run,
        )
        image_path = self.path / image_ref
        with open(image_path, "wb") as f:
            f.write(encode_png(frame.pixels))
        self._manifest.write(_record_to_line(rec) + "\n")
        self._manifest.flush()
        self.records.append(rec)
        return frame_id

    # -- reading -----------------------------------------------------

    def image_path(self, rec: TubRecord) -> Path:
        return self.path / rec.image_ref

    def load_image(self, rec: TubRecord) -> np.ndarray:
        return decode_png(self.image_path(rec).read_bytes())


class _TubData:
    """Shared decoded state behind dataset views.

    Images are decoded once into a uint8 block; views hold index masks
    into it. Records whose image is missing, undecodable, or the wrong
    shape are dropped here and surface as ``skipped``.
    """

    def __init__(self, tub: Tub, expected_shape: tuple[int, int, int] = (120, 160, 3)):
        self.records = list(tub.records)
        n = len(self.records)
        self.usable = np.zeros(n, dtype=bool)
        self.row = np.full(n, -1, dtype=np.intp)
        self.run = np.array([r.run for r in self.records], dtype=np.int64)
        self.frame_id = np.array([r.frame_id for r in self.records], dtype=np.int64)
        self.targets = np.array(
            [[r.steering, r.throttle] for r in self.records], dtype=np.float64
        ).reshape(n, 2)
        images: list[np.ndarray] = []
        for i, rec in enumerate(self.records):
            try:
                px = tub.load_image(rec)
            except (OSError, ValueError):
                continue
            if px.shape != expected_shape:
                continue
            self.row[i] = len(images)
            self.usable[i] = True
            images.append(px)
        self.images = (
            np.stack(images) if images else np.zeros((0,) + expected_shape, np.uint8)
        )
        self.skipped = int(n - self.usable.sum())

    def window_ends(self, sequence_len: int) -> np.ndarray:
        """Indices i where records i-T+1..i are usable, one run, consecutive ids."""
        n = len(self.records)
        if n == 0:
            return np.zeros(0, dtype=np.intp)
        link = np.zeros(n, dtype=bool)
        if n > 1:
            link[1:] = (
                (self.run[1:] == self.run[:-1])
                & (self.frame_id[1:] == self.frame_id[:-1] + 1)
            )
        good = self.usable.copy()
        for _ in range(sequence_len - 1):
            nxt = np.zeros(n, dtype=bool)
            nxt[1:] = good[:-1] & link[1:] & self.usable[1:]
            good = nxt
        return np.nonzero(good)[0]


class DatasetView:
    """A subset of a tub's usable records, batched for training.

    For ``sequence_len`` T > 1 a sample is the T consecutive frames of
    one recording run that end at a member record; the target is always
    the final frame's command. Context frames may come from outside the
    view (they are inputs, never labels), so a shuffled split does not
    starve temporal models of windows.
    """

    def __init__(self, data: _TubData, member: np.ndarray, name: str = "view"):
        self._data = data
        self._member = member
        self.name = name

    def __len__(self) -> int:
        return int(self._member.sum())

    @property
    def skipped(self) -> int:
        return self._data.skipped

    def indices(self) -> np.ndarray:
        return np.nonzero(self._member)[0]

    def window_count(self, sequence_len: int = 1) -> int:
        ends = self._data.window_ends(sequence_len)
        return int(self._member[ends].sum())

    def batches(
        self,
        batch_size: int,
        seed: int = 0,
        sequence_len: int = 1,
        shuffle: bool = True,
    ) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        """Yield (inputs, targets) with inputs scaled to [0, 1] float64.

        Inputs are (B,H,W,3) for sequence_len 1, else (B,T,H,W,3);
        targets are (B,2) ordered (steering, throttle). The final batch
        may be short.
        """
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if sequence_len < 1:
            raise ValueError("sequence_len must be >= 1")
        data = self._data
        ends = data.window_ends(sequence_len)
        ends = ends[self._member[ends]]
        if len(ends) == 0:
            raise TubError(
                f"view {self.name!r} has no complete sequences of length {sequence_len}"
            )
        order = ends
        if shuffle:
            rng = np.random.default_rng(seed)
            order = ends[rng.permutation(len(ends))]
        T = sequence_len
        for lo in range(0, len(order), batch_size):
            chunk = order[lo : lo + batch_size]
            if T == 1:
                rows = data.row[chunk]
                x = data.images[rows].astype(np.float64) / 255.0
            else:
                offs = np.arange(-(T - 1), 1)
                rows = data.row[chunk[:, None] + offs[None, :]]
                x = data.images[rows].astype(np.float64) / 255.0
            y = data.targets[chunk]
            yield x, y


def load_split(tub: Tub, val_fraction: float, seed: int) -> tuple[DatasetView, DatasetView]:
    """Deterministic shuffled split into train and validation views.

    Train gets floor(n * (1 - val_fraction)) of the n usable records;
    the views partition them exactly.
    """
    if not 0.0 < val_fraction < 1.0:
        raise ValueError("val_fraction must be in (0, 1)")
    data = _TubData(tub)
    valid = np.nonzero(data.usable)[0]
    if len(valid) == 0:
        raise TubError(f"tub at {tub.path} has no usable records")
    rng = np.random.default_rng(seed)
    perm = valid[rng.permutation(len(valid))]
    n_train = int(np.floor(len(valid) * (1.0 - val_fraction)))
    member_train = np.zeros(len(data.records), dtype=bool)
    member_val = np.zeros(len(data.records), dtype=bool)
    member_train[perm[:n_train]] = True
    member_val[perm[n_train:]] = True
    return (
        DatasetView(data, member_train, "train"),
        DatasetView(data, member_val, "val"),
    )


class ArrayDataset:
    """In-memory stand-in for a DatasetView, for tests and overfit runs.

    ``x`` is (N,H,W,3) or (N,T,H,W,3) float in [0,1]; ``y`` is (N,2).
    """

    def __init__(self, x: np.ndarray, y: np.ndarray):
        if len(x) != len(y):
            raise ValueError("x and y length mismatch")
        self.x = np.asarray(x, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.float64).reshape(len(x), -1)

    def __len__(self) -> int:
        return len(self.x)

    def window_count(self, sequence_len: int = 1) -> int:
        return len(self.x)

    def batches(self, batch_size, seed=0, sequence_len=1, shuffle=True):
        if len(self.x) == 0:
            raise TubError("empty dataset")
        order = np.arange(len(self.x))
        if shuffle:
            order = np.random.default_rng(seed).permutation(len(self.x))
        for lo in range(0, len(order), batch_size):
            sel = order[lo : lo + batch_size]
            yield self.x[sel], self.y[sel]


def tub_stats(tub: Tub) -> dict:
    """Summary used by the CLI: counts, per-mode totals, command spread."""
    recs = tub.records
    by_mode = {m: 0 for m in MODES}
    for r in recs:
        by_mode[r.mode] += 1
    steering = np.array([r.steering for r in recs]) if recs else np.zeros(0)
    throttle = np.array([r.throttle for r in recs]) if recs else np.zeros(0)
    runs = sorted({r.run for r in recs})
    return {
        "records": len(recs),
        "by_mode": by_mode,
        "runs": len(runs),
        "laps": max((r.lap for r in recs), default=0),
        "steering_mean": float(steering.mean()) if len(recs) else 0.0,
        "steering_std": float(steering.std()) if len(recs) else 0.0,
        "throttle_mean": float(throttle.mean()) if len(recs) else 0.0,
        "throttle_std": float(throttle.std()) if len(recs) else 0.0,
        "recovered_torn_line": tub.recovered_torn_line,
    }
