"""Versioned binary weight container.

Layout:

    bytes 0..3   magic "ARCW"
    bytes 4..5   format version, u16 little-endian
    bytes 6..9   metadata length N, u32 little-endian
    next N       metadata JSON (utf-8): architecture tag, hyperparams,
                 ordered array directory {name, shape, offset, nbytes}
    rest         raw float64 little-endian array data, C order,
                 concatenated in directory order

Offsets in the directory are relative to the start of the data block.
Loading validates magic, version, architecture tag, and every array
shape before touching model state; each failure mode is a distinct
exception so callers can tell a wrong file from a broken one.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .models import Model, build_model

MAGIC = b"ARCW"
FORMAT_VERSION = 1
_HEADER = 4 + 2 + 4


class WeightsError(Exception):
    """Base for weight-container failures."""


class BadMagicError(WeightsError):
    pass


class VersionError(WeightsError):
    pass


class TruncatedError(WeightsError):
    pass


class ArchitectureError(WeightsError):
    pass


class ArrayShapeError(WeightsError):
    pass


def save_weights(model: Model, path) -> None:
    params = model.params()
    directory = []
    offset = 0
    blobs = []
    for p in params:
        data = np.ascontiguousarray(p.value, dtype="<f8").tobytes()
        directory.append(
            {"name": p.name, "shape": list(p.value.shape),
             "offset": offset, "nbytes": len(data)}
        )
        blobs.append(data)
        offset += len(data)
    meta = {
        "arch": model.arch_tag,
        "hyper": model.hyper(),
        "arrays": directory,
    }
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(FORMAT_VERSION.to_bytes(2, "little"))
        f.write(len(meta_bytes).to_bytes(4, "little"))
        f.write(meta_bytes)
        for blob in blobs:
            f.write(blob)


def _read_meta(raw: bytes, path) -> tuple[dict, int]:
    if len(raw) < _HEADER:
        raise TruncatedError(f"{path}: truncated container (header incomplete)")
    if raw[:4] != MAGIC:
        raise BadMagicError(f"{path}: not a weight container (bad magic)")
    version = int.from_bytes(raw[4:6], "little")
    if version != FORMAT_VERSION:
        raise VersionError(
            f"{path}: format version {version}, expected {FORMAT_VERSION}"
        )
    meta_len = int.from_bytes(raw[6:10], "little")
    if len(raw) < _HEADER + meta_len:
        raise TruncatedError(f"{path}: truncated container (metadata incomplete)")
    try:
        meta = json.loads(raw[_HEADER : _HEADER + meta_len])
    except ValueError as exc:
        raise TruncatedError(f"{path}: corrupt metadata block") from exc
    return meta, _HEADER + meta_len


def read_container_meta(path) -> dict:
    """Architecture tag and hyperparameters without loading arrays."""
    raw = Path(path).read_bytes()
    meta, _ = _read_meta(raw, path)
    return meta


def load_weights(model: Model, path) -> None:
    """Load arrays into an existing model, validating tag and shapes."""
    raw = Path(path).read_bytes()
    meta, data_start = _read_meta(raw, path)
    if meta.get("arch") != model.arch_tag:
        raise ArchitectureError(
            f"{path}: file holds {meta.get('arch')!r} weights, model is"
            f" {model.arch_tag!r}"
        )
    params = {p.name: p for p in model.params()}
    directory = meta.get("arrays", [])
    names = [entry["name"] for entry in directory]
    if sorted(names) != sorted(params):
        missing = sorted(set(params) - set(names))
        extra = sorted(set(names) - set(params))
        raise ArchitectureError(
            f"{path}: array directory mismatch (missing {missing}, extra {extra})"
        )
    staged: list[tuple[np.ndarray, np.ndarray]] = []
    for entry in directory:
        p = params[entry["name"]]
        shape = tuple(entry["shape"])
        if shape != p.value.shape:
            raise ArrayShapeError(
                f"{path}: {entry['name']} has shape {shape}, model expects"
                f" {p.value.shape}"
            )
        lo = data_start + entry["offset"]
        hi = lo + entry["nbytes"]
        if entry["nbytes"] != p.value.size * 8 or hi > len(raw):
            raise TruncatedError(f"{path}: truncated container ({entry['name']})")
        arr = np.frombuffer(raw[lo:hi], dtype="<f8").reshape(shape)
        staged.append((p.value, arr))
    for dst, src in staged:
        dst[...] = src


def load_model(path) -> Model:
    """Build the right architecture from a file's metadata and load it."""
    meta = read_container_meta(path)
    arch = meta.get("arch")
    if not isinstance(arch, str):
        raise ArchitectureError(f"{path}: metadata missing architecture tag")
    try:
        model = build_model(arch, **meta.get("hyper", {}))
    except ValueError as exc:
        raise ArchitectureError(str(exc)) from exc
    load_weights(model, path)
    return model
