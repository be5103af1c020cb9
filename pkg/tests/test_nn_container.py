"""Weight file format: bit-exact round trips and hostile inputs."""

import numpy as np
import pytest

from autorc.nn.container import (
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
from autorc.nn.models import LinearCnnModel, RnnModel


def test_roundtrip_bit_exact(tmp_path):
    model = LinearCnnModel(seed=9)
    path = tmp_path / "m.w"
    save_weights(model, path)
    clone = load_model(path)
    assert clone.arch_tag == "linear_cnn"
    for a, b in zip(model.params(), clone.params()):
        assert a.name == b.name
        np.testing.assert_array_equal(a.value, b.value)


def test_roundtrip_sequence_model(tmp_path):
    model = RnnModel(sequence_len=3, seed=4)
    path = tmp_path / "r.w"
    save_weights(model, path)
    clone = load_model(path)
    assert clone.sequence_len == 3
    x = np.random.default_rng(0).random((1, 3, 120, 160, 3))
    np.testing.assert_array_equal(model.forward(x), clone.forward(x))


def test_meta_readable_without_weights(tmp_path):
    model = LinearCnnModel(joint_head=True, seed=0)
    path = tmp_path / "m.w"
    save_weights(model, path)
    meta = read_container_meta(path)
    assert meta["arch"] == "linear_cnn"
    assert meta["hyper"]["joint_head"] is True
    assert len(meta["arrays"]) == len(model.params())


def test_truncation_never_crashes_and_always_raises(tmp_path):
    model = LinearCnnModel(seed=1)
    path = tmp_path / "m.w"
    save_weights(model, path)
    raw = path.read_bytes()
    cut_points = list(range(0, 64)) + [
        len(raw) // 4, len(raw) // 2, len(raw) - 9, len(raw) - 1
    ]
    for cut in cut_points:
        clipped = tmp_path / "clipped.w"
        clipped.write_bytes(raw[:cut])
        with pytest.raises(WeightsError):
            load_model(clipped)


def test_bad_magic(tmp_path):
    path = tmp_path / "junk.w"
    path.write_bytes(b"NOPE" + bytes(64))
    with pytest.raises(BadMagicError):
        load_model(path)


def test_bad_version(tmp_path):
    model = LinearCnnModel(seed=0)
    path = tmp_path / "m.w"
    save_weights(model, path)
    raw = bytearray(path.read_bytes())
    raw[4:6] = (99).to_bytes(2, "little")
    path.write_bytes(bytes(raw))
    with pytest.raises(VersionError):
        load_model(path)


def test_arch_mismatch_refused(tmp_path):
    lin = LinearCnnModel(seed=0)
    path = tmp_path / "lin.w"
    save_weights(lin, path)
    with pytest.raises(ArchitectureError):
        load_weights(RnnModel(seed=0), path)


def test_head_layout_mismatch_refused(tmp_path):
    split = LinearCnnModel(joint_head=False, seed=0)
    path = tmp_path / "split.w"
    save_weights(split, path)
    with pytest.raises(ArchitectureError):
        load_weights(LinearCnnModel(joint_head=True, seed=0), path)


def test_shape_mismatch_refused(tmp_path):
    a = RnnModel(sequence_len=3, seed=0)
    path = tmp_path / "a.w"
    save_weights(a, path)
    meta = read_container_meta(path)
    # same parameter names, different window length: arrays all agree,
    # so loading into a longer-window clone must still succeed
    clone = RnnModel(sequence_len=5, seed=1)
    load_weights(clone, path)
    assert meta["hyper"]["sequence_len"] == 3

    # corrupt one declared shape in the header
    raw = bytearray(path.read_bytes())
    idx = raw.find(b'"shape": [128, 512]')
    assert idx > 0
    raw[idx:idx + len(b'"shape": [128, 512]')] = b'"shape": [512, 128]'
    path.write_bytes(bytes(raw))
    with pytest.raises((ArrayShapeError, WeightsError)):
        load_weights(RnnModel(sequence_len=3, seed=0), path)


def test_loaded_weights_do_not_alias_file_buffer(tmp_path):
    model = LinearCnnModel(seed=2)
    path = tmp_path / "m.w"
    save_weights(model, path)
    clone = load_model(path)
    p = clone.params()[0]
    assert p.value.flags.writeable
    p.value += 1.0  # must not raise
