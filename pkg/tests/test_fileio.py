import struct
import zlib

import numpy as np
import pytest

from crossdict.errors import ChecksumError, DimensionError, FormatError
from crossdict.fileio import (SingleScaleModel, load_model, load_signal,
                              load_tensor, save_model, save_signal, save_tensor)
from crossdict.scaling import ScaleSpec
from crossdict.synthetic import planted_cross_scale_model, planted_dictionary
from crossdict.tensor import Tensor


@pytest.mark.parametrize("shape", [(7,), (3, 5), (2, 3, 4), (2, 2, 3, 2)])
def test_tensor_round_trip_bit_exact(tmp_path, shape):
    rng = np.random.default_rng(0)
    t = Tensor(rng.standard_normal(shape))
    path = tmp_path / "x.ten"
    save_tensor(path, t)
    back = load_tensor(path)
    assert back.shape == t.shape
    assert np.array_equal(np.asarray(back), np.asarray(t))


def test_tensor_bad_magic(tmp_path):
    path = tmp_path / "bad.ten"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(FormatError):
        load_tensor(path)


def test_tensor_truncated(tmp_path):
    t = Tensor(np.arange(6.0).reshape(2, 3))
    path = tmp_path / "x.ten"
    save_tensor(path, t)
    raw = path.read_bytes()
    path.write_bytes(raw[:-4])
    with pytest.raises(FormatError):
        load_tensor(path)


def test_pgm_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    img = Tensor(rng.random((9, 7)))
    path = tmp_path / "img.pgm"
    save_signal(path, img)
    back = load_signal(path)
    assert back.shape == (9, 7)
    assert np.abs(np.asarray(back) - np.asarray(img)).max() <= 0.5 / 255 + 1e-12


def test_ppm_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    img = Tensor(rng.random((5, 6, 3)))
    path = tmp_path / "img.ppm"
    save_signal(path, img)
    back = load_signal(path)
    assert back.shape == (5, 6, 3)
    assert np.abs(np.asarray(back) - np.asarray(img)).max() <= 0.5 / 255 + 1e-12


def test_pgm_header_comments(tmp_path):
    payload = bytes(range(6))
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# a comment\n3 2\n# another\n255\n" + payload)
    img = load_signal(path)
    assert img.shape == (2, 3)
    assert np.allclose(np.asarray(img).ravel(), np.arange(6) / 255.0)


def test_pgm_16bit_rejected(tmp_path):
    path = tmp_path / "deep.pgm"
    path.write_bytes(b"P5\n2 2\n65535\n" + b"\x00" * 8)
    with pytest.raises(FormatError):
        load_signal(path)


def test_unknown_extension(tmp_path):
    with pytest.raises(FormatError):
        load_signal(tmp_path / "x.bin")
    with pytest.raises(FormatError):
        save_signal(tmp_path / "x.bin", Tensor(np.zeros(3)))


def test_single_scale_model_round_trip(tmp_path):
    d = planted_dictionary(16, 24, seed=3)
    model = SingleScaleModel(d, (4, 4), 5)
    path = tmp_path / "m.csd"
    save_model(path, model)
    back = load_model(path)
    assert isinstance(back, SingleScaleModel)
    assert back.patch_shape == (4, 4) and back.sparsity == 5
    assert np.array_equal(back.dictionary.atoms, d.atoms)


def test_cross_scale_model_round_trip(tmp_path):
    spec = ScaleSpec((4, 4), (2, 2))
    model = planted_cross_scale_model(spec, 4, 16, seed=4, k_low=2, k_high=4)
    path = tmp_path / "m.csd"
    save_model(path, model)
    back = load_model(path)
    assert back.q == model.q and back.k_low == 2 and back.k_high == 4
    assert back.scale.fine_shape == (4, 4) and back.scale.factors == (2, 2)
    assert np.array_equal(back.d_low.atoms, model.d_low.atoms)
    assert np.array_equal(back.d_high.atoms, model.d_high.atoms)


def test_checksum_corruption_refused(tmp_path):
    d = planted_dictionary(8, 10, seed=5)
    path = tmp_path / "m.csd"
    save_model(path, d, patch_shape=(8,), sparsity=3)
    raw = bytearray(path.read_bytes())
    raw[40] ^= 0xFF
    path.write_bytes(bytes(raw))
    with pytest.raises(ChecksumError):
        load_model(path)


def test_model_truncation_refused(tmp_path):
    d = planted_dictionary(8, 10, seed=6)
    path = tmp_path / "m.csd"
    save_model(path, d, patch_shape=(8,), sparsity=3)
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) // 2])
    with pytest.raises((ChecksumError, FormatError)):
        load_model(path)


def test_model_bad_magic_with_valid_crc(tmp_path):
    body = b"XXXX" + struct.pack("<I", 1)
    crc = struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)
    path = tmp_path / "m.csd"
    path.write_bytes(body + crc)
    with pytest.raises(FormatError):
        load_model(path)


def test_bare_dictionary_requires_geometry(tmp_path):
    d = planted_dictionary(8, 10, seed=7)
    with pytest.raises(DimensionError):
        save_model(tmp_path / "m.csd", d)
