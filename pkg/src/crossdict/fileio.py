"""Stable on-disk formats: .ten tensors, PGM/PPM images, .csd models.

All binary formats are little-endian so the files read back identically on
any mainstream host.

.ten layout: magic "TENS", version u32 (=1), rank u32, rank extents u32,
then float64 values row-major.

.csd layout: magic "CSDM", version u32 (=1), scale count u32 (1 or 2),
then one record per scale ordered coarse to fine. Each record: patch rank
u32, extents u32 each, N u32, T u32, K u32, Q u32, atom matrix float64
column-major. Q is the branching factor toward the next finer scale and 0
on the finest (or only) scale. A CRC-32 of every preceding byte closes the
file; a mismatch refuses the load outright.

8-bit PGM (P5) / PPM (P6) are accepted for 2-D and RGB images, mapped
linearly to [0, 1] on read and quantized back on write.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .crossscale import CrossScaleModel
from .errors import ChecksumError, DimensionError, FormatError
from .scaling import ScaleSpec
from .tensor import Dictionary, Tensor

_TEN_MAGIC = b"TENS"
_CSD_MAGIC = b"CSDM"
_VERSION = 1


@dataclass(frozen=True)
class SingleScaleModel:
    """A plain dictionary plus the patch geometry and budget it was trained for."""

    dictionary: Dictionary
    patch_shape: tuple
    sparsity: int


def save_tensor(path, tensor: Tensor) -> None:
    arr = np.ascontiguousarray(np.asarray(tensor), dtype="<f8")
    with open(path, "wb") as f:
        f.write(_TEN_MAGIC)
        f.write(struct.pack("<II", _VERSION, arr.ndim))
        f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        f.write(arr.tobytes())


def load_tensor(path) -> Tensor:
    raw = Path(path).read_bytes()
    if raw[:4] != _TEN_MAGIC:
        raise FormatError(f"{path}: not a .ten file (bad magic)")
    if len(raw) < 12:
        raise FormatError(f"{path}: truncated header")
    version, rank = struct.unpack_from("<II", raw, 4)
    if version != _VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if not 1 <= rank <= 4:
        raise FormatError(f"{path}: rank {rank} outside 1..4")
    extents = struct.unpack_from(f"<{rank}I", raw, 12)
    offset = 12 + 4 * rank
    count = int(np.prod(extents))
    if len(raw) != offset + 8 * count:
        raise FormatError(f"{path}: payload size mismatch")
    data = np.frombuffer(raw, dtype="<f8", count=count, offset=offset)
    return Tensor(data.reshape(extents))


def _read_pnm(path) -> Tensor:
    raw = Path(path).read_bytes()
    magic = raw[:2]
    if magic not in (b"P5", b"P6"):
        raise FormatError(f"{path}: unsupported PNM magic {magic!r}")
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        fields.append(int(raw[start:pos]))
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if maxval > 255:
        raise FormatError(f"{path}: only 8-bit PNM supported, maxval={maxval}")
    channels = 3 if magic == b"P6" else 1
    count = width * height * channels
    data = np.frombuffer(raw, dtype=np.uint8, count=count, offset=pos)
    if data.size != count:
        raise FormatError(f"{path}: truncated pixel data")
    img = data.astype(np.float64) / float(maxval)
    if channels == 1:
        return Tensor(img.reshape(height, width))
    return Tensor(img.reshape(height, width, 3))


def _write_pnm(path, tensor: Tensor) -> None:
    arr = np.asarray(tensor)
    if arr.ndim == 2:
        magic, channels = b"P5", 1
    elif arr.ndim == 3 and arr.shape[2] == 3:
        magic, channels = b"P6", 3
    else:
        raise DimensionError(f"PNM output needs a 2-D or HxWx3 tensor, got {arr.shape}")
    q = np.clip(np.round(arr * 255.0), 0, 255).astype(np.uint8)
    h, w = arr.shape[:2]
    with open(path, "wb") as f:
        f.write(magic + b"\n%d %d\n255\n" % (w, h))
        f.write(q.tobytes())


def load_signal(path) -> Tensor:
    """Load a .ten, .pgm, or .ppm file by extension."""
    ext = Path(path).suffix.lower()
    if ext == ".ten":
        return load_tensor(path)
    if ext in (".pgm", ".ppm"):
        return _read_pnm(path)
    raise FormatError(f"{path}: unknown signal format {ext!r}")


def save_signal(path, tensor: Tensor) -> None:
    """Save a tensor as .ten, .pgm, or .ppm by extension."""
    ext = Path(path).suffix.lower()
    if ext == ".ten":
        save_tensor(path, tensor)
    elif ext in (".pgm", ".ppm"):
        _write_pnm(path, tensor)
    else:
        raise FormatError(f"{path}: unknown signal format {ext!r}")


def _pack_record(buf: bytearray, patch_shape, dictionary: Dictionary, k: int, q: int):
    shape = tuple(int(e) for e in patch_shape)
    buf += struct.pack("<I", len(shape))
    buf += struct.pack(f"<{len(shape)}I", *shape)
    buf += struct.pack(
        "<IIII", dictionary.atom_dim, dictionary.num_atoms, int(k), int(q)
    )
    buf += np.asarray(dictionary.atoms, dtype="<f8").tobytes(order="F")


def save_model(path, model, patch_shape=None, sparsity=None) -> None:
    """Serialize a model to .csd.

    ``model`` is a :class:`CrossScaleModel` or a bare :class:`Dictionary`;
    the latter requires ``patch_shape`` and ``sparsity``.
    """
    buf = bytearray()
    buf += _CSD_MAGIC
    buf += struct.pack("<I", _VERSION)
    if isinstance(model, CrossScaleModel):
        buf += struct.pack("<I", 2)
        _pack_record(buf, model.scale.coarse_shape, model.d_low, model.k_low, model.q)
        _pack_record(buf, model.scale.fine_shape, model.d_high, model.k_high, 0)
    elif isinstance(model, SingleScaleModel):
        buf += struct.pack("<I", 1)
        _pack_record(buf, model.patch_shape, model.dictionary, model.sparsity, 0)
    else:
        if patch_shape is None or sparsity is None:
            raise DimensionError("bare Dictionary needs patch_shape and sparsity")
        buf += struct.pack("<I", 1)
        _pack_record(buf, patch_shape, model, sparsity, 0)
    buf += struct.pack("<I", zlib.crc32(bytes(buf)) & 0xFFFFFFFF)
    Path(path).write_bytes(bytes(buf))


class _Reader:
    def __init__(self, raw: bytes, path):
        self.raw = raw
        self.pos = 0
        self.path = path

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.raw):
            raise FormatError(f"{self.path}: truncated file")
        vals = struct.unpack_from(fmt, self.raw, self.pos)
        self.pos += size
        return vals

    def take_floats(self, count: int) -> np.ndarray:
        size = 8 * count
        if self.pos + size > len(self.raw):
            raise FormatError(f"{self.path}: truncated atom data")
        out = np.frombuffer(self.raw, dtype="<f8", count=count, offset=self.pos)
        self.pos += size
        return out


def _unpack_record(r: _Reader):
    (rank,) = r.take("<I")
    if not 1 <= rank <= 4:
        raise FormatError(f"{r.path}: patch rank {rank} outside 1..4")
    extents = r.take(f"<{rank}I")
    n, t, k, q = r.take("<IIII")
    if n != int(np.prod(extents)):
        raise FormatError(f"{r.path}: N={n} inconsistent with patch shape {extents}")
    atoms = r.take_floats(n * t).reshape((n, t), order="F")
    return extents, Dictionary(atoms), k, q


def load_model(path):
    """Load a .csd file; returns a CrossScaleModel or SingleScaleModel.

    The trailing CRC-32 is verified before any parsing; a corrupted file is
    refused rather than partially loaded.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 16:
        raise FormatError(f"{path}: too short for a model file")
    (stored,) = struct.unpack_from("<I", raw, len(raw) - 4)
    if zlib.crc32(raw[:-4]) & 0xFFFFFFFF != stored:
        raise ChecksumError(f"{path}: CRC-32 mismatch, refusing to load")
    r = _Reader(raw[:-4], path)
    magic = r.raw[:4]
    r.pos = 4
    if magic != _CSD_MAGIC:
        raise FormatError(f"{path}: not a .csd file (bad magic)")
    (version,) = r.take("<I")
    if version != _VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    (count,) = r.take("<I")
    if count == 1:
        shape, d, k, q = _unpack_record(r)
        return SingleScaleModel(d, shape, k)
    if count != 2:
        raise FormatError(f"{path}: scale count {count} not in (1, 2)")
    coarse_shape, d_low, k_low, q = _unpack_record(r)
    fine_shape, d_high, k_high, q_fine = _unpack_record(r)
    if q_fine != 0:
        raise FormatError(f"{path}: finest scale must have Q=0, got {q_fine}")
    if d_high.num_atoms != q * d_low.num_atoms:
        raise FormatError(
            f"{path}: T_high={d_high.num_atoms} != Q*T_low={q * d_low.num_atoms}"
        )
    if len(fine_shape) != len(coarse_shape) or any(
        f % c for f, c in zip(fine_shape, coarse_shape)
    ):
        raise FormatError(f"{path}: fine shape {fine_shape} not divisible by coarse {coarse_shape}")
    factors = tuple(f // c for f, c in zip(fine_shape, coarse_shape))
    scale = ScaleSpec(fine_shape, factors)
    return CrossScaleModel(d_low, d_high, scale, k_low, k_high)
