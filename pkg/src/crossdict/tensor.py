"""Core containers: dense tensors, dictionaries of unit-norm atoms, sparse codes.

Axis conventions for tensors are row-major with domain-specific ordering:
images (row, col[, channel]), video (row, col, frame), hyperspectral
(row, col, channel), light fields (row, col, view-row, view-col).

Atom indices are 1-based everywhere in the public API; this matches the
block map (i-1)*Q + {1..Q} used by the cross-scale modules.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np

from .errors import DegenerateAtomError, DimensionError, DomainError

SNR_CAP_DB = 300.0

_MAX_RANK = 4


class Tensor:
    """Immutable dense real tensor of rank 1..4, 64-bit float, row-major."""

    __slots__ = ("_data",)

    def __init__(self, data):
        arr = np.ascontiguousarray(data, dtype=np.float64)
        if arr.ndim < 1 or arr.ndim > _MAX_RANK:
            raise DimensionError(f"tensor rank must be 1..{_MAX_RANK}, got {arr.ndim}")
        if min(arr.shape) < 1:
            raise DimensionError(f"all extents must be >= 1, got shape {arr.shape}")
        arr = arr.copy()
        arr.setflags(write=False)
        self._data = arr

    @property
    def data(self) -> np.ndarray:
        """Read-only ndarray view of the values."""
        return self._data

    @property
    def shape(self) -> tuple:
        return self._data.shape

    @property
    def rank(self) -> int:
        return self._data.ndim

    @property
    def size(self) -> int:
        return self._data.size

    def ravel(self) -> np.ndarray:
        """Flat row-major copy of the values."""
        return self._data.ravel().copy()

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._data
        return self._data.astype(dtype)

    def __repr__(self):
        return f"Tensor(shape={self.shape})"

    def __eq__(self, other):
        if not isinstance(other, Tensor):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self._data, other._data)


def as_array(x) -> np.ndarray:
    """Accept a Tensor or anything array-like; return a float64 ndarray."""
    if isinstance(x, Tensor):
        return x.data
    return np.asarray(x, dtype=np.float64)


class Dictionary:
    """Column dictionary: ``atoms`` is N x T with unit-norm columns.

    Columns are addressed 1-based through :meth:`atom`; the raw matrix is
    0-indexed as usual.
    """

    __slots__ = ("_atoms", "__dict__")

    #: unit-norm check tolerance
    NORM_TOL = 1e-9

    def __init__(self, atoms):
        mat = np.ascontiguousarray(atoms, dtype=np.float64)
        if mat.ndim != 2:
            raise DimensionError(f"atoms must be a 2-D matrix, got ndim={mat.ndim}")
        n, t = mat.shape
        if n < 1 or t < 1:
            raise DimensionError(f"need N >= 1 and T >= 1, got {mat.shape}")
        norms = np.linalg.norm(mat, axis=0)
        bad = np.flatnonzero(np.abs(norms - 1.0) > self.NORM_TOL)
        if bad.size:
            raise DegenerateAtomError(
                f"atom column {bad[0] + 1} has norm {norms[bad[0]]:.12g}, expected 1"
            )
        mat = mat.copy()
        mat.setflags(write=False)
        self._atoms = mat

    @property
    def atoms(self) -> np.ndarray:
        return self._atoms

    @property
    def atom_dim(self) -> int:
        return self._atoms.shape[0]

    @property
    def num_atoms(self) -> int:
        return self._atoms.shape[1]

    @cached_property
    def atoms_t(self) -> np.ndarray:
        """C-contiguous transpose (T x N), cached for correlation scans."""
        at = np.ascontiguousarray(self._atoms.T)
        at.setflags(write=False)
        return at

    def atom(self, j: int) -> np.ndarray:
        """Column ``j`` (1-based) as a fresh vector."""
        if not 1 <= j <= self.num_atoms:
            raise DomainError(f"atom index {j} outside [1, {self.num_atoms}]")
        return self._atoms[:, j - 1].copy()

    def __repr__(self):
        return f"Dictionary(atom_dim={self.atom_dim}, num_atoms={self.num_atoms})"


@dataclass(frozen=True)
class SparseCode:
    """Sparse vector as sorted (index, coefficient) pairs, indices 1-based."""

    dim: int
    entries: tuple

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionError(f"dim must be >= 1, got {self.dim}")
        ent = tuple((int(i), float(c)) for i, c in self.entries)
        prev = 0
        for i, _ in ent:
            if i <= prev:
                raise DomainError("entry indices must be strictly increasing")
            prev = i
        if ent and ent[-1][0] > self.dim:
            raise DomainError(f"entry index {ent[-1][0]} exceeds dim {self.dim}")
        object.__setattr__(self, "entries", ent)

    @classmethod
    def from_arrays(cls, dim: int, indices: Iterable[int], coefficients) -> "SparseCode":
        """Build from parallel 1-based index / coefficient sequences (any order)."""
        idx = np.asarray(list(indices), dtype=np.int64)
        coef = np.asarray(coefficients, dtype=np.float64)
        if idx.shape != coef.shape:
            raise DimensionError("indices and coefficients must have equal length")
        order = np.argsort(idx, kind="stable")
        return cls(dim, tuple(zip(idx[order].tolist(), coef[order].tolist())))

    @classmethod
    def from_dense(cls, vec) -> "SparseCode":
        v = as_array(vec).ravel()
        nz = np.flatnonzero(v)
        return cls(v.size, tuple(zip((nz + 1).tolist(), v[nz].tolist())))

    @property
    def support(self) -> tuple:
        """Sorted 1-based indices of the nonzero entries."""
        return tuple(i for i, _ in self.entries)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for _, c in self.entries], dtype=np.float64)

    @property
    def nnz(self) -> int:
        return len(self.entries)

    def to_dense(self) -> np.ndarray:
        v = np.zeros(self.dim)
        for i, c in self.entries:
            v[i - 1] = c
        return v


def snr(reference, estimate) -> float:
    """Recovered signal-to-noise ratio, 20*log10(||x|| / ||x - xhat||), in dB.

    Exact reconstruction (and anything beyond it numerically) is capped at
    +300 dB so downstream CSV output stays finite.
    """
    x = as_array(reference)
    xh = as_array(estimate)
    if x.shape != xh.shape:
        raise DimensionError(f"shape mismatch: {x.shape} vs {xh.shape}")
    nx = np.linalg.norm(x)
    if nx == 0.0:
        raise DomainError("reference signal is identically zero")
    err = np.linalg.norm(x - xh)
    if err == 0.0:
        return SNR_CAP_DB
    return min(SNR_CAP_DB, 20.0 * np.log10(nx / err))


def normalize_atoms(matrix) -> Dictionary:
    """Scale each column of ``matrix`` to unit Euclidean norm.

    Raises :class:`DegenerateAtomError` naming the (1-based) column if any
    column is the zero vector.
    """
    mat = np.asarray(matrix, dtype=np.float64)
    if mat.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got ndim={mat.ndim}")
    norms = np.linalg.norm(mat, axis=0)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise DegenerateAtomError(f"atom column {zero[0] + 1} is the zero vector")
    return Dictionary(mat / norms)


def reconstruct(dictionary: Dictionary, code: SparseCode) -> Tensor:
    """Dense signal sum(c_j * atom_j) for the entries of ``code`` (rank-1)."""
    if code.dim != dictionary.num_atoms:
        raise DimensionError(
            f"code dim {code.dim} != dictionary num_atoms {dictionary.num_atoms}"
        )
    out = np.zeros(dictionary.atom_dim)
    if code.entries:
        idx0 = np.array([i - 1 for i, _ in code.entries])
        out = dictionary.atoms[:, idx0] @ code.coefficients
    return Tensor(out)
