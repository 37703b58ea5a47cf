"""Overlapping patch extraction, DC handling, and overlap-averaged assembly.

Patches are vectorized in row-major cell order and stacked as the columns
of an N x P matrix; the accompanying grid records every patch origin so
the signal can be reassembled by averaging all patches that cover a cell.
Intensities are treated as plain floats; images read from 8-bit files land
in [0, 1] and no further normalization is applied anywhere in the package.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionError
from .tensor import Tensor, as_array


@dataclass(frozen=True)
class PatchGrid:
    """Geometry of one extraction: shapes, strides, origins, optional DC."""

    signal_shape: tuple
    patch_shape: tuple
    stride: tuple
    origins: np.ndarray
    dc_values: Optional[np.ndarray] = None

    @property
    def patch_count(self) -> int:
        return self.origins.shape[0]

    @property
    def patch_size(self) -> int:
        return int(np.prod(self.patch_shape))


def _as_tuple(value, rank, name):
    if np.isscalar(value):
        return (int(value),) * rank
    t = tuple(int(v) for v in value)
    if len(t) != rank:
        raise DimensionError(f"{name} must have {rank} entries, got {len(t)}")
    return t


def patch_count(signal_shape, patch_shape, stride) -> int:
    """Number of patch positions: prod over axes of floor((ext-patch)/stride)+1."""
    total = 1
    for ext, pe, st in zip(signal_shape, patch_shape, stride):
        total *= (ext - pe) // st + 1
    return total


def extract_patches(signal, patch_shape, stride=1, remove_dc: bool = False):
    """Slide a patch window over ``signal`` and stack the patches as columns.

    Returns ``(columns, grid)`` where columns is patch_size x P. With
    ``remove_dc`` each column's mean is subtracted and kept in the grid for
    re-insertion at aggregation time.
    """
    arr = as_array(signal)
    rank = arr.ndim
    pshape = _as_tuple(patch_shape, rank, "patch_shape")
    strides = _as_tuple(stride, rank, "stride")
    if any(s < 1 for s in strides):
        raise DimensionError("stride entries must be >= 1")
    if any(pe > ext for pe, ext in zip(pshape, arr.shape)):
        raise DimensionError(f"patch {pshape} larger than signal {arr.shape}")

    windows = np.lib.stride_tricks.sliding_window_view(arr, pshape)
    sub = windows[tuple(slice(None, None, s) for s in strides)]
    grid_shape = sub.shape[:rank]
    p = int(np.prod(grid_shape))
    cols = np.ascontiguousarray(sub.reshape(p, -1).T)

    axes = [np.arange(g) * s for g, s in zip(grid_shape, strides)]
    mesh = np.meshgrid(*axes, indexing="ij")
    origins = np.stack([m.ravel() for m in mesh], axis=1).astype(np.int64)

    dc = None
    if remove_dc:
        dc = cols.mean(axis=0)
        cols -= dc[None, :]
    grid = PatchGrid(tuple(arr.shape), pshape, strides, origins, dc)
    return cols, grid


def aggregate_patches(patch_columns, grid: PatchGrid, add_dc: bool = False) -> Tensor:
    """Assemble a signal from patch columns by averaging overlapping cells.

    Cells covered by no patch are left at zero and reported with a warning.
    With ``add_dc`` the stored per-patch means are re-added first.
    """
    cols = np.asarray(patch_columns, dtype=np.float64)
    if cols.shape != (grid.patch_size, grid.patch_count):
        raise DimensionError(
            f"expected columns {grid.patch_size} x {grid.patch_count}, got {cols.shape}"
        )
    if add_dc:
        if grid.dc_values is None:
            raise DimensionError("grid carries no dc_values to re-add")
        cols = cols + grid.dc_values[None, :]

    acc = np.zeros(grid.signal_shape)
    weight = np.zeros(grid.signal_shape)
    pshape = grid.patch_shape
    for p in range(grid.patch_count):
        window = tuple(slice(o, o + e) for o, e in zip(grid.origins[p], pshape))
        acc[window] += cols[:, p].reshape(pshape)
        weight[window] += 1.0
    uncovered = weight == 0
    if uncovered.any():
        warnings.warn(
            f"{int(uncovered.sum())} signal cells are covered by no patch; left at 0",
            stacklevel=2,
        )
        weight[uncovered] = 1.0
    return Tensor(acc / weight)
