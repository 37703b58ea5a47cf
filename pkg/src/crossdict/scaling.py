"""Downsampling (block average) and upsampling (nearest neighbour) between scales.

The pair is chosen so that downsample(upsample(z)) == z: averaging a
replicated block returns the original value. Both maps are linear.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .tensor import Tensor, as_array

#: default per-axis decimation factors by signal rank (image, volume-like, light field)
DEFAULT_FACTORS = {2: (2, 2), 3: (2, 2, 2), 4: (2, 2, 2, 2)}


@dataclass(frozen=True)
class ScaleSpec:
    """Fine patch shape plus per-axis integer decimation factors.

    ``coarse_shape`` is derived; every fine extent must divide evenly.
    """

    fine_shape: tuple
    factors: tuple
    coarse_shape: tuple = field(init=False)

    def __post_init__(self):
        fine = tuple(int(e) for e in self.fine_shape)
        fac = tuple(int(f) for f in self.factors)
        if len(fine) != len(fac):
            raise DimensionError(
                f"fine_shape rank {len(fine)} != factors rank {len(fac)}"
            )
        if any(e < 1 for e in fine) or any(f < 1 for f in fac):
            raise DimensionError("extents and factors must be positive")
        if any(e % f for e, f in zip(fine, fac)):
            raise DimensionError(
                f"fine extents {fine} not divisible by factors {fac}"
            )
        object.__setattr__(self, "fine_shape", fine)
        object.__setattr__(self, "factors", fac)
        object.__setattr__(
            self, "coarse_shape", tuple(e // f for e, f in zip(fine, fac))
        )

    @property
    def fine_size(self) -> int:
        return int(np.prod(self.fine_shape))

    @property
    def coarse_size(self) -> int:
        return int(np.prod(self.coarse_shape))

    @property
    def block_size(self) -> int:
        """Number of fine cells per coarse cell (product of the factors)."""
        return int(np.prod(self.factors))


def _check_shape(arr: np.ndarray, want: tuple, what: str):
    if arr.shape != want:
        raise DimensionError(f"{what}: expected shape {want}, got {arr.shape}")


def downsample(x, spec: ScaleSpec) -> Tensor:
    """Block-average ``x`` (fine shape) down to the coarse shape."""
    arr = as_array(x)
    _check_shape(arr, spec.fine_shape, "downsample")
    return Tensor(_block_mean(arr, spec))


def upsample(x_low, spec: ScaleSpec) -> Tensor:
    """Replicate each coarse cell of ``x_low`` across its factor block."""
    arr = as_array(x_low)
    _check_shape(arr, spec.coarse_shape, "upsample")
    return Tensor(_replicate(arr, spec))


def _block_mean(arr: np.ndarray, spec: ScaleSpec) -> np.ndarray:
    inter = []
    for c, f in zip(spec.coarse_shape, spec.factors):
        inter.extend((c, f))
    view = arr.reshape(inter)
    return view.mean(axis=tuple(range(1, 2 * len(spec.factors), 2)))


def _replicate(arr: np.ndarray, spec: ScaleSpec) -> np.ndarray:
    out = arr
    for axis, f in enumerate(spec.factors):
        if f > 1:
            out = np.repeat(out, f, axis=axis)
    return np.ascontiguousarray(out)


def downsample_columns(cols: np.ndarray, spec: ScaleSpec) -> np.ndarray:
    """Block-average every column of an (N_fine x P) matrix; returns (N_coarse x P).

    Columns are row-major flattened fine patches.
    """
    cols = np.asarray(cols, dtype=np.float64)
    if cols.shape[0] != spec.fine_size:
        raise DimensionError(
            f"column length {cols.shape[0]} != fine size {spec.fine_size}"
        )
    p = cols.shape[1]
    stacked = cols.T.reshape((p,) + spec.fine_shape)
    inter = [p]
    for c, f in zip(spec.coarse_shape, spec.factors):
        inter.extend((c, f))
    view = stacked.reshape(inter)
    red = view.mean(axis=tuple(range(2, 2 * len(spec.factors) + 1, 2)))
    return np.ascontiguousarray(red.reshape(p, spec.coarse_size).T)


def upsample_columns(cols: np.ndarray, spec: ScaleSpec) -> np.ndarray:
    """Nearest-neighbour expand every column of an (N_coarse x P) matrix."""
    cols = np.asarray(cols, dtype=np.float64)
    if cols.shape[0] != spec.coarse_size:
        raise DimensionError(
            f"column length {cols.shape[0]} != coarse size {spec.coarse_size}"
        )
    p = cols.shape[1]
    stacked = cols.T.reshape((p,) + spec.coarse_shape)
    for axis, f in enumerate(spec.factors):
        if f > 1:
            stacked = np.repeat(stacked, f, axis=axis + 1)
    return np.ascontiguousarray(stacked.reshape(p, spec.fine_size).T)
