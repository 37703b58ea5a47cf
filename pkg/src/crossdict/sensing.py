"""Linear measurement operators with forward and adjoint application.

Kinds cover the acquisition architectures used by the recovery pipelines:
identity (denoising), coordinate masks (inpainting), per-pixel channel
mosaics (Bayer and spectral demosaicing), per-pixel temporal exposure codes
(video compressive sensing, one coded image from F frames), whole-view
angular sampling (light fields), plus explicit dense matrices. Structured
kinds apply in O(N + M) time and memory; nothing is densified.

Patch-aligned slicing: recovery is per patch, so a full-signal operator is
cut into patch-local sub-operators along a patch grid. ``patch_problem``
returns the sub-operator together with the patch's measurement vector.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, DimensionError
from .tensor import as_array

KINDS = ("identity", "mask", "channel-mosaic", "temporal-code", "angular-sample", "dense")


class LinearOperator:
    """Measurement map with ``apply`` (forward) and ``adjoint``.

    Built through the module-level constructors; ``kind`` selects the
    structured implementation. Immutable after construction.
    """

    def __init__(self, kind, input_dim, output_dim, *, gather=None, code=None,
                 matrix=None, params=None):
        if kind not in KINDS:
            raise ConfigError(f"unknown operator kind {kind!r}")
        self.kind = kind
        self.input_dim = int(input_dim)
        self.output_dim = int(output_dim)
        self._gather = gather
        self._code = code
        self._matrix = matrix
        self.params = params or {}

    def __repr__(self):
        return f"LinearOperator(kind={self.kind!r}, {self.output_dim}x{self.input_dim})"

    def _check_len(self, v, want, what):
        if v.ndim != 1 or v.size != want:
            raise DimensionError(f"{what} must have length {want}, got shape {v.shape}")

    def apply(self, x) -> np.ndarray:
        """Forward map: length-N input to length-M measurement."""
        x = as_array(x).ravel()
        self._check_len(x, self.input_dim, "input")
        if self.kind == "identity":
            return x.copy()
        if self._gather is not None:
            return x[self._gather]
        if self.kind == "temporal-code":
            spatial, frames = self._code.shape
            return (x.reshape(spatial, frames) * self._code).sum(axis=1)
        return self._matrix @ x

    def adjoint(self, y) -> np.ndarray:
        """Adjoint map: length-M measurement back to length-N signal space."""
        y = as_array(y).ravel()
        self._check_len(y, self.output_dim, "measurement")
        if self.kind == "identity":
            return y.copy()
        if self._gather is not None:
            out = np.zeros(self.input_dim)
            out[self._gather] = y
            return out
        if self.kind == "temporal-code":
            return (y[:, None] * self._code).ravel()
        return self._matrix.T @ y

    def apply_matrix(self, cols: np.ndarray) -> np.ndarray:
        """Forward map applied to every column of an N x C matrix."""
        cols = np.asarray(cols, dtype=np.float64)
        if cols.shape[0] != self.input_dim:
            raise DimensionError(
                f"columns must have length {self.input_dim}, got {cols.shape[0]}"
            )
        if self.kind == "identity":
            return cols.copy()
        if self._gather is not None:
            return cols[self._gather]
        if self.kind == "temporal-code":
            spatial, frames = self._code.shape
            return (cols.reshape(spatial, frames, -1) * self._code[:, :, None]).sum(axis=1)
        return self._matrix @ cols


def identity(n: int) -> LinearOperator:
    if n < 1:
        raise ConfigError("identity needs n >= 1")
    return LinearOperator("identity", n, n)


def make_mask(n: int, known_indices) -> LinearOperator:
    """Keep the listed coordinates (1-based) of a length-n signal."""
    idx = np.asarray(list(known_indices), dtype=np.int64)
    if idx.size < 1:
        raise ConfigError("mask must keep at least one coordinate")
    if idx.min() < 1 or idx.max() > n:
        raise ConfigError(f"mask index outside [1, {n}]")
    if np.unique(idx).size != idx.size:
        raise ConfigError("mask indices must be unique")
    gather = np.sort(idx) - 1
    return LinearOperator("mask", n, gather.size, gather=gather,
                          params={"known": gather + 1})


def make_channel_mosaic(spatial_extent: int, channel_count: int, assignment) -> LinearOperator:
    """One channel per pixel: output p reads channel assignment[p] (1-based).

    Input layout is row-major with the channel axis last, so pixel p,
    channel c sits at flat index p*channel_count + (c-1).
    """
    a = np.asarray(list(assignment), dtype=np.int64).ravel()
    if a.size != spatial_extent:
        raise ConfigError(f"assignment length {a.size} != spatial extent {spatial_extent}")
    if channel_count < 1 or a.min() < 1 or a.max() > channel_count:
        raise ConfigError(f"assignment values must lie in [1, {channel_count}]")
    gather = np.arange(spatial_extent, dtype=np.int64) * channel_count + (a - 1)
    return LinearOperator(
        "channel-mosaic", spatial_extent * channel_count, spatial_extent,
        gather=gather, params={"assignment": a, "channels": channel_count},
    )


def make_temporal_code(spatial_extent: int, frames: int, code) -> LinearOperator:
    """Coded exposure: output pixel p sums the frames where code[p, f] = 1.

    Input layout is row-major with the frame axis last. Every pixel must be
    active in at least one frame, otherwise it is unrecoverable. Codes with
    exactly one active frame per pixel apply as a plain coordinate gather.
    """
    c = np.asarray(code, dtype=np.float64).reshape(spatial_extent, frames)
    if not np.isin(c, (0.0, 1.0)).all():
        raise ConfigError("temporal code must be binary (0/1)")
    active = c.sum(axis=1)
    dead = np.flatnonzero(active == 0)
    if dead.size:
        raise ConfigError(f"pixel {dead[0] + 1} is active in no frame")
    gather = None
    if (active == 1).all():
        gather = (np.arange(spatial_extent, dtype=np.int64) * frames
                  + np.argmax(c, axis=1))
    return LinearOperator(
        "temporal-code", spatial_extent * frames, spatial_extent,
        gather=gather, code=np.ascontiguousarray(c), params={"frames": frames},
    )


def make_angular_sample(spatial_extent: int, view_grid, kept_views) -> LinearOperator:
    """Keep whole sub-aperture views of a light field.

    ``view_grid`` is (view-rows, view-cols); ``kept_views`` lists 1-based
    row-major view indices. Input layout is (spatial, view-row, view-col)
    row-major; output is (spatial, kept-slot) row-major with kept views in
    ascending index order.
    """
    vr, vc = (int(v) for v in view_grid)
    n_views = vr * vc
    kept = np.asarray(list(kept_views), dtype=np.int64)
    if kept.size < 1:
        raise ConfigError("must keep at least one view")
    if kept.min() < 1 or kept.max() > n_views:
        raise ConfigError(f"view index outside [1, {n_views}]")
    if np.unique(kept).size != kept.size:
        raise ConfigError("kept views must be unique")
    kept = np.sort(kept)
    gather = (np.arange(spatial_extent, dtype=np.int64)[:, None] * n_views
              + (kept - 1)[None, :]).ravel()
    return LinearOperator(
        "angular-sample", spatial_extent * n_views, spatial_extent * kept.size,
        gather=gather, params={"view_grid": (vr, vc), "kept": kept},
    )


def make_dense(matrix) -> LinearOperator:
    m = np.ascontiguousarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionError("dense operator needs a 2-D matrix")
    return LinearOperator("dense", m.shape[1], m.shape[0], matrix=m)


def mask_from_tensor(known) -> LinearOperator:
    """Mask operator from a 0/1 tensor over the signal domain (row-major)."""
    flags = as_array(known).ravel()
    return make_mask(flags.size, (np.flatnonzero(flags != 0) + 1).tolist())


# ---------------------------------------------------------------------------
# patch-aligned slicing
# ---------------------------------------------------------------------------


def _window(origin, patch_shape):
    return tuple(slice(o, o + e) for o, e in zip(origin, patch_shape))


def patch_problem(op, measurement, origin, patch_shape, signal_shape):
    """Cut a full-signal operator + measurement down to one patch.

    ``measurement`` uses the operator's natural layout: the embedded signal
    domain for identity/mask (unknown cells arbitrary), the 2-D coded image
    for mosaics and temporal codes, and (rows, cols, kept-views) for angular
    sampling. Returns ``(sub_op, y_patch)`` where ``sub_op`` is None for the
    identity (the patch itself is the measurement).
    """
    origin = tuple(int(o) for o in origin)
    patch_shape = tuple(int(e) for e in patch_shape)
    signal_shape = tuple(int(e) for e in signal_shape)
    meas = as_array(measurement)
    kind = op.kind if op is not None else "identity"

    if kind == "identity":
        if meas.shape != signal_shape:
            raise DimensionError(f"measurement shape {meas.shape} != signal {signal_shape}")
        return None, meas[_window(origin, patch_shape)].ravel().copy()

    if kind == "mask":
        if meas.shape != signal_shape:
            raise DimensionError(f"embedded measurement shape {meas.shape} != signal {signal_shape}")
        known = np.zeros(int(np.prod(signal_shape)), dtype=bool)
        known[op._gather] = True
        local = known.reshape(signal_shape)[_window(origin, patch_shape)].ravel()
        kept0 = np.flatnonzero(local)
        if kept0.size == 0:
            return make_mask(int(np.prod(patch_shape)), [1]), None  # unrecoverable patch
        sub = make_mask(int(np.prod(patch_shape)), (kept0 + 1).tolist())
        y = meas[_window(origin, patch_shape)].ravel()[kept0]
        return sub, y

    if kind == "channel-mosaic":
        channels = op.params["channels"]
        spatial_shape = signal_shape[:-1]
        if signal_shape[-1] != channels or patch_shape[-1] != channels:
            raise DimensionError("mosaic patches must span the full channel axis")
        if meas.shape != spatial_shape:
            raise DimensionError(f"coded image shape {meas.shape} != spatial {spatial_shape}")
        a_nd = op.params["assignment"].reshape(spatial_shape)
        win = _window(origin[:-1], patch_shape[:-1])
        local_a = a_nd[win].ravel()
        sub = make_channel_mosaic(local_a.size, channels, local_a)
        return sub, meas[win].ravel().copy()

    if kind == "temporal-code":
        frames = op.params["frames"]
        spatial_shape = signal_shape[:-1]
        if signal_shape[-1] != frames or patch_shape[-1] != frames:
            raise DimensionError("temporal patches must span the full frame axis")
        if meas.shape != spatial_shape:
            raise DimensionError(f"coded image shape {meas.shape} != spatial {spatial_shape}")
        code_nd = op._code.reshape(spatial_shape + (frames,))
        win = _window(origin[:-1], patch_shape[:-1])
        local_code = code_nd[win].reshape(-1, frames)
        sub = make_temporal_code(local_code.shape[0], frames, local_code)
        return sub, meas[win].ravel().copy()

    if kind == "angular-sample":
        vr, vc = op.params["view_grid"]
        kept = op.params["kept"]
        spatial_shape = signal_shape[:-2]
        if signal_shape[-2:] != (vr, vc) or patch_shape[-2:] != (vr, vc):
            raise DimensionError("angular patches must span the full view grid")
        if meas.shape != spatial_shape + (kept.size,):
            raise DimensionError(
                f"measurement shape {meas.shape} != {spatial_shape + (kept.size,)}"
            )
        win = _window(origin[:-2], patch_shape[:-2])
        n_spatial = int(np.prod(patch_shape[:-2]))
        sub = make_angular_sample(n_spatial, (vr, vc), kept.tolist())
        return sub, meas[win].reshape(n_spatial, kept.size).ravel().copy()

    raise ConfigError(f"cannot slice operator kind {kind!r} per patch")
