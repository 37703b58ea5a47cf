"""Synthetic desk-scale signals and planted ground-truth models.

Full-size photographic corpora are out of scope; these generators produce
small piecewise-smooth images, videos, spectral cubes and light fields with
enough structure for dictionary learning, plus planted dictionary/code
pairs where the correct answer is known in advance.

Planted coefficients decay geometrically (ratio ~3 between successive
magnitudes): greedy pursuit provably struggles on equal-magnitude mixtures
of coherent atoms, and an oracle dataset must be codable by the algorithm
under test before it can measure dictionary recovery.
"""

from __future__ import annotations

import numpy as np

from .crossscale import CrossScaleModel
from .errors import ConfigError
from .scaling import ScaleSpec, downsample_columns, upsample_columns
from .tensor import Dictionary, Tensor, normalize_atoms


def synthetic_image(shape=(256, 256), seed: int = 0) -> Tensor:
    """Piecewise-smooth test image in [0, 1]: smooth base, blocks, textures."""
    rng = np.random.default_rng(seed)
    h, w = shape
    yy, xx = np.meshgrid(np.linspace(0, 1, h), np.linspace(0, 1, w), indexing="ij")
    img = np.zeros(shape)
    for _ in range(3):
        fx, fy = rng.uniform(0.5, 2.0, size=2)
        ph = rng.uniform(0, 2 * np.pi)
        img += rng.uniform(0.1, 0.25) * np.cos(2 * np.pi * (fx * xx + fy * yy) + ph)
    for _ in range(8):
        r0, c0 = rng.integers(0, h - h // 4), rng.integers(0, w - w // 4)
        rh, cw = rng.integers(h // 16, h // 4), rng.integers(w // 16, w // 4)
        img[r0 : r0 + rh, c0 : c0 + cw] += rng.uniform(-0.5, 0.5)
    for _ in range(4):
        r0, c0 = rng.integers(0, h - h // 4), rng.integers(0, w - w // 4)
        rh, cw = rng.integers(h // 8, h // 4), rng.integers(w // 8, w // 4)
        theta = rng.uniform(0, np.pi)
        freq = rng.uniform(4, 12)
        patch = np.sin(2 * np.pi * freq * (xx[r0 : r0 + rh, c0 : c0 + cw] * np.cos(theta)
                                           + yy[r0 : r0 + rh, c0 : c0 + cw] * np.sin(theta)))
        img[r0 : r0 + rh, c0 : c0 + cw] += 0.15 * patch
    cy, cx = rng.uniform(0.2, 0.8, size=2)
    rad = rng.uniform(0.08, 0.2)
    img[(yy - cy) ** 2 + (xx - cx) ** 2 < rad**2] += rng.uniform(-0.4, 0.4)
    img -= img.min()
    img /= img.max()
    return Tensor(img)


def synthetic_video(spatial=(32, 32), frames: int = 8, seed: int = 0) -> Tensor:
    """Moving squares over a drifting gradient; shape (rows, cols, frames)."""
    rng = np.random.default_rng(seed)
    h, w = spatial
    yy, xx = np.meshgrid(np.linspace(0, 1, h), np.linspace(0, 1, w), indexing="ij")
    vid = np.zeros((h, w, frames))
    d0 = rng.uniform(0, 2 * np.pi)
    sq = max(3, h // 6)
    r0, c0 = rng.integers(0, h - sq - frames), rng.integers(0, w - sq - frames)
    r1, c1 = rng.integers(frames, h - sq), rng.integers(frames, w - sq)
    for f in range(frames):
        base = 0.3 + 0.25 * np.cos(2 * np.pi * (xx + yy) + d0 + 0.2 * f)
        frame = base.copy()
        frame[r0 + f : r0 + f + sq, c0 + f : c0 + f + sq] += 0.5
        frame[r1 - f : r1 - f + sq, c1 - f : c1 - f + sq] -= 0.3
        vid[:, :, f] = frame
    vid -= vid.min()
    vid /= vid.max()
    return Tensor(vid)


def synthetic_hyperspectral(spatial=(48, 48), channels: int = 8, seed: int = 0) -> Tensor:
    """Region map of a few materials with smooth spectra; (rows, cols, channels)."""
    rng = np.random.default_rng(seed)
    h, w = spatial
    n_mat = 5
    centers = rng.uniform(0, 1, size=(n_mat, 2))
    yy, xx = np.meshgrid(np.linspace(0, 1, h), np.linspace(0, 1, w), indexing="ij")
    d2 = (yy[..., None] - centers[:, 0]) ** 2 + (xx[..., None] - centers[:, 1]) ** 2
    region = np.argmin(d2, axis=2)
    lam = np.linspace(0, 1, channels)
    spectra = np.zeros((n_mat, channels))
    for m in range(n_mat):
        mu1, mu2 = rng.uniform(0, 1, size=2)
        a1, a2 = rng.uniform(0.3, 1.0, size=2)
        spectra[m] = a1 * np.exp(-((lam - mu1) ** 2) / 0.08) + a2 * np.exp(-((lam - mu2) ** 2) / 0.15)
    shading = 0.7 + 0.3 * np.cos(2 * np.pi * (xx + 0.7 * yy) + rng.uniform(0, 2 * np.pi))
    cube = spectra[region] * shading[..., None]
    cube -= cube.min()
    cube /= cube.max()
    return Tensor(cube)


def synthetic_lightfield(spatial=(16, 16), views=(4, 4), seed: int = 0,
                         parallax: int = 1) -> Tensor:
    """Base image shifted per view; shape (rows, cols, view-rows, view-cols)."""
    rng = np.random.default_rng(seed)
    base = synthetic_image(spatial, seed=seed + 100).data
    vr, vc = views
    lf = np.zeros(spatial + (vr, vc))
    for u in range(vr):
        for v in range(vc):
            du = (u - (vr - 1) / 2) * parallax
            dv = (v - (vc - 1) / 2) * parallax
            lf[:, :, u, v] = np.roll(base, (int(round(du)), int(round(dv))), axis=(0, 1))
    return Tensor(lf)


def planted_dictionary(n: int, t: int, seed: int = 0) -> Dictionary:
    """Random unit-norm Gaussian atoms."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, t))
    return Dictionary(g / np.linalg.norm(g, axis=0))


def planted_sparse_signals(dictionary: Dictionary, k: int, count: int, seed: int = 0,
                           decay: float = 3.0):
    """Exact k-sparse mixtures with geometrically decaying coefficients.

    Returns ``(signals, coefficients)`` as (N x count) and (T x count).
    """
    rng = np.random.default_rng(seed)
    t = dictionary.num_atoms
    x = np.zeros((t, count))
    for p in range(count):
        idx = rng.choice(t, size=k, replace=False)
        mags = rng.uniform(1.0, 1.5, size=k) * (decay ** -np.arange(k))
        x[idx, p] = mags * rng.choice([-1.0, 1.0], size=k)
    return dictionary.atoms @ x, x


def planted_cross_scale_model(scale: ScaleSpec, t_low: int, t_high: int, seed: int = 0,
                              detail: float = 0.5, k_low: int = 2,
                              k_high: int = 3) -> CrossScaleModel:
    """Cross-scale model whose fine atoms downsample onto their parents.

    Each fine atom is its parent's nearest-neighbour upsampling plus a
    component from the null space of the block average, so the coarse
    structure of any model signal is exactly a mixture of the parents.
    """
    if t_high % t_low:
        raise ConfigError(f"t_high={t_high} must be a multiple of t_low={t_low}")
    q = t_high // t_low
    rng = np.random.default_rng(seed)
    n_low = scale.coarse_size
    if t_low <= n_low:
        g = rng.standard_normal((n_low, max(t_low, 1)))
        qmat, _ = np.linalg.qr(g)
        d_low = Dictionary(qmat[:, :t_low])
    else:
        g = rng.standard_normal((n_low, t_low))
        d_low = Dictionary(g / np.linalg.norm(g, axis=0))
    up = upsample_columns(d_low.atoms, scale)
    cols = []
    for parent in range(t_low):
        for _ in range(q):
            z = rng.standard_normal(scale.fine_size)
            z_null = z - upsample_columns(downsample_columns(z[:, None], scale), scale)[:, 0]
            zn = np.linalg.norm(z_null)
            if zn > 0:
                z_null /= zn
            cols.append(up[:, parent] + detail * z_null * np.linalg.norm(up[:, parent]))
    d_high = normalize_atoms(np.column_stack(cols))
    return CrossScaleModel(d_low, d_high, scale, k_low, k_high)


def planted_cross_scale_signals(model: CrossScaleModel, count: int, seed: int = 0,
                                decay: float = 2.0):
    """Signals obeying the nesting model: fine support inside mapped parents.

    Children of one parent share a sign so the parent's coarse coefficient
    never cancels. Returns ``(signals, fine_coefficients, parent_supports)``.
    """
    rng = np.random.default_rng(seed)
    q, t_low, t_high = model.q, model.t_low, model.t_high
    x = np.zeros((t_high, count))
    parents_out = []
    for p in range(count):
        parents = np.sort(rng.choice(t_low, size=model.k_low, replace=False))
        child_pool = np.concatenate([par * q + np.arange(q) for par in parents])
        n_children = min(model.k_high, child_pool.size)
        chosen = set(rng.choice(child_pool, size=n_children, replace=False).tolist())
        chosen.update(par * q + int(rng.integers(q)) for par in parents)
        chosen = np.sort(np.fromiter(chosen, dtype=np.int64))[: model.k_high]
        mags = rng.uniform(1.0, 1.5, size=chosen.size) * (decay ** -np.arange(chosen.size))
        signs = {par: rng.choice([-1.0, 1.0]) for par in parents}
        x[chosen, p] = mags * np.array([signs[c // q] for c in chosen])
        parents_out.append(tuple(int(par) + 1 for par in np.unique(chosen // q)))
    return model.d_high.atoms @ x, x, parents_out
