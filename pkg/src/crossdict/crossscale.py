"""Two-scale predictive coding: block support map, zero-tree OMP, cost model.

A coarse dictionary (T_low atoms over the downsampled patch) and a fine
dictionary (T_high = Q * T_low atoms) are linked by a fixed block map:
coarse atom i governs fine atoms (i-1)*Q + 1 .. i*Q. Solving proceeds in
two steps: code the coarse problem with budget K_low, expand its support
through the block map, then code the fine problem restricted to the
expanded support with budget K_high. The fine support is nested inside the
expanded coarse support by construction, so the coefficient tree never has
an active child under an inactive parent.

For identity measurements the coarse step is solved directly in the
coarse domain (coding W y against D_low); with the block-average /
nearest-neighbour scale pair this selects the same atoms and coefficients
as coding y against the upsampled coarse atoms, at a fraction of the cost.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .errors import ConfigError, DimensionError, DomainError
from .pursuit import BatchSolve, PursuitConfig, PursuitResult, omp, omp_many_arrays
from .scaling import ScaleSpec, downsample_columns, upsample_columns
from .sensing import LinearOperator
from .tensor import Dictionary, SparseCode


class CrossScaleModel:
    """Paired coarse/fine dictionaries with block map and sparsity budgets."""

    def __init__(self, d_low: Dictionary, d_high: Dictionary, scale: ScaleSpec,
                 k_low: int, k_high: int):
        t_low, t_high = d_low.num_atoms, d_high.num_atoms
        if t_high % t_low:
            raise ConfigError(f"T_high={t_high} is not a multiple of T_low={t_low}")
        q = t_high // t_low
        if d_low.atom_dim != scale.coarse_size:
            raise DimensionError(
                f"coarse atom dim {d_low.atom_dim} != coarse patch size {scale.coarse_size}"
            )
        if d_high.atom_dim != scale.fine_size:
            raise DimensionError(
                f"fine atom dim {d_high.atom_dim} != fine patch size {scale.fine_size}"
            )
        if not 1 <= k_low <= min(d_low.atom_dim, t_low):
            raise ConfigError(f"k_low={k_low} outside [1, min(N_low, T_low)]")
        if k_high < k_low:
            raise ConfigError(f"k_high={k_high} must be at least k_low={k_low}")
        if k_high > q * k_low:
            raise ConfigError(f"k_high={k_high} exceeds the step-2 search space Q*k_low={q * k_low}")
        self.d_low = d_low
        self.d_high = d_high
        self.scale = scale
        self.k_low = int(k_low)
        self.k_high = int(k_high)
        self.q = int(q)

    @property
    def t_low(self) -> int:
        return self.d_low.num_atoms

    @property
    def t_high(self) -> int:
        return self.d_high.num_atoms

    @cached_property
    def upsampled_low_atoms(self) -> np.ndarray:
        """Coarse atoms lifted to the fine domain (N x T_low), cached."""
        return upsample_columns(self.d_low.atoms, self.scale)

    def __repr__(self):
        return (f"CrossScaleModel(T_low={self.t_low}, T_high={self.t_high}, Q={self.q}, "
                f"k_low={self.k_low}, k_high={self.k_high}, fine_shape={self.scale.fine_shape})")


@dataclass(frozen=True)
class ZeroTreeResult:
    """Two-step solve outcome with per-step instrumentation.

    ``timings`` and ``scan_counts`` are keyed 'step1'/'step2'; timings from
    batched runs are stage totals amortized per signal. ``step1_empty``
    marks signals whose coarse step found no support while the signal was
    above tolerance (zero codes returned).
    """

    code_low: SparseCode
    code_high: SparseCode
    residual_norm: float
    timings: dict = field(default_factory=dict)
    scan_counts: dict = field(default_factory=dict)
    step1_empty: bool = False
    rank_deficient: bool = False


def cross_scale_map(omega_low, q: int, t_high: int) -> frozenset:
    """Expand coarse support indices through the block map.

    Coarse index i (1-based) contributes the fine block
    {(i-1)*q + 1, ..., i*q}; the result has exactly q * |omega_low| members.
    """
    if q < 1:
        raise DomainError(f"q must be >= 1, got {q}")
    if t_high < 1 or t_high % q:
        raise DomainError(f"t_high={t_high} is not a positive multiple of q={q}")
    t_low = t_high // q
    out = set()
    for i in omega_low:
        i = int(i)
        if not 1 <= i <= t_low:
            raise DomainError(f"coarse index {i} outside [1, {t_low}]")
        base = (i - 1) * q
        out.update(range(base + 1, base + q + 1))
    return frozenset(out)


def omp_cost(n: int, t: int, k: int) -> float:
    """Abstract OMP operation count N*T*K + T*K + K^4 + K^3*N (unit constants)."""
    if n < 1 or t < 1 or k < 1:
        raise DomainError("cost model arguments must be positive")
    n, t, k = float(n), float(t), float(k)
    return n * t * k + t * k + k**4 + k**3 * n


def predicted_speedup(t_high: int, t_low: int, k_low: int, q: int) -> float:
    """Scan-dominated speedup estimate T_high / (T_low + K_low * Q)."""
    if t_high < 1 or t_low < 1 or q < 1:
        raise DomainError("t_high, t_low and q must be positive")
    if k_low < 0:
        raise DomainError("k_low must be non-negative")
    return t_high / (t_low + k_low * q)


def _zero_result(model: CrossScaleModel, rnorm: float, timings, scans,
                 step1_empty: bool) -> ZeroTreeResult:
    return ZeroTreeResult(
        code_low=SparseCode(model.t_low, ()),
        code_high=SparseCode(model.t_high, ()),
        residual_norm=float(rnorm),
        timings=timings,
        scan_counts=scans,
        step1_empty=step1_empty,
    )


def _localize(result: PursuitResult, allowed0: np.ndarray, t_high: int) -> PursuitResult:
    """Remap a result over restricted columns back to global atom indices."""
    global_sel = tuple(int(allowed0[j - 1]) + 1 for j in result.selected)
    # code entries are sorted by local index; allowed0 ascending keeps order
    code = SparseCode(
        t_high,
        tuple((int(allowed0[i - 1]) + 1, c) for i, c in result.code.entries),
    )
    return PursuitResult(
        code=code,
        residual_norm=result.residual_norm,
        iterations=result.iterations,
        atom_scan_count=result.atom_scan_count,
        selected=global_sel,
        rank_deficient=result.rank_deficient,
    )


def zero_tree_omp(model: CrossScaleModel, y, phi: Optional[LinearOperator] = None) -> ZeroTreeResult:
    """Two-step constrained pursuit of ``y`` under the cross-scale model.

    Step 1 codes the coarse problem (measurement composed with upsampled
    coarse atoms, or the downsampled signal directly when ``phi`` is None)
    with budget k_low. Step 2 codes the fine problem restricted to the
    block expansion of the step-1 support, budget k_high clipped to the
    restricted size. The fine support is always nested in the expansion.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    n = model.scale.fine_size
    if phi is None:
        m = n
    else:
        if phi.input_dim != n:
            raise DimensionError(f"operator input dim {phi.input_dim} != fine size {n}")
        m = phi.output_dim
    if y.size != m:
        raise DimensionError(f"measurement length {y.size} != operator output {m}")
    ynorm = float(np.linalg.norm(y))

    t0 = time.perf_counter()
    if phi is None:
        y1 = downsample_columns(y[:, None], model.scale)[:, 0]
        step1 = omp(model.d_low, y1, PursuitConfig(model.k_low))
    else:
        eff1 = phi.apply_matrix(model.upsampled_low_atoms)
        budget1 = min(model.k_low, m, model.t_low)
        step1 = omp(eff1, y, PursuitConfig(budget1))
    t1 = time.perf_counter()

    omega = step1.code.support
    if not omega:
        timings = {"step1": t1 - t0, "step2": 0.0}
        scans = {"step1": step1.atom_scan_count, "step2": 0}
        return _zero_result(model, ynorm, timings, scans, step1_empty=bool(ynorm > 0))

    # block expansion of the coarse support (support tuples are sorted)
    sup0 = np.array(omega, dtype=np.int64) - 1
    allowed0 = (sup0[:, None] * model.q + np.arange(model.q)[None, :]).ravel()
    budget = min(model.k_high, allowed0.size, m)

    t2 = time.perf_counter()
    if phi is None:
        step2 = omp(
            model.d_high, y,
            PursuitConfig(budget, allowed_support=frozenset((allowed0 + 1).tolist())),
        )
    else:
        # row view of the transposed atoms keeps the column gather contiguous
        eff2 = phi.apply_matrix(model.d_high.atoms_t[allowed0].T)
        local = omp(eff2, y, PursuitConfig(budget))
        step2 = _localize(local, allowed0, model.t_high)
    t3 = time.perf_counter()

    assert np.isin(np.array(step2.code.support, dtype=np.int64) - 1, allowed0).all()
    return ZeroTreeResult(
        code_low=step1.code,
        code_high=step2.code,
        residual_norm=step2.residual_norm,
        timings={"step1": t1 - t0, "step2": t3 - t2},
        scan_counts={"step1": step1.atom_scan_count, "step2": step2.atom_scan_count},
        rank_deficient=step1.rank_deficient or step2.rank_deficient,
    )


def zero_tree_many_arrays(model: CrossScaleModel, ys):
    """Vectorized zero-tree pursuit for identity measurements, raw arrays.

    ``ys`` is N x P, one fine-domain signal per column. Signals are grouped
    by coarse support size so each group runs through the batched
    block-restricted solver; results match mapping :func:`zero_tree_omp`
    over columns. Returns ``(low, high, timings)`` where low/high are
    :class:`BatchSolve` records and timings holds the stage totals.
    """
    ys = np.asarray(ys, dtype=np.float64)
    n = model.scale.fine_size
    if ys.ndim != 2 or ys.shape[0] != n:
        raise DimensionError(f"ys must be {n} x P, got {ys.shape}")
    p_all = ys.shape[1]

    t0 = time.perf_counter()
    yl = downsample_columns(ys, model.scale)
    low = omp_many_arrays(model.d_low, yl, PursuitConfig(model.k_low))
    t1 = time.perf_counter()

    kh = model.k_high
    counts = np.zeros(p_all, np.int64)
    sel = np.full((p_all, kh), -1, np.int64)
    alpha = np.zeros((p_all, kh))
    rnorm = np.zeros(p_all)
    scans = np.zeros(p_all, np.int64)
    deficient: set = set()

    for nb in np.unique(low.counts):
        members = np.flatnonzero(low.counts == nb)
        if nb == 0:
            rnorm[members] = np.linalg.norm(ys[:, members], axis=0)
            continue
        blocks = np.sort(low.sel[members, :nb], axis=1)
        sub = omp_many_arrays(
            model.d_high, ys[:, members], PursuitConfig(kh),
            allowed_blocks=blocks, block_q=model.q,
        )
        kw = sub.sel.shape[1]
        counts[members] = sub.counts
        sel[members, :kw] = sub.sel
        alpha[members, :kw] = sub.alpha
        rnorm[members] = sub.rnorm
        scans[members] = sub.scans
        deficient.update(int(members[i]) for i in sub.rank_deficient)
    t2 = time.perf_counter()

    high = BatchSolve(model.t_high, counts, sel, alpha, rnorm, scans, frozenset(deficient))
    return low, high, {"step1": t1 - t0, "step2": t2 - t1}


def zero_tree_omp_many(model: CrossScaleModel, ys) -> list:
    """Vectorized zero-tree pursuit returning one ZeroTreeResult per column.

    Convenience wrapper over :func:`zero_tree_many_arrays`; per-result
    timings are the stage totals split evenly across signals.
    """
    p_all = np.asarray(ys).shape[1]
    if p_all == 0:
        return []
    low, high, timings = zero_tree_many_arrays(model, ys)
    share = {k: v / p_all for k, v in timings.items()}
    results = []
    for p in range(p_all):
        r1 = low.result(p)
        r2 = high.result(p)
        results.append(
            ZeroTreeResult(
                code_low=r1.code,
                code_high=r2.code,
                residual_norm=float(high.rnorm[p]),
                timings=share,
                scan_counts={"step1": r1.atom_scan_count, "step2": r2.atom_scan_count},
                step1_empty=r1.iterations == 0 and float(high.rnorm[p]) > 0.0,
                rank_deficient=r1.rank_deficient or r2.rank_deficient,
            )
        )
    return results
