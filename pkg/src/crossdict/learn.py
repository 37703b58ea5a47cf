"""Dictionary learning: K-SVD, support-constrained K-SVD, two-scale training.

Training alternates a sparse-coding stage (pursuit with a fixed budget over
every training column) and a dictionary-update stage (sequential rank-one
refits: each atom and its coefficient row are replaced by the leading
singular pair of the residual restricted to the samples that use the atom).
The update stage never increases the Frobenius objective; both the
pre-update and post-update objectives are recorded per iteration so the
monotonicity contract is checkable from the report.

Atoms used by fewer samples than ``dead_atom_threshold`` are replaced by
the worst-approximated training column. With the default threshold of 1
only completely unused atoms are replaced, which keeps the update stage
monotone; larger thresholds trade that guarantee for better atom usage.
Between iterations a cleanup pass additionally re-seeds atoms that have
collapsed onto one another (pairwise coherence above 0.99); it runs after
the post-update objective is taken, so the per-stage monotonicity contract
is unaffected while duplicate-atom local minima still get broken up.

Initialization draws distinct training columns, greedily skipping
candidates too coherent with the atoms already chosen; this spreads the
starting atoms across the data instead of seeding several atoms inside
the same cluster.

Two-scale training first runs plain K-SVD on the block-averaged training
set, then re-trains at full resolution with each sample's support confined
to the block expansion of its coarse support.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
import numpy as np

from .crossscale import CrossScaleModel, cross_scale_map
from .errors import ConfigError, DegenerateDataError, DimensionError
from .pursuit import PursuitConfig, omp, omp_many
from .scaling import ScaleSpec, downsample_columns
from .tensor import Dictionary, SparseCode


@dataclass(frozen=True)
class TrainConfig:
    """K-SVD hyperparameters. ``init`` is 'data-columns' or 'random-unit'."""

    num_atoms: int
    sparsity: int
    iterations: int = 20
    seed: int = 0
    dead_atom_threshold: int = 1
    init: str = "data-columns"

    def __post_init__(self):
        if self.num_atoms < 1 or self.sparsity < 1 or self.iterations < 1:
            raise ConfigError("num_atoms, sparsity and iterations must be >= 1")
        if self.dead_atom_threshold < 0:
            raise ConfigError("dead_atom_threshold must be >= 0")
        if self.init not in ("data-columns", "random-unit"):
            raise ConfigError(f"unknown init {self.init!r}")


@dataclass
class TrainReport:
    """Objective trace and bookkeeping for one training run.

    ``objective_per_iteration`` holds ||Y - DX||_F after each dictionary
    update; ``objective_pre_update`` holds the value right before it (after
    coding), so update-stage monotonicity is after <= before per entry.
    """

    objective_per_iteration: list = field(default_factory=list)
    objective_pre_update: list = field(default_factory=list)
    replaced_atoms: int = 0
    wall_clock: float = 0.0


#: every completed training run appends its report here (process-wide),
#: so a test session can audit update-stage monotonicity across all runs
report_log: list = []


def _validate_samples(samples) -> np.ndarray:
    y = np.asarray(samples, dtype=np.float64)
    if y.ndim != 2:
        raise DimensionError(f"samples must be an N x P matrix, got ndim={y.ndim}")
    if not np.any(y):
        raise DegenerateDataError("all training samples are zero")
    return y


#: init skips candidate columns more coherent than this with already-chosen atoms
_INIT_COHERENCE_CAP = 0.7

#: cleanup re-seeds an atom whose coherence with an earlier atom exceeds this
_DUPLICATE_COHERENCE = 0.99


def _init_atoms(y: np.ndarray, config: TrainConfig, rng: np.random.Generator) -> np.ndarray:
    n, m = y.shape
    t = config.num_atoms
    if config.init == "random-unit":
        g = rng.standard_normal((n, t))
        return g / np.linalg.norm(g, axis=0)
    norms = np.linalg.norm(y, axis=0)
    order = rng.permutation(np.flatnonzero(norms > 0))
    atoms = np.empty((t, n))
    filled = 0
    used = np.zeros(order.size, dtype=bool)
    for pos, c in enumerate(order):
        v = y[:, c] / norms[c]
        if filled and np.abs(atoms[:filled] @ v).max() > _INIT_COHERENCE_CAP:
            continue
        atoms[filled] = v
        filled += 1
        used[pos] = True
        if filled == t:
            break
    for pos, c in enumerate(order):
        if filled == t:
            break
        if not used[pos]:
            atoms[filled] = y[:, c] / norms[c]
            filled += 1
    while filled < t:
        v = rng.standard_normal(n)
        atoms[filled] = v / np.linalg.norm(v)
        filled += 1
    return np.ascontiguousarray(atoms.T)


def _codes_to_matrix(codes, t: int, m: int) -> np.ndarray:
    x = np.zeros((t, m))
    for p, r in enumerate(codes):
        for i, c in r.code.entries:
            x[i - 1, p] = c
    return x


def _leading_pair(ej: np.ndarray):
    """Leading singular triple (u, sigma, v) of ``ej``.

    LAPACK's divide-and-conquer SVD occasionally refuses to converge on
    perfectly finite matrices; the Gram eigenproblem is sturdier and only
    needed for the top pair, so it serves as the fallback.
    """
    try:
        u, s, vt = np.linalg.svd(ej, full_matrices=False)
        return u[:, 0], s[0], vt[0]
    except np.linalg.LinAlgError:
        n, m = ej.shape
        if m <= n:
            w, v = np.linalg.eigh(ej.T @ ej)
            sigma = float(np.sqrt(max(w[-1], 0.0)))
            vvec = v[:, -1]
            uvec = ej @ vvec
        else:
            w, v = np.linalg.eigh(ej @ ej.T)
            sigma = float(np.sqrt(max(w[-1], 0.0)))
            uvec = v[:, -1]
            vvec = ej.T @ uvec
        un = np.linalg.norm(uvec)
        uvec = uvec / un if un > 0 else uvec
        vn = np.linalg.norm(vvec)
        vvec = vvec / vn if vn > 0 else vvec
        return uvec, sigma, vvec


def _update_stage(y, d, x, threshold: int) -> tuple:
    """Sequential rank-one atom refits; returns (replaced_count, residual)."""
    n, m = y.shape
    t = d.shape[1]
    e = y - d @ x
    replaced = 0
    taken: set = set()
    for j in range(t):
        users = np.flatnonzero(x[j])
        if users.size < threshold:
            if users.size:
                e[:, users] += np.outer(d[:, j], x[j, users])
                x[j, users] = 0.0
            rn = np.linalg.norm(e, axis=0)
            if taken:
                rn[list(taken)] = -1.0
            worst = int(np.argmax(rn))
            taken.add(worst)
            col = y[:, worst]
            cn = np.linalg.norm(col)
            if cn > 0:
                d[:, j] = col / cn
            replaced += 1
            continue
        ej = e[:, users] + np.outer(d[:, j], x[j, users])
        u, s, v = _leading_pair(ej)
        d[:, j] = u
        row = s * v
        x[j, users] = row
        e[:, users] = ej - np.outer(u, row)
    return replaced, e


def _cleanup_duplicates(y, d, x, e) -> int:
    """Re-seed atoms that collapsed onto an earlier atom; returns count.

    Runs between iterations, after the post-update objective is recorded;
    the replaced atoms are re-coded from scratch on the next pass.
    """
    t = d.shape[1]
    gram = np.abs(d.T @ d)
    np.fill_diagonal(gram, 0.0)
    resid_norms = np.linalg.norm(e, axis=0)
    taken: set = set()
    replaced = 0
    for j in range(t):
        if gram[:j, j].max(initial=0.0) <= _DUPLICATE_COHERENCE:
            continue
        rn = resid_norms.copy()
        if taken:
            rn[list(taken)] = -1.0
        worst = int(np.argmax(rn))
        taken.add(worst)
        cn = np.linalg.norm(y[:, worst])
        if cn > 0:
            d[:, j] = y[:, worst] / cn
        gram[j, :] = 0.0
        gram[:, j] = 0.0
        replaced += 1
    return replaced


def _codes_from_matrix(x: np.ndarray) -> list:
    t, m = x.shape
    out = []
    for p in range(m):
        nz = np.flatnonzero(x[:, p])
        out.append(SparseCode.from_arrays(t, (nz + 1).tolist(), x[nz, p]))
    return out


def _code_stage(d, y, k, allowed_sets, block_hint):
    """Sparse-code every column of y against d, honoring optional restrictions."""
    t = d.shape[1]
    m = y.shape[1]
    if allowed_sets is None:
        return omp_many(d, y, PursuitConfig(k))
    if block_hint is not None:
        blocks_list, q = block_hint
        groups: dict = {}
        for p, blocks in enumerate(blocks_list):
            groups.setdefault(len(blocks), []).append(p)
        results = [None] * m
        for nb, members in groups.items():
            idx = np.array(members, dtype=np.int64)
            blocks = np.array([sorted(blocks_list[p]) for p in members], dtype=np.int64)
            sub = omp_many(d, y[:, idx], PursuitConfig(k), allowed_blocks=blocks, block_q=q)
            for jj, p in enumerate(members):
                results[p] = sub[jj]
        return results
    return [
        omp(d, y[:, p], PursuitConfig(min(k, len(allowed_sets[p])), allowed_support=frozenset(allowed_sets[p])))
        for p in range(m)
    ]


def _ksvd_core(y, config: TrainConfig, allowed_sets, block_hint):
    start = time.perf_counter()
    n, m = y.shape
    t, k = config.num_atoms, config.sparsity
    if t > m:
        raise ConfigError(f"num_atoms {t} exceeds sample count {m}")
    if k > min(n, t):
        raise ConfigError(f"sparsity {k} exceeds min(N, T) = {min(n, t)}")

    rng = np.random.default_rng(config.seed)
    d = _init_atoms(y, config, rng)
    report = TrainReport()

    for it in range(config.iterations):
        codes = _code_stage(d, y, k, allowed_sets, block_hint)
        x = _codes_to_matrix(codes, t, m)
        report.objective_pre_update.append(float(np.linalg.norm(y - d @ x)))
        replaced, e = _update_stage(y, d, x, config.dead_atom_threshold)
        report.replaced_atoms += replaced
        report.objective_per_iteration.append(float(np.linalg.norm(e)))
        if it + 1 < config.iterations:
            report.replaced_atoms += _cleanup_duplicates(y, d, x, e)

    report.wall_clock = time.perf_counter() - start
    report_log.append(report)
    return Dictionary(d), _codes_from_matrix(x), report


def ksvd(samples, config: TrainConfig):
    """Learn a dictionary by alternating pursuit coding and rank-one updates.

    Returns ``(dictionary, codes, report)`` where ``codes`` are the final
    sparse representations (coefficient rows as left by the last update
    stage, consistent with the reported objective).
    """
    y = _validate_samples(samples)
    return _ksvd_core(y, config, None, None)


def ksvd_constrained(samples, per_sample_allowed_support, config: TrainConfig, *,
                     block_hint=None):
    """K-SVD with each sample's code confined to its allowed support.

    ``per_sample_allowed_support`` gives one set of 1-based atom indices per
    training column; the coding budget is clipped to the allowed size. When
    every set is the full index range this reduces exactly to :func:`ksvd`
    (same seed gives identical output). ``block_hint`` = (block id lists,
    q) routes coding through the batched block-restricted solver.
    """
    y = _validate_samples(samples)
    m = y.shape[1]
    t = config.num_atoms
    sets = [frozenset(int(i) for i in s) for s in per_sample_allowed_support]
    if len(sets) != m:
        raise ConfigError(f"need {m} allowed sets, got {len(sets)}")
    for p, s in enumerate(sets):
        if not s:
            raise ConfigError(f"sample {p + 1} has an empty allowed support")
        if min(s) < 1 or max(s) > t:
            raise ConfigError(f"sample {p + 1} allowed support outside [1, {t}]")
    if all(len(s) == t for s in sets):
        return _ksvd_core(y, config, None, None)
    return _ksvd_core(y, config, sets, block_hint)


def train_cross_scale(samples, scale: ScaleSpec, t_low: int, t_high: int,
                      k_low: int, k_high: int, iterations: int = 20, seed: int = 0,
                      dead_atom_threshold: int = 1, init: str = "data-columns"):
    """Two-step training of a cross-scale model.

    Step 1 runs K-SVD on the block-averaged samples (coarse dictionary);
    the coarse supports come out as a by-product. Step 2 runs constrained
    K-SVD at full resolution with each sample restricted to the block
    expansion of its coarse support. Samples whose coarse code came back
    empty (e.g. flat patches after DC removal) are given the first block as
    a placeholder; their fine code stays empty whenever the sample itself
    is negligible.

    Returns ``(model, (coarse_report, fine_report))``.
    """
    y = _validate_samples(samples)
    if t_low < 1 or t_high % t_low:
        raise ConfigError(f"t_high={t_high} must be a positive multiple of t_low={t_low}")
    q = t_high // t_low
    if y.shape[0] != scale.fine_size:
        raise DimensionError(
            f"sample length {y.shape[0]} != fine patch size {scale.fine_size}"
        )

    y_low = downsample_columns(y, scale)
    cfg_low = TrainConfig(t_low, k_low, iterations, seed, dead_atom_threshold, init)
    d_low, codes_low, report_low = ksvd(y_low, cfg_low)

    blocks_list = []
    allowed_sets = []
    for code in codes_low:
        sup = code.support if code.support else (1,)
        blocks_list.append([i - 1 for i in sup])
        allowed_sets.append(cross_scale_map(sup, q, t_high))

    cfg_high = TrainConfig(t_high, k_high, iterations, seed, dead_atom_threshold, init)
    d_high, _, report_high = ksvd_constrained(
        y, allowed_sets, cfg_high, block_hint=(blocks_list, q)
    )

    model = CrossScaleModel(d_low, d_high, scale, k_low, k_high)
    return model, (report_low, report_high)
