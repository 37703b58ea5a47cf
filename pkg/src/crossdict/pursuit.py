"""Greedy sparse approximation: orthogonal matching pursuit and test oracles.

Per iteration, OMP picks the candidate atom with the largest absolute
inner product against the current residual (ties go to the lowest index),
re-solves the coefficients by exact least squares over the accumulated
support, and updates the residual. The least-squares step is incremental:
a QR factorization grown one column at a time (modified Gram-Schmidt with
one reorthogonalization pass), which keeps the residual orthogonal to the
selected columns at machine precision. Rank-deficient selections flip the
run into a dense minimum-norm mode and flag the result instead of aborting.

Dense dictionaries are solved by a compiled kernel whose scan cost is
proportional to the number of candidate atoms; the scalar and batched
entry points drive the same kernel, so mapping :func:`omp` over signals
and calling :func:`omp_many` give bit-identical answers. Operator-composed
column maps without an explicit matrix take a pure-NumPy path instead.

``atom_scan_count`` counts candidates: each iteration contributes the
number of allowed, not-yet-selected atoms, so a full K-iteration run over
T atoms counts T*K - K*(K-1)/2 scans.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple, Optional

import numpy as np

from ._kernels import omp_batch_kernel
from .errors import CombinatorialBudgetError, ConfigError, DimensionError, DomainError
from .tensor import Dictionary, SparseCode

#: default stopping tolerance is this fraction of ||y||
REL_RESIDUAL_TOL = 1e-6

#: projection-defect threshold (relative to atom norm) that flags rank deficiency
_RANK_TOL = 1e-10

#: LazyColumns materializes everything up front below this element count
MATERIALIZE_BUDGET = 4_194_304

_BRUTE_FORCE_BUDGET = 1_000_000


@dataclass(frozen=True)
class PursuitConfig:
    """Sparse-approximation problem parameters.

    ``residual_tolerance`` of None means the default relative tolerance
    ``REL_RESIDUAL_TOL * ||y||``, resolved per signal. ``allowed_support``
    restricts selection to the given 1-based atom indices.
    """

    sparsity_budget: int
    residual_tolerance: Optional[float] = None
    allowed_support: Optional[frozenset] = None

    def __post_init__(self):
        if self.sparsity_budget < 1:
            raise ConfigError(f"sparsity_budget must be >= 1, got {self.sparsity_budget}")
        if self.residual_tolerance is not None and self.residual_tolerance < 0:
            raise ConfigError("residual_tolerance must be >= 0")
        if self.allowed_support is not None:
            allowed = frozenset(int(i) for i in self.allowed_support)
            if any(i < 1 for i in allowed):
                raise ConfigError("allowed_support indices are 1-based (must be >= 1)")
            object.__setattr__(self, "allowed_support", allowed)


@dataclass(frozen=True)
class PursuitResult:
    """Outcome of one pursuit run.

    ``selected`` preserves the selection order (1-based); ``code`` holds the
    same support sorted by index. ``rank_deficient`` marks runs that fell
    back to a minimum-norm least-squares solve.
    """

    code: SparseCode
    residual_norm: float
    iterations: int
    atom_scan_count: int
    selected: tuple = ()
    rank_deficient: bool = False


class LeastSquaresSolution(NamedTuple):
    coefficients: np.ndarray
    residual_norm: float
    rank_deficient: bool


class DenseColumns:
    """Column access over an explicit N x T matrix."""

    def __init__(self, matrix):
        mat = np.ascontiguousarray(matrix, dtype=np.float64)
        if mat.ndim != 2:
            raise DimensionError(f"column matrix must be 2-D, got ndim={mat.ndim}")
        self.mat = mat
        self._mat_t = None

    @property
    def shape(self):
        return self.mat.shape

    @property
    def mat_t(self) -> np.ndarray:
        if self._mat_t is None:
            self._mat_t = np.ascontiguousarray(self.mat.T)
        return self._mat_t

    def column(self, j0: int) -> np.ndarray:
        return self.mat[:, j0]

    def correlations(self, residual: np.ndarray, cand0: np.ndarray) -> np.ndarray:
        return self.mat_t[cand0] @ residual

    def materialize(self, idx0) -> np.ndarray:
        return self.mat[:, list(idx0)]


class LazyColumns:
    """Columns computed on demand (memoized) from a column function.

    Used for operator-composed dictionaries whose product matrix is not
    worth materializing; below ``MATERIALIZE_BUDGET`` elements the full
    matrix is built eagerly instead.
    """

    def __init__(self, n_rows: int, n_cols: int, column_fn, materialize_budget: int = MATERIALIZE_BUDGET):
        self._n = int(n_rows)
        self._t = int(n_cols)
        self._fn = column_fn
        self._memo = {}
        self._dense = None
        if self._n * self._t <= materialize_budget:
            self._dense = np.column_stack(
                [np.asarray(column_fn(j), dtype=np.float64) for j in range(self._t)]
            )

    @property
    def shape(self):
        return (self._n, self._t)

    def column(self, j0: int) -> np.ndarray:
        if self._dense is not None:
            return self._dense[:, j0]
        col = self._memo.get(j0)
        if col is None:
            col = np.asarray(self._fn(j0), dtype=np.float64).ravel()
            self._memo[j0] = col
        return col

    def correlations(self, residual: np.ndarray, cand0: np.ndarray) -> np.ndarray:
        if self._dense is not None:
            return self._dense.T[cand0] @ residual
        return np.array([self.column(j) @ residual for j in cand0])

    def materialize(self, idx0) -> np.ndarray:
        return np.column_stack([self.column(j) for j in idx0])


def as_columns(obj):
    """Coerce a Dictionary, ndarray, or columns object to the column protocol."""
    if isinstance(obj, (DenseColumns, LazyColumns)):
        return obj
    if isinstance(obj, Dictionary):
        cols = DenseColumns(obj.atoms)
        cols._mat_t = obj.atoms_t
        return cols
    return DenseColumns(obj)


def _resolve_eps(config: PursuitConfig, ynorm: float) -> float:
    if config.residual_tolerance is not None:
        return config.residual_tolerance
    return REL_RESIDUAL_TOL * ynorm


def _empty_result(t: int, rnorm: float) -> PursuitResult:
    return PursuitResult(
        code=SparseCode(t, ()),
        residual_norm=float(rnorm),
        iterations=0,
        atom_scan_count=0,
    )


@dataclass
class BatchSolve:
    """Raw per-signal arrays from the batched solver.

    ``sel`` holds 0-based selections in pick order, padded with -1 past
    ``counts``; ``alpha`` is aligned with ``sel``. ``rank_deficient`` lists
    the signal ids that fell back to the dense minimum-norm mode.
    """

    dim: int
    counts: np.ndarray
    sel: np.ndarray
    alpha: np.ndarray
    rnorm: np.ndarray
    scans: np.ndarray
    rank_deficient: frozenset = frozenset()

    def result(self, p: int) -> PursuitResult:
        c = int(self.counts[p])
        chosen = self.sel[p, :c] + 1
        code = SparseCode.from_arrays(self.dim, chosen.tolist(), self.alpha[p, :c])
        return PursuitResult(
            code=code,
            residual_norm=float(self.rnorm[p]),
            iterations=c,
            atom_scan_count=int(self.scans[p]),
            selected=tuple(int(j) for j in chosen),
            rank_deficient=p in self.rank_deficient,
        )

    def coefficient_matrix(self) -> np.ndarray:
        """Dense T x P coefficient matrix (columns are the sparse codes)."""
        p_all, k_max = self.sel.shape
        x = np.zeros((self.dim, p_all))
        if k_max:
            cols = np.broadcast_to(np.arange(p_all)[:, None], self.sel.shape)
            safe = np.where(self.sel >= 0, self.sel, 0)
            np.add.at(x, (safe.ravel(), cols.ravel()), self.alpha.ravel())
        return x


def _run_kernel(mat_t, ys_rows, k_max, eps, allowed=None):
    """Invoke the compiled batch kernel and collect its output arrays."""
    p_all = ys_rows.shape[0]
    restricted = allowed is not None
    if not restricted:
        allowed = np.zeros((p_all, 1), dtype=np.int64)
    out_sel = np.full((p_all, k_max), -1, dtype=np.int64)
    out_coef = np.zeros((p_all, k_max))
    out_count = np.zeros(p_all, dtype=np.int64)
    out_rnorm = np.zeros(p_all)
    out_scans = np.zeros(p_all, dtype=np.int64)
    out_flag = np.zeros(p_all, dtype=np.bool_)
    omp_batch_kernel(
        mat_t, ys_rows, k_max, eps, allowed, restricted,
        out_sel, out_coef, out_count, out_rnorm, out_scans, out_flag,
    )
    return out_sel, out_coef, out_count, out_rnorm, out_scans, out_flag


def omp(columns, y, config: PursuitConfig) -> PursuitResult:
    """Orthogonal matching pursuit over the given columns.

    Stops after ``sparsity_budget`` selections, when the residual norm
    drops to the tolerance, or when every remaining candidate is exactly
    orthogonal to the residual.
    """
    cols = as_columns(columns)
    n, t = cols.shape
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size != n:
        raise DimensionError(f"signal length {y.size} != column length {n}")
    k_max = config.sparsity_budget
    if k_max > min(n, t):
        raise ConfigError(f"sparsity_budget {k_max} exceeds min(N, T) = {min(n, t)}")

    allowed0 = None
    if config.allowed_support is not None:
        allowed0 = np.array(sorted(config.allowed_support), dtype=np.int64) - 1
        if allowed0.size and (allowed0[0] < 0 or allowed0[-1] >= t):
            raise DomainError("allowed_support index outside [1, T]")
        if allowed0.size == 0:
            return _empty_result(t, np.linalg.norm(y))
        if k_max > allowed0.size:
            raise ConfigError(
                f"sparsity_budget {k_max} exceeds |allowed_support| = {allowed0.size}"
            )

    if not isinstance(cols, DenseColumns):
        return _omp_generic(cols, y, config, allowed0)

    ynorm = float(np.linalg.norm(y))
    eps = np.array([_resolve_eps(config, ynorm)])
    sel, coef, count, rnorm, scans, flag = _run_kernel(
        cols.mat_t, y.reshape(1, -1), k_max, eps,
        allowed0.reshape(1, -1) if allowed0 is not None else None,
    )
    c = int(count[0])
    chosen = sel[0, :c] + 1
    code = SparseCode.from_arrays(t, chosen.tolist(), coef[0, :c])
    return PursuitResult(
        code=code,
        residual_norm=float(rnorm[0]),
        iterations=c,
        atom_scan_count=int(scans[0]),
        selected=tuple(int(j) for j in chosen),
        rank_deficient=bool(flag[0]),
    )


def _omp_generic(cols, y, config: PursuitConfig, allowed0) -> PursuitResult:
    """Pure-NumPy pursuit over a generic column map (no explicit matrix)."""
    n, t = cols.shape
    k_max = config.sparsity_budget
    cand0 = allowed0 if allowed0 is not None else np.arange(t, dtype=np.int64)
    ynorm = float(np.linalg.norm(y))
    eps = _resolve_eps(config, ynorm)
    if ynorm <= eps:
        return _empty_result(t, ynorm)

    qmat = np.empty((n, k_max))
    rmat = np.zeros((k_max, k_max))
    qty = np.empty(k_max)
    selected: list = []
    scan_count = 0
    r = y.copy()
    rnorm = ynorm
    use_dense = False
    coeffs = np.zeros(0)

    for k in range(k_max):
        scan_count += cand0.size
        corr = cols.correlations(r, cand0)
        pos = int(np.argmax(np.abs(corr)))
        if abs(corr[pos]) == 0.0:
            break
        j0 = int(cand0[pos])
        selected.append(j0)
        cand0 = np.delete(cand0, pos)

        if not use_dense:
            a = np.asarray(cols.column(j0), dtype=np.float64)
            anorm = np.linalg.norm(a)
            if k:
                w = qmat[:, :k].T @ a
                u = a - qmat[:, :k] @ w
                w2 = qmat[:, :k].T @ u
                u -= qmat[:, :k] @ w2
                w += w2
            else:
                u = a.copy()
                w = None
            d = np.linalg.norm(u)
            if d <= _RANK_TOL * max(anorm, 1e-300):
                use_dense = True
            else:
                if w is not None:
                    rmat[:k, k] = w
                rmat[k, k] = d
                q = u / d
                qmat[:, k] = q
                z = float(q @ r)
                qty[k] = z
                r = r - q * z
                rnorm = float(np.linalg.norm(r))

        if use_dense:
            amat = cols.materialize(selected)
            coeffs, _, _, _ = np.linalg.lstsq(amat, y, rcond=None)
            r = y - amat @ coeffs
            rnorm = float(np.linalg.norm(r))

        if rnorm <= eps:
            break

    kk = len(selected)
    if kk and not use_dense:
        coeffs = np.empty(kk)
        for i in range(kk - 1, -1, -1):
            s = qty[i]
            if i + 1 < kk:
                s -= rmat[i, i + 1 : kk] @ coeffs[i + 1 : kk]
            coeffs[i] = s / rmat[i, i]

    code = SparseCode.from_arrays(t, [j + 1 for j in selected], coeffs[:kk])
    return PursuitResult(
        code=code,
        residual_norm=rnorm,
        iterations=kk,
        atom_scan_count=scan_count,
        selected=tuple(j + 1 for j in selected),
        rank_deficient=use_dense,
    )


def omp_many_arrays(
    columns,
    ys,
    config: PursuitConfig,
    *,
    allowed_blocks: Optional[np.ndarray] = None,
    block_q: Optional[int] = None,
) -> BatchSolve:
    """Batched OMP over the columns of ``ys`` returning raw arrays.

    Identical to mapping :func:`omp` per column (same kernel). With
    ``allowed_blocks`` (P x nb sorted 0-based block ids) and ``block_q``,
    signal p is restricted to the atoms of its listed blocks and the budget
    is clipped to the restricted size.
    """
    cols = as_columns(columns)
    if not isinstance(cols, DenseColumns):
        raise ConfigError("batched pursuit needs an explicit column matrix")
    n, t = cols.shape
    ys = np.asarray(ys, dtype=np.float64)
    if ys.ndim != 2 or ys.shape[0] != n:
        raise DimensionError(f"ys must be {n} x P, got {ys.shape}")
    p_all = ys.shape[1]

    allowed = None
    if allowed_blocks is not None:
        if block_q is None or block_q < 1 or t % block_q:
            raise ConfigError("block_q must be a positive divisor of T")
        blocks = np.asarray(allowed_blocks, dtype=np.int64)
        if blocks.ndim != 2 or blocks.shape[0] != p_all:
            raise DimensionError("allowed_blocks must be (P, nb)")
        if blocks.size and (blocks.min() < 0 or blocks.max() >= t // block_q):
            raise DomainError("block id outside [0, T/Q)")
        allowed = (blocks[:, :, None] * block_q
                   + np.arange(block_q, dtype=np.int64)[None, None, :]).reshape(p_all, -1)
        k_max = min(config.sparsity_budget, allowed.shape[1], n)
    else:
        k_max = config.sparsity_budget
        if k_max > min(n, t):
            raise ConfigError(f"sparsity_budget {k_max} exceeds min(N, T) = {min(n, t)}")

    if p_all == 0:
        z = np.zeros(0, np.int64)
        return BatchSolve(t, z, z.reshape(0, k_max), np.zeros((0, k_max)), np.zeros(0), z)

    ys_rows = np.ascontiguousarray(ys.T)
    if config.residual_tolerance is not None:
        eps = np.full(p_all, float(config.residual_tolerance))
    else:
        eps = REL_RESIDUAL_TOL * np.sqrt(np.einsum("pn,pn->p", ys_rows, ys_rows))

    sel, coef, count, rnorm, scans, flag = _run_kernel(cols.mat_t, ys_rows, k_max, eps, allowed)
    deficient = frozenset(int(i) for i in np.flatnonzero(flag))
    return BatchSolve(t, count, sel, coef, rnorm, scans, deficient)


def omp_many(
    columns,
    ys,
    config: PursuitConfig,
    *,
    allowed_blocks: Optional[np.ndarray] = None,
    block_q: Optional[int] = None,
) -> list:
    """Vectorized equivalent of mapping :func:`omp` over the columns of ``ys``.

    Convenience wrapper over :func:`omp_many_arrays` that materializes one
    :class:`PursuitResult` per signal.
    """
    cols = as_columns(columns)
    if not isinstance(cols, DenseColumns):
        return [omp(cols, ys[:, p], config) for p in range(ys.shape[1])]
    solve = omp_many_arrays(cols, ys, config, allowed_blocks=allowed_blocks, block_q=block_q)
    return [solve.result(p) for p in range(ys.shape[1])]


def least_squares_on_support(columns, y, support) -> LeastSquaresSolution:
    """Exact least squares of ``y`` against the columns in ``support``.

    Coefficients are returned in ascending support order. Singular systems
    are solved minimum-norm and flagged.
    """
    cols = as_columns(columns)
    n, t = cols.shape
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size != n:
        raise DimensionError(f"signal length {y.size} != column length {n}")
    sup = sorted(int(i) for i in support)
    if not sup:
        raise DomainError("support must be non-empty")
    if len(set(sup)) != len(sup):
        raise DomainError("support contains duplicate indices")
    if sup[0] < 1 or sup[-1] > t:
        raise DomainError(f"support index outside [1, {t}]")
    amat = cols.materialize([i - 1 for i in sup])
    coeffs, _, rank, _ = np.linalg.lstsq(amat, y, rcond=None)
    rnorm = float(np.linalg.norm(y - amat @ coeffs))
    return LeastSquaresSolution(coeffs, rnorm, rank < len(sup))


def brute_force_best_k(columns, y, k: int) -> PursuitResult:
    """Global optimum of the K-sparse approximation by exhaustive enumeration.

    Enumerates every support of size 1..k (size-ascending, lexicographic) and
    keeps the first strictly best least-squares fit, so ties resolve
    deterministically. Testing oracle; refuses when the subset count exceeds
    the enumeration budget.
    """
    cols = as_columns(columns)
    n, t = cols.shape
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size != n:
        raise DimensionError(f"signal length {y.size} != column length {n}")
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    k = min(k, t)
    total = sum(math.comb(t, j) for j in range(1, k + 1))
    if total > _BRUTE_FORCE_BUDGET:
        raise CombinatorialBudgetError(
            f"{total} candidate supports exceed the budget of {_BRUTE_FORCE_BUDGET}"
        )

    ynorm = float(np.linalg.norm(y))
    best_rnorm = ynorm
    best_sup: tuple = ()
    best_coeffs = np.zeros(0)
    best_flag = False
    for size in range(1, k + 1):
        for combo in combinations(range(t), size):
            amat = cols.materialize(combo)
            coeffs, _, rank, _ = np.linalg.lstsq(amat, y, rcond=None)
            rnorm = float(np.linalg.norm(y - amat @ coeffs))
            if rnorm < best_rnorm:
                best_rnorm = rnorm
                best_sup = combo
                best_coeffs = coeffs
                best_flag = rank < size
        if best_rnorm <= 1e-14 * ynorm:
            break

    code = SparseCode.from_arrays(t, [j + 1 for j in best_sup], best_coeffs)
    return PursuitResult(
        code=code,
        residual_norm=best_rnorm,
        iterations=len(best_sup),
        atom_scan_count=0,
        selected=tuple(j + 1 for j in best_sup),
        rank_deficient=best_flag,
    )
