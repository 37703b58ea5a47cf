"""Compiled pursuit kernels.

One numba kernel implements the OMP iteration for a batch of signals:
correlation scan over the allowed candidates, lowest-index tie-break,
incremental QR (modified Gram-Schmidt with one reorthogonalization pass),
residual update, and final back-substitution. Both the scalar API and the
batched API drive this same kernel, so their outputs are bit-identical,
and the scan cost is proportional to the number of candidate atoms for
every caller - which is exactly the quantity the two-scale speedup model
is about.

Dot products use four fixed accumulators: a deterministic summation order
that still lets the compiler keep the pipeline busy.

Rank-deficient selections flip the signal to a dense minimum-norm
least-squares mode (np.linalg.lstsq) and flag it, matching the pure-NumPy
reference path.
"""

import numpy as np
from numba import njit

#: projection-defect threshold (relative to atom norm) that flags rank deficiency
RANK_TOL = 1e-10


@njit(cache=True, fastmath=False)
def _dot4(a, b, n):
    s0 = 0.0
    s1 = 0.0
    s2 = 0.0
    s3 = 0.0
    m4 = (n // 4) * 4
    for i in range(0, m4, 4):
        s0 += a[i] * b[i]
        s1 += a[i + 1] * b[i + 1]
        s2 += a[i + 2] * b[i + 2]
        s3 += a[i + 3] * b[i + 3]
    s = s0 + s1 + s2 + s3
    for i in range(m4, n):
        s += a[i] * b[i]
    return s


@njit(cache=True, fastmath=False)
def _norm(a, n):
    return np.sqrt(_dot4(a, a, n))


@njit(cache=True, fastmath=False)
def omp_batch_kernel(mat_t, ys, k_max, eps, allowed, restricted,
                     out_sel, out_coef, out_count, out_rnorm, out_scans, out_flag):
    """Run OMP for every row of ``ys``.

    mat_t      : (T, N) atom rows.
    ys         : (P, N) signals.
    eps        : (P,) absolute residual tolerances.
    allowed    : (P, S) ascending candidate atom ids (0-based); scanned only
                 when ``restricted`` is True, else all T atoms are candidates.
    out_sel    : (P, k_max) selections in pick order (0-based, -1 padding).
    out_coef   : (P, k_max) coefficients aligned with out_sel.
    out_flag   : (P,) True where the dense minimum-norm fallback engaged.
    """
    p_all, n = ys.shape
    t = mat_t.shape[0]
    s_allowed = allowed.shape[1]

    for p in range(p_all):
        y = ys[p]
        c = s_allowed if restricted else t
        ynorm = _norm(y, n)
        tol = eps[p]
        out_count[p] = 0
        out_rnorm[p] = ynorm
        out_scans[p] = 0
        out_flag[p] = False
        if ynorm <= tol:
            continue

        r = y.copy()
        qmat = np.empty((k_max, n))
        rmat = np.zeros((k_max, k_max))
        qty = np.empty(k_max)
        taken = np.zeros(c, np.bool_)
        scans = 0
        kdone = 0
        rnorm = ynorm
        dense_mode = False

        for k in range(k_max):
            scans += c - k
            best = -1.0
            bestj = -1
            for jl in range(c):
                if taken[jl]:
                    continue
                g = allowed[p, jl] if restricted else jl
                v = _dot4(mat_t[g], r, n)
                if v < 0.0:
                    v = -v
                if v > best:
                    best = v
                    bestj = jl
            if bestj < 0 or best <= 0.0:
                break
            taken[bestj] = True
            g = allowed[p, bestj] if restricted else bestj
            out_sel[p, kdone] = g
            kdone += 1

            if not dense_mode:
                u = mat_t[g].copy()
                anorm = _norm(u, n)
                for j in range(kdone - 1):
                    w = _dot4(qmat[j], u, n)
                    for i in range(n):
                        u[i] -= w * qmat[j, i]
                    rmat[j, kdone - 1] = w
                for j in range(kdone - 1):
                    w2 = _dot4(qmat[j], u, n)
                    for i in range(n):
                        u[i] -= w2 * qmat[j, i]
                    rmat[j, kdone - 1] += w2
                d = _norm(u, n)
                floor = anorm if anorm > 1e-300 else 1e-300
                if d <= RANK_TOL * floor:
                    dense_mode = True
                    out_flag[p] = True
                else:
                    rmat[kdone - 1, kdone - 1] = d
                    for i in range(n):
                        qmat[kdone - 1, i] = u[i] / d
                    z = _dot4(qmat[kdone - 1], r, n)
                    qty[kdone - 1] = z
                    for i in range(n):
                        r[i] -= z * qmat[kdone - 1, i]
                    rnorm = _norm(r, n)

            if dense_mode:
                amat = np.empty((n, kdone))
                for j in range(kdone):
                    gj = out_sel[p, j]
                    for i in range(n):
                        amat[i, j] = mat_t[gj, i]
                sol = np.linalg.lstsq(amat, y, rcond=-1.0)
                coefs = sol[0]
                for i in range(n):
                    acc = 0.0
                    for j in range(kdone):
                        acc += amat[i, j] * coefs[j]
                    r[i] = y[i] - acc
                rnorm = _norm(r, n)
                for j in range(kdone):
                    out_coef[p, j] = coefs[j]

            if rnorm <= tol:
                break

        if kdone and not dense_mode:
            for i in range(kdone - 1, -1, -1):
                acc = qty[i]
                for j in range(i + 1, kdone):
                    acc -= rmat[i, j] * out_coef[p, j]
                out_coef[p, i] = acc / rmat[i, i]

        out_count[p] = kdone
        out_rnorm[p] = rnorm
        out_scans[p] = scans
