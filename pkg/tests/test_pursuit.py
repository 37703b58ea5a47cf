import numpy as np
import pytest

from crossdict.errors import (CombinatorialBudgetError, ConfigError,
                              DimensionError, DomainError)
from crossdict.pursuit import (LazyColumns, PursuitConfig, brute_force_best_k,
                               least_squares_on_support, omp, omp_many,
                               omp_many_arrays)


def unit_dict(rng, n, t):
    m = rng.standard_normal((n, t))
    return m / np.linalg.norm(m, axis=0)


def test_omp_identity_dictionary():
    res = omp(np.eye(3), np.array([3.0, 0.0, -1.0]), PursuitConfig(2))
    assert res.code.support == (1, 3)
    assert np.allclose(res.code.coefficients, [3.0, -1.0])
    assert res.residual_norm == pytest.approx(0.0, abs=1e-12)


def test_omp_exact_one_atom_signal():
    rng = np.random.default_rng(0)
    d = unit_dict(rng, 6, 10)
    res = omp(d, 2.0 * d[:, 4], PursuitConfig(1))
    assert res.code.support == (5,)
    assert res.code.coefficients[0] == pytest.approx(2.0)
    assert res.residual_norm < 1e-12


def test_omp_selection_recheck_oracle():
    # re-verify every pick independently: it must maximize |<r, d_j>| where
    # r is the exact least-squares residual over the previously picked atoms
    rng = np.random.default_rng(1)
    for trial in range(20):
        d = unit_dict(rng, 6, 10)
        y = rng.standard_normal(6)
        res = omp(d, y, PursuitConfig(3, residual_tolerance=0.0))
        chosen = []
        for step, j in enumerate(res.selected):
            if chosen:
                sub = d[:, [i - 1 for i in chosen]]
                coef = np.linalg.lstsq(sub, y, rcond=None)[0]
                r = y - sub @ coef
            else:
                r = y.copy()
            corr = np.abs(d.T @ r)
            corr[[i - 1 for i in chosen]] = -1.0
            assert corr[j - 1] == pytest.approx(corr.max(), rel=1e-12)
            chosen.append(j)
        sub = d[:, [i - 1 for i in res.code.support]]
        resid = y - sub @ np.linalg.lstsq(sub, y, rcond=None)[0]
        assert np.abs(sub.T @ resid).max() <= 1e-8 * np.linalg.norm(y)


def test_omp_residuals_non_increasing():
    rng = np.random.default_rng(2)
    d = unit_dict(rng, 8, 20)
    y = rng.standard_normal(8)
    res = omp(d, y, PursuitConfig(6, residual_tolerance=0.0))
    prev = np.linalg.norm(y)
    for k in range(1, res.iterations + 1):
        sub = d[:, [i - 1 for i in res.selected[:k]]]
        coef = np.linalg.lstsq(sub, y, rcond=None)[0]
        rn = np.linalg.norm(y - sub @ coef)
        assert rn <= prev + 1e-12
        prev = rn


def test_omp_allowed_support_contract():
    rng = np.random.default_rng(3)
    d = unit_dict(rng, 6, 8)
    for trial in range(10):
        y = rng.standard_normal(6)
        res = omp(d, y, PursuitConfig(2, allowed_support=frozenset({2, 4})))
        assert set(res.code.support) <= {2, 4}


def test_omp_empty_allowed_support():
    d = np.eye(4)
    y = np.ones(4)
    res = omp(d, y, PursuitConfig(2, allowed_support=frozenset()))
    assert res.code.entries == ()
    assert res.residual_norm == pytest.approx(2.0)


def test_omp_full_allowed_equals_absent():
    rng = np.random.default_rng(4)
    d = unit_dict(rng, 6, 9)
    y = rng.standard_normal(6)
    a = omp(d, y, PursuitConfig(3))
    b = omp(d, y, PursuitConfig(3, allowed_support=frozenset(range(1, 10))))
    assert a.code == b.code and a.residual_norm == b.residual_norm


def test_omp_scan_count_formula():
    rng = np.random.default_rng(5)
    d = unit_dict(rng, 8, 15)
    y = rng.standard_normal(8)
    res = omp(d, y, PursuitConfig(4, residual_tolerance=0.0))
    assert res.iterations == 4
    assert res.atom_scan_count == 15 * 4 - 4 * 3 // 2


def test_omp_scale_equivariance():
    rng = np.random.default_rng(6)
    d = unit_dict(rng, 7, 12)
    y = rng.standard_normal(7)
    base = omp(d, y, PursuitConfig(3))
    for alpha in (0.5, 4.0):
        scaled = omp(d, alpha * y, PursuitConfig(3))
        assert scaled.code.support == base.code.support
        assert np.allclose(scaled.code.coefficients, alpha * base.code.coefficients,
                           rtol=1e-10)


def test_omp_orthonormal_equals_brute_force():
    rng = np.random.default_rng(7)
    for trial in range(10):
        n = int(rng.integers(3, 8))
        q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        y = rng.standard_normal(n)
        k = int(rng.integers(1, 3))
        a = omp(q, y, PursuitConfig(k, residual_tolerance=0.0))
        b = brute_force_best_k(q, y, k)
        assert a.code.support == b.code.support
        assert np.allclose(a.code.coefficients, b.code.coefficients, atol=1e-10)


def test_omp_rank_deficient_flagged_not_fatal():
    # second pick is numerically dependent on the first: defect ~1e-12
    a2 = np.array([1.0, 1e-12, 0.0])
    d = np.column_stack([np.array([1.0, 0.0, 0.0]), a2 / np.linalg.norm(a2), np.array([0.0, 0.0, 1.0])])
    y = np.array([1.0, 1.0, 0.0])
    res = omp(d, y, PursuitConfig(2, residual_tolerance=0.0))
    assert res.rank_deficient
    assert res.code.support == (1, 2)
    assert np.isfinite(res.code.coefficients).all()


def test_omp_validation_errors():
    d = np.eye(4)
    with pytest.raises(ConfigError):
        omp(d, np.ones(4), PursuitConfig(5))
    with pytest.raises(ConfigError):
        omp(d, np.ones(4), PursuitConfig(3, allowed_support=frozenset({1, 2})))
    with pytest.raises(DomainError):
        omp(d, np.ones(4), PursuitConfig(1, allowed_support=frozenset({9})))
    with pytest.raises(DimensionError):
        omp(d, np.ones(3), PursuitConfig(1))
    with pytest.raises(ConfigError):
        PursuitConfig(0)
    with pytest.raises(ConfigError):
        PursuitConfig(1, residual_tolerance=-1.0)


def test_least_squares_examples():
    sol = least_squares_on_support(np.eye(2), np.array([1.0, 1.0]), [1])
    assert sol.coefficients[0] == pytest.approx(1.0)
    assert sol.residual_norm == pytest.approx(1.0)
    rng = np.random.default_rng(8)
    d = unit_dict(rng, 5, 5)
    y = d @ np.array([1.0, -2.0, 0.0, 0.0, 0.5])
    sol = least_squares_on_support(d, y, [1, 2, 5])
    assert sol.residual_norm < 1e-10


def test_least_squares_normal_equation_oracle():
    rng = np.random.default_rng(9)
    d = unit_dict(rng, 8, 6)
    y = rng.standard_normal(8)
    sol = least_squares_on_support(d, y, [1, 3, 5])
    sub = d[:, [0, 2, 4]]
    oracle = np.linalg.solve(sub.T @ sub, sub.T @ y)
    assert np.allclose(sol.coefficients, oracle, atol=1e-8)
    assert not sol.rank_deficient


def test_least_squares_singular_flagged():
    d = np.column_stack([np.array([1.0, 0.0]), np.array([1.0, 0.0])])
    sol = least_squares_on_support(d, np.array([1.0, 1.0]), [1, 2])
    assert sol.rank_deficient
    # minimum-norm solution splits the weight
    assert np.allclose(sol.coefficients, [0.5, 0.5])


def test_least_squares_errors():
    with pytest.raises(DomainError):
        least_squares_on_support(np.eye(3), np.ones(3), [])
    with pytest.raises(DomainError):
        least_squares_on_support(np.eye(3), np.ones(3), [1, 1])
    with pytest.raises(DomainError):
        least_squares_on_support(np.eye(3), np.ones(3), [4])


def test_brute_force_identity_pick():
    res = brute_force_best_k(np.eye(3), np.array([3.0, 0.0, -1.0]), 1)
    assert res.code.support == (1,)
    assert res.residual_norm == pytest.approx(1.0)


def test_brute_force_exact_span():
    rng = np.random.default_rng(10)
    d = unit_dict(rng, 4, 6)
    y = d[:, [1, 3]] @ np.array([1.0, 2.0])
    res = brute_force_best_k(d, y, 2)
    assert res.residual_norm < 1e-10


def test_brute_force_dominates_omp():
    rng = np.random.default_rng(11)
    for trial in range(50):
        n = int(rng.integers(2, 9))
        t = int(rng.integers(2, 13))
        k = min(int(rng.integers(1, 3)), n, t)
        d = unit_dict(rng, n, t)
        y = rng.standard_normal(n)
        a = omp(d, y, PursuitConfig(k, residual_tolerance=0.0))
        b = brute_force_best_k(d, y, k)
        assert b.residual_norm <= a.residual_norm + 1e-10


def test_brute_force_budget_guard():
    rng = np.random.default_rng(12)
    d = unit_dict(rng, 10, 200)
    with pytest.raises(CombinatorialBudgetError):
        brute_force_best_k(d, rng.standard_normal(10), 5)


def test_omp_many_matches_scalar_bitwise():
    rng = np.random.default_rng(13)
    d = unit_dict(rng, 12, 30)
    ys = rng.standard_normal((12, 40))
    batch = omp_many(d, ys, PursuitConfig(4))
    for p in range(40):
        ref = omp(d, ys[:, p], PursuitConfig(4))
        assert ref.selected == batch[p].selected
        assert ref.residual_norm == batch[p].residual_norm
        assert np.array_equal(ref.code.coefficients, batch[p].code.coefficients)
        assert ref.atom_scan_count == batch[p].atom_scan_count


def test_omp_many_blocked_matches_scalar():
    rng = np.random.default_rng(14)
    q, tl = 4, 8
    d = unit_dict(rng, 16, q * tl)
    ys = rng.standard_normal((16, 25))
    blocks = np.sort(np.argsort(rng.random((25, tl)), axis=1)[:, :3], axis=1)
    batch = omp_many(d, ys, PursuitConfig(5), allowed_blocks=blocks, block_q=q)
    for p in range(25):
        allowed = frozenset(int(b) * q + o + 1 for b in blocks[p] for o in range(q))
        ref = omp(d, ys[:, p], PursuitConfig(5, allowed_support=allowed))
        assert ref.selected == batch[p].selected
        assert set(batch[p].code.support) <= allowed


def test_omp_many_early_exit_mixed():
    rng = np.random.default_rng(15)
    d = unit_dict(rng, 10, 25)
    ys = np.zeros((10, 30))
    for p in range(30):
        k = int(rng.integers(0, 4))
        if k:
            idx = rng.choice(25, size=k, replace=False)
            ys[:, p] = d[:, idx] @ (rng.uniform(1, 2, k) * 3.0 ** -np.arange(k))
    batch = omp_many(d, ys, PursuitConfig(5))
    for p in range(30):
        ref = omp(d, ys[:, p], PursuitConfig(5))
        assert ref.selected == batch[p].selected
        assert ref.residual_norm == batch[p].residual_norm


def test_batch_solve_coefficient_matrix():
    rng = np.random.default_rng(16)
    d = unit_dict(rng, 8, 12)
    ys = rng.standard_normal((8, 9))
    solve = omp_many_arrays(d, ys, PursuitConfig(3))
    x = solve.coefficient_matrix()
    for p in range(9):
        assert np.allclose(x[:, p], solve.result(p).code.to_dense())


def test_lazy_columns_matches_dense():
    rng = np.random.default_rng(17)
    d = unit_dict(rng, 9, 14)
    lazy = LazyColumns(9, 14, lambda j: d[:, j], materialize_budget=0)
    y = rng.standard_normal(9)
    a = omp(d, y, PursuitConfig(3))
    b = omp(lazy, y, PursuitConfig(3))
    assert a.code.support == b.code.support
    assert np.allclose(a.code.coefficients, b.code.coefficients, atol=1e-9)
    assert a.atom_scan_count == b.atom_scan_count
