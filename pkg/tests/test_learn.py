import numpy as np
import pytest

from crossdict.errors import ConfigError, DegenerateDataError, DimensionError
from crossdict.learn import (TrainConfig, _update_stage, ksvd, ksvd_constrained,
                             train_cross_scale)
from crossdict.scaling import ScaleSpec
from crossdict.synthetic import (planted_cross_scale_model,
                                 planted_cross_scale_signals,
                                 planted_dictionary, planted_sparse_signals)


def test_rank_one_data():
    rng = np.random.default_rng(0)
    v = rng.standard_normal(6)
    samples = np.tile(v[:, None], (1, 12))
    d, codes, report = ksvd(samples, TrainConfig(1, 1, iterations=1, seed=0))
    assert abs(abs(d.atoms[:, 0] @ (v / np.linalg.norm(v)))) > 1 - 1e-12
    assert report.objective_per_iteration[-1] < 1e-10
    assert all(c.nnz == 1 for c in codes)


def test_update_stage_matches_svd_oracle():
    # replay the sequential rank-one refits with an independent dense SVD
    rng = np.random.default_rng(1)
    y = rng.standard_normal((5, 8))
    d = rng.standard_normal((5, 3))
    d /= np.linalg.norm(d, axis=0)
    x = rng.standard_normal((3, 8))
    x[rng.random((3, 8)) < 0.3] = 0.0
    x[0, 0] = 1.0  # keep every atom used
    x[1, 1] = 1.0
    x[2, 2] = 1.0

    d_test = d.copy()
    x_test = x.copy()
    _update_stage(y, d_test, x_test, threshold=1)

    d_ref = d.copy()
    x_ref = x.copy()
    e = y - d_ref @ x_ref
    for j in range(3):
        users = np.flatnonzero(x_ref[j])
        ej = e[:, users] + np.outer(d_ref[:, j], x_ref[j, users])
        u, s, vt = np.linalg.svd(ej, full_matrices=False)
        d_ref[:, j] = u[:, 0]
        x_ref[j, users] = s[0] * vt[0]
        e[:, users] = ej - np.outer(u[:, 0], s[0] * vt[0])
    assert np.allclose(d_test, d_ref, atol=1e-8)
    assert np.allclose(x_test, x_ref, atol=1e-8)


def test_update_stage_monotone_and_unit_norm():
    rng = np.random.default_rng(2)
    samples = rng.standard_normal((10, 60))
    d, codes, report = ksvd(samples, TrainConfig(16, 3, iterations=5, seed=3))
    for before, after in zip(report.objective_pre_update, report.objective_per_iteration):
        assert after <= before * (1 + 1e-9) + 1e-9
    assert np.allclose(np.linalg.norm(d.atoms, axis=0), 1.0, atol=1e-9)


def test_dead_atom_replacement():
    rng = np.random.default_rng(3)
    base = rng.standard_normal((8, 40))
    # all samples live in a 2-D subspace; random-unit atoms mostly miss it
    u, _, _ = np.linalg.svd(base, full_matrices=False)
    samples = u[:, :2] @ rng.standard_normal((2, 40))
    _, _, report = ksvd(samples, TrainConfig(6, 1, iterations=3, seed=4, init="random-unit"))
    assert report.replaced_atoms > 0


def test_reproducibility_bitwise():
    rng = np.random.default_rng(5)
    samples = rng.standard_normal((8, 50))
    cfg = TrainConfig(10, 2, iterations=4, seed=11)
    d1, _, _ = ksvd(samples, cfg)
    d2, _, _ = ksvd(samples, cfg)
    assert np.array_equal(d1.atoms, d2.atoms)


def test_config_validation():
    rng = np.random.default_rng(6)
    samples = rng.standard_normal((6, 5))
    with pytest.raises(ConfigError):
        ksvd(samples, TrainConfig(10, 2, iterations=1))  # T > samples
    with pytest.raises(ConfigError):
        ksvd(samples, TrainConfig(4, 5, iterations=1))  # K > min(N, T)
    with pytest.raises(DegenerateDataError):
        ksvd(np.zeros((4, 8)), TrainConfig(2, 1, iterations=1))
    with pytest.raises(ConfigError):
        TrainConfig(4, 2, iterations=0)
    with pytest.raises(ConfigError):
        TrainConfig(4, 2, init="bogus")


def test_constrained_full_support_reduces_to_plain():
    rng = np.random.default_rng(7)
    samples = rng.standard_normal((8, 40))
    cfg = TrainConfig(6, 2, iterations=3, seed=7)
    d1, c1, r1 = ksvd(samples, cfg)
    d2, c2, r2 = ksvd_constrained(samples, [range(1, 7)] * 40, cfg)
    assert np.array_equal(d1.atoms, d2.atoms)
    assert r1.objective_per_iteration == r2.objective_per_iteration
    assert all(a.entries == b.entries for a, b in zip(c1, c2))


def test_constrained_respects_allowed_sets():
    rng = np.random.default_rng(8)
    samples = rng.standard_normal((8, 30))
    allowed = [frozenset(rng.choice(6, size=3, replace=False) + 1) for _ in range(30)]
    _, codes, _ = ksvd_constrained(samples, allowed, TrainConfig(6, 2, iterations=3, seed=8))
    for code, sets in zip(codes, allowed):
        assert set(code.support) <= sets


def test_constrained_empty_set_named():
    rng = np.random.default_rng(9)
    samples = rng.standard_normal((4, 5))
    allowed = [{1}, {2}, set(), {1}, {3}]
    with pytest.raises(ConfigError, match="sample 3"):
        ksvd_constrained(samples, allowed, TrainConfig(3, 1, iterations=1))


def test_constrained_toy_cross_scale_recovery():
    # two parents, two children each; every sample mixes the two children of
    # one parent, so training must recover each block's 2-D atom subspace
    # exactly, with the block assignment matching the planted parents
    spec = ScaleSpec((8,), (2,))
    model = planted_cross_scale_model(spec, 2, 4, seed=21, detail=0.8, k_low=1, k_high=2)
    signals, coefs, parents = planted_cross_scale_signals(model, 300, seed=22)
    allowed = [frozenset(int(b) * 2 + o + 1 for b in np.array(p) - 1 for o in range(2))
               for p in parents]
    cfg = TrainConfig(4, 2, iterations=25, seed=23)
    d, codes, report = ksvd_constrained(signals, allowed, cfg)
    assert report.objective_per_iteration[-1] < 1e-6
    for block in range(2):
        planted_basis = np.linalg.qr(model.d_high.atoms[:, 2 * block : 2 * block + 2])[0]
        learned_basis = np.linalg.qr(d.atoms[:, 2 * block : 2 * block + 2])[0]
        angles = np.linalg.svd(planted_basis.T @ learned_basis, compute_uv=False)
        assert np.allclose(angles, 1.0, atol=1e-6)


def test_train_cross_scale_model_invariants():
    rng = np.random.default_rng(10)
    samples = rng.standard_normal((16, 120))
    spec = ScaleSpec((4, 4), (2, 2))
    model, (rep_low, rep_high) = train_cross_scale(
        samples, spec, 8, 32, 2, 4, iterations=3, seed=1
    )
    assert model.t_high == model.q * model.t_low
    assert model.d_low.atom_dim == spec.coarse_size
    assert model.d_high.atom_dim == spec.fine_size
    assert np.allclose(np.linalg.norm(model.d_high.atoms, axis=0), 1.0, atol=1e-9)
    assert len(rep_low.objective_per_iteration) == 3
    assert len(rep_high.objective_per_iteration) == 3


def test_train_cross_scale_validation():
    rng = np.random.default_rng(11)
    samples = rng.standard_normal((16, 60))
    spec = ScaleSpec((4, 4), (2, 2))
    with pytest.raises(ConfigError):
        train_cross_scale(samples, spec, 7, 32, 2, 4, iterations=1)
    with pytest.raises(DimensionError):
        train_cross_scale(rng.standard_normal((8, 60)), spec, 8, 32, 2, 4, iterations=1)


def test_train_cross_scale_handles_flat_samples():
    # flat (zero after DC removal) samples get a placeholder block and an
    # empty fine code rather than crashing constrained training
    rng = np.random.default_rng(12)
    samples = rng.standard_normal((16, 60))
    samples[:, :5] = 0.0
    spec = ScaleSpec((4, 4), (2, 2))
    model, _ = train_cross_scale(samples, spec, 8, 16, 2, 2, iterations=2, seed=2)
    assert model.t_high == 16


def test_planted_dictionary_recovery_trend():
    d_star = planted_dictionary(16, 32, seed=1)
    signals, _ = planted_sparse_signals(d_star, 3, 800, seed=42)
    _, _, report = ksvd(signals, TrainConfig(32, 3, iterations=10, seed=5))
    objs = report.objective_per_iteration
    assert objs[-1] < objs[0] * 0.5
