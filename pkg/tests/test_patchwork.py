import numpy as np
import pytest

from crossdict.errors import DimensionError
from crossdict.patchwork import aggregate_patches, extract_patches, patch_count
from crossdict.tensor import Tensor


def test_exact_tiling():
    img = np.arange(16.0).reshape(4, 4)
    cols, grid = extract_patches(img, (2, 2), 2)
    assert cols.shape == (4, 4)
    assert grid.patch_count == 4
    assert np.allclose(cols[:, 0], [0, 1, 4, 5])


def test_overlapping_count():
    img = np.zeros((4, 4))
    _, grid = extract_patches(img, (2, 2), 1)
    assert grid.patch_count == 9


def test_remove_dc_zero_means():
    rng = np.random.default_rng(0)
    img = rng.standard_normal((12, 10))
    cols, grid = extract_patches(img, (4, 4), 2, remove_dc=True)
    assert np.abs(cols.mean(axis=0)).max() < 1e-12
    assert grid.dc_values is not None


@pytest.mark.parametrize("stride", [1, 2, 4])
@pytest.mark.parametrize("remove_dc", [False, True])
def test_round_trip_identity(stride, remove_dc):
    rng = np.random.default_rng(1)
    img = rng.standard_normal((8, 12))
    cols, grid = extract_patches(img, (4, 4), stride, remove_dc=remove_dc)
    back = aggregate_patches(cols, grid, add_dc=remove_dc)
    assert np.allclose(np.asarray(back), img, atol=1e-12)


def test_single_patch_identity():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((5, 7))
    cols, grid = extract_patches(x, (5, 7), 1)
    assert grid.patch_count == 1
    assert np.allclose(np.asarray(aggregate_patches(cols, grid)), x)


def test_round_trip_rank3():
    rng = np.random.default_rng(3)
    vid = rng.standard_normal((8, 8, 4))
    cols, grid = extract_patches(vid, (4, 4, 4), (2, 2, 4))
    back = aggregate_patches(cols, grid)
    assert np.allclose(np.asarray(back), vid, atol=1e-12)


def test_patch_count_formula_property():
    rng = np.random.default_rng(4)
    for _ in range(30):
        rank = int(rng.integers(1, 4))
        shape = tuple(int(rng.integers(4, 12)) for _ in range(rank))
        patch = tuple(int(rng.integers(1, s + 1)) for s in shape)
        stride = tuple(int(rng.integers(1, 4)) for _ in range(rank))
        x = rng.standard_normal(shape)
        _, grid = extract_patches(x, patch, stride)
        assert grid.patch_count == patch_count(shape, patch, stride)
        assert grid.origins.shape == (grid.patch_count, rank)


def test_aggregation_linear():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((6, 6))
    cols, grid = extract_patches(x, (3, 3), 1)
    a = np.asarray(aggregate_patches(2.0 * cols, grid))
    b = 2.0 * np.asarray(aggregate_patches(cols, grid))
    assert np.allclose(a, b, atol=1e-12)


def test_uncovered_cells_warn_and_zero():
    x = np.ones(5)
    cols, grid = extract_patches(x, (2,), (2,))
    assert grid.patch_count == 2
    with pytest.warns(UserWarning, match="covered by no patch"):
        back = aggregate_patches(cols, grid)
    assert np.asarray(back)[4] == 0.0


def test_patch_larger_than_signal_rejected():
    with pytest.raises(DimensionError):
        extract_patches(np.zeros((3, 3)), (4, 4), 1)
    with pytest.raises(DimensionError):
        extract_patches(np.zeros((3, 3)), (2, 2), 0)


def test_tensor_input_accepted():
    t = Tensor(np.arange(16.0).reshape(4, 4))
    cols, grid = extract_patches(t, (2, 2), 2)
    assert grid.signal_shape == (4, 4)
    out = aggregate_patches(cols, grid)
    assert isinstance(out, Tensor)
