import numpy as np
import pytest

from rdsm.sampling import (
    default_strata,
    sample_lhs,
    sample_lss,
    sample_mc,
    saltelli_matrices,
)


def _stratum_counts(col, strata):
    idx = np.minimum((col * strata).astype(int), strata - 1)
    return np.bincount(idx, minlength=strata)


def test_mc_basics():
    d = sample_mc(200, 7, seed=1)
    assert d.values.shape == (200, 7)
    assert d.scheme == "mc"
    assert np.all(d.values >= 0.0) and np.all(d.values < 1.0)


def test_determinism_and_seed_sensitivity():
    for fn in (sample_mc, sample_lhs):
        a = fn(64, 5, seed=9).values
        b = fn(64, 5, seed=9).values
        c = fn(64, 5, seed=10).values
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)
    a = sample_lss(64, 5, seed=9, strata_per_dim=8).values
    b = sample_lss(64, 5, seed=9, strata_per_dim=8).values
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("n", [1, 2, 4, 10, 100, 1000])
@pytest.mark.parametrize("dim", [1, 2, 5])
def test_lhs_stratification_exhaustive(n, dim):
    d = sample_lhs(n, dim, seed=n * 100 + dim)
    for j in range(dim):
        counts = _stratum_counts(d.values[:, j], n)
        assert np.all(counts == 1)


def test_input_validation():
    for fn in (sample_mc, sample_lhs):
        with pytest.raises(ValueError):
            fn(0, 3, seed=1)
        with pytest.raises(ValueError):
            fn(5, 0, seed=1)
    with pytest.raises(ValueError, match="divisible"):
        sample_lss(10, 2, seed=1, strata_per_dim=3)
    with pytest.raises(ValueError):
        sample_lss(10, 2, seed=1, strata_per_dim=20)


def test_default_strata():
    assert default_strata(5000) == 50
    assert default_strata(100) == 10
    assert default_strata(12) == 3
    assert default_strata(7) == 1
    assert default_strata(1) == 1


def test_lss_one_point_per_coarse_cell():
    d = sample_lss(4, 2, seed=3, strata_per_dim=2)
    cells = np.zeros((2, 2), dtype=int)
    for x, y in d.values:
        cells[int(x * 2), int(y * 2)] += 1
    assert np.all(cells == 1)


def test_lss_joint_balance_when_divisible():
    # 2^3 cells, 16 points -> exactly 2 per cell
    d = sample_lss(16, 3, seed=5, strata_per_dim=2)
    cells = {}
    for row in d.values:
        key = tuple((row * 2).astype(int))
        cells[key] = cells.get(key, 0) + 1
    assert len(cells) == 8
    assert all(v == 2 for v in cells.values())


@pytest.mark.parametrize("n,s,dim", [(4, 4, 2), (12, 3, 4), (500, 10, 3), (100, 100, 2)])
def test_lss_marginals_are_latin(n, s, dim):
    d = sample_lss(n, dim, seed=n + s + dim, strata_per_dim=s)
    for j in range(dim):
        assert np.all(_stratum_counts(d.values[:, j], n) == 1)
        # coarse strata balanced to exactly n/s each
        assert np.all(_stratum_counts(d.values[:, j], s) == n // s)


def test_lss_default_strata_path():
    d = sample_lss(100, 4, seed=2)
    assert d.strata_per_dim == 10
    for j in range(4):
        assert np.all(_stratum_counts(d.values[:, j], 100) == 1)


def test_saltelli_structure():
    n, dim = 32, 6
    des = saltelli_matrices(n, dim, seed=11)
    assert des.a.shape == (n, dim) and des.b.shape == (n, dim)
    assert des.ab.shape == (dim, n, dim)
    assert not np.array_equal(des.a, des.b)
    for i in range(dim):
        np.testing.assert_array_equal(des.ab[i][:, i], des.b[:, i])
        mask = np.arange(dim) != i
        np.testing.assert_array_equal(des.ab[i][:, mask], des.a[:, mask])
    # total evaluation budget is n * (dim + 2) rows
    total = des.a.shape[0] + des.b.shape[0] + des.ab.shape[0] * des.ab.shape[1]
    assert total == n * (dim + 2)
