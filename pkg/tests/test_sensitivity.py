import math

import numpy as np
import pytest

from rdsm.catalog import SamplingDistribution, build_catalog
from rdsm.sensitivity import (
    ParameterScreen,
    ScreeningResult,
    benjamini_hochberg,
    retain_parameters,
    screen_fdr_logworth,
    sobol_convergence,
    sobol_indices,
)


def bh_brute_force(p):
    """Direct definition: min over j >= rank(i) of m * p_(j) / j, capped at 1.

    The outer max against the raw p is an identity in exact arithmetic
    (every step-up term is at least p_(i)); it repairs the one-ulp rounding
    of p * m / m so adjusted >= raw holds bit-for-bit, matching the
    implementation's invariant.
    """
    p = np.asarray(p, dtype=float)
    m = p.size
    order = np.argsort(p, kind="stable")
    out = np.empty(m)
    for pos, idx in enumerate(order):
        out[idx] = max(
            p[idx], min(1.0, min(m * p[order[j]] / (j + 1) for j in range(pos, m)))
        )
    return out


def test_bh_matches_brute_force_fuzzed():
    rng = np.random.default_rng(0)
    for trial in range(1500):
        m = int(rng.integers(1, 42))
        p = rng.random(m)
        if trial % 3 == 0:
            p = np.round(p, 1)  # force ties
        if trial % 7 == 0:
            p[rng.integers(m)] = 0.0
        if trial % 11 == 0:
            p[rng.integers(m)] = 1.0
        np.testing.assert_array_equal(benjamini_hochberg(p), bh_brute_force(p))


def test_bh_basic_properties():
    rng = np.random.default_rng(1)
    p = rng.random(41)
    adj = benjamini_hochberg(p)
    assert np.all(adj >= p)
    assert np.all(adj <= 1.0)
    # adjustment preserves the ordering of the sorted p-values
    order = np.argsort(p)
    assert np.all(np.diff(adj[order]) >= 0.0)
    # a single test is unadjusted
    np.testing.assert_array_equal(benjamini_hochberg([0.03]), [0.03])


def test_bh_validation():
    with pytest.raises(ValueError):
        benjamini_hochberg([])
    with pytest.raises(ValueError):
        benjamini_hochberg([0.5, 1.5])
    with pytest.raises(ValueError):
        benjamini_hochberg([0.5, math.nan])


def _names(m=41):
    return tuple(f"p{i}" for i in range(m))


def test_screen_finds_planted_signal():
    rng = np.random.default_rng(2)
    x = rng.uniform(0.0, 1.0, size=(300, 41))
    y = 5.0 * x[:, 7] + rng.normal(0.0, 0.3, 300)
    res = screen_fdr_logworth(x, y, _names(), "Y", max_k=4)
    assert res.entries[0].name == "p7"
    assert res.retained[0] == "p7"
    assert res.entries[0].logworth > 10.0
    # logworth exponentiates back to the adjusted p
    for e in res.entries:
        if e.fdr_p >= 1e-300:
            assert 10.0 ** (-e.logworth) == pytest.approx(e.fdr_p, rel=1e-12)
        assert e.fdr_p >= e.raw_p


def test_screen_null_columns_rarely_pass():
    hits = 0
    total = 0
    for seed in range(10):
        rng = np.random.default_rng(100 + seed)
        x = rng.uniform(0.0, 1.0, size=(200, 41))
        y = 5.0 * x[:, 0] + rng.normal(0.0, 0.25, 200)
        res = screen_fdr_logworth(x, y, _names(), "Y")
        for e in res.entries:
            if e.name != "p0":
                total += 1
                hits += e.logworth >= 1.3
    assert hits / total <= 0.05


def test_screen_zero_variance_column_flagged():
    rng = np.random.default_rng(3)
    x = rng.uniform(0.0, 1.0, size=(50, 5))
    x[:, 2] = 0.7
    y = 2.0 * x[:, 0] + rng.normal(0.0, 0.1, 50)
    res = screen_fdr_logworth(x, y, _names(5), "Y")
    e = res.entry("p2")
    assert e.zero_variance
    assert e.raw_p == 1.0
    assert e.logworth == 0.0
    assert "p2" not in res.retained


def test_screen_constant_output():
    rng = np.random.default_rng(4)
    x = rng.uniform(0.0, 1.0, size=(60, 4))
    res = screen_fdr_logworth(x, np.full(60, 3.3), _names(4), "Y")
    assert all(e.raw_p == 1.0 for e in res.entries)
    assert res.retained == ()


def test_screen_validation():
    rng = np.random.default_rng(5)
    x = rng.uniform(size=(29, 3))
    with pytest.raises(ValueError, match="30 rows"):
        screen_fdr_logworth(x, np.ones(29), _names(3), "Y")
    x = rng.uniform(size=(40, 3))
    with pytest.raises(ValueError, match="names"):
        screen_fdr_logworth(x, np.ones(40), _names(4), "Y")
    y = np.ones(40)
    y[3] = math.inf
    with pytest.raises(ValueError, match="finite"):
        screen_fdr_logworth(x, y, _names(3), "Y")


def test_screen_scale_invariance():
    rng = np.random.default_rng(6)
    x = rng.uniform(0.0, 1.0, size=(120, 8))
    y = 3.0 * x[:, 1] - 2.0 * x[:, 5] + rng.normal(0.0, 0.2, 120)
    base = screen_fdr_logworth(x, y, _names(8), "Y")
    # power-of-two rescale reproduces the t-statistics bit for bit
    x2 = x.copy()
    x2[:, 1] *= 2.0**13
    scaled = screen_fdr_logworth(x2, y, _names(8), "Y")
    assert [e.name for e in scaled.entries] == [e.name for e in base.entries]
    np.testing.assert_array_equal(
        [e.logworth for e in scaled.entries], [e.logworth for e in base.entries]
    )
    assert scaled.retained == base.retained
    # affine shift leaves the retained set and ranking unchanged
    x3 = x.copy()
    x3[:, 5] = 100.0 + 7.0 * x3[:, 5]
    shifted = screen_fdr_logworth(x3, y, _names(8), "Y")
    assert [e.name for e in shifted.entries] == [e.name for e in base.entries]
    assert shifted.retained == base.retained
    np.testing.assert_allclose(
        [e.logworth for e in shifted.entries],
        [e.logworth for e in base.entries],
        rtol=1e-8,
    )


def _ladder(values, floor_names=None):
    names = floor_names or [f"q{i}" for i in range(len(values))]
    entries = tuple(ParameterScreen(n, 0.0, 0.0, v) for n, v in zip(names, values))
    return ScreeningResult("TS", entries, ())


def test_retention_ladder_with_cliff():
    # the cliff at 12.54 -> 3.96 truncates to four despite the earlier
    # 59.38 -> 18.67 drop also qualifying
    sr = _ladder([59.38, 18.67, 12.99, 12.54, 3.96, 3.90], list("AEXBCD"))
    assert retain_parameters(sr, max_k=4) == ("A", "E", "X", "B")
    # mechanism cap of three bites first
    assert retain_parameters(sr, max_k=3) == ("A", "E", "X")


def test_retention_below_floor_is_empty():
    sr = _ladder([1.1, 0.9, 0.2])
    assert retain_parameters(sr, max_k=3) == ()


def test_retention_gentle_decay_hits_cap():
    sr = _ladder([5.0, 4.5, 4.0, 3.5, 3.0, 2.5])
    assert retain_parameters(sr, max_k=4) == ("q0", "q1", "q2", "q3")


def test_retention_floor_trims_candidates():
    # only the first two clear the floor; no qualifying drop between them
    sr = _ladder([10.0, 4.5, 1.0, 0.9])
    assert retain_parameters(sr, max_k=4) == ("q0", "q1")


def test_retention_single_candidate():
    sr = _ladder([2.0, 0.5])
    assert retain_parameters(sr, max_k=3) == ("q0",)


# -- Sobol' ------------------------------------------------------------------


def test_sobol_additive_model():
    f = lambda u: u[:, 0] + u[:, 1]
    r = sobol_indices(f, 5, 2**13, seed=3)
    assert r.evaluations_used == 2**13 * 7
    np.testing.assert_allclose(r.s1[:2], [0.5, 0.5], atol=0.02)
    np.testing.assert_allclose(r.st[:2], [0.5, 0.5], atol=0.02)
    np.testing.assert_allclose(r.s1[2:], 0.0, atol=0.02)
    np.testing.assert_allclose(r.st[2:], 0.0, atol=0.02)
    # total effects dominate first-order effects up to estimator noise
    assert np.all(r.st >= r.s1 - 2.0 * (r.s1_stderr + r.st_stderr))
    assert float(r.s1.sum()) <= 1.0 + 2.0 * float(r.s1_stderr.sum())
    assert np.all(np.isfinite(r.s1_stderr)) and np.all(r.s1_stderr >= 0.0)


def test_sobol_ishigami_oracle():
    def ishigami(u):
        x = -np.pi + 2.0 * np.pi * u
        return np.sin(x[:, 0]) + 7.0 * np.sin(x[:, 1]) ** 2 + 0.1 * x[:, 2] ** 4 * np.sin(x[:, 0])

    r = sobol_indices(ishigami, 3, 2**13, seed=5)
    np.testing.assert_allclose(
        r.s1, [0.31390519114781146, 0.4424111447900409, 0.0], atol=0.02
    )
    assert r.st[2] == pytest.approx(0.24368366406214773, abs=0.02)
    assert r.st[2] > 0.1  # x3 acts only through interaction


def test_sobol_constant_model_degenerate():
    r = sobol_indices(lambda u: np.zeros(len(u)), 3, 128, seed=1)
    assert r.degenerate
    assert np.all(np.isnan(r.s1)) and np.all(np.isnan(r.st))


def test_sobol_validation():
    f = lambda u: u[:, 0]
    with pytest.raises(ValueError, match="128"):
        sobol_indices(f, 2, 64)
    with pytest.raises(ValueError, match="names"):
        sobol_indices(f, 2, 128, names=("a",))
    with pytest.raises(ValueError, match="one output per row"):
        sobol_indices(lambda u: np.zeros(3), 2, 128)


def test_sobol_catalog_distribution_path():
    cat = build_catalog()
    j = cat.index("E")
    f = lambda x: x[:, j]
    r = sobol_indices(
        f, len(cat), 2048, seed=7, dist=SamplingDistribution.uniform_pm20(), catalog=cat
    )
    assert r.names == cat.names
    assert r.ranking()[0] == "E"
    assert r.s1[j] == pytest.approx(1.0, abs=0.05)
    others = np.delete(np.arange(len(cat)), j)
    assert np.all(np.abs(r.s1[others]) < 0.08)


def test_sobol_error_decays_with_n():
    f = lambda u: u[:, 0] + u[:, 1]
    errs = []
    for n in (128, 256, 512, 1024):
        e = [
            np.mean(np.abs(sobol_indices(f, 2, n, seed=s, n_bootstrap=0).s1 - 0.5))
            for s in range(8)
        ]
        errs.append(float(np.mean(e)))
    assert all(b < a for a, b in zip(errs, errs[1:]))
    # 8x more samples cuts the error roughly like n^(-1/2)
    assert errs[0] / errs[-1] > 1.8


def test_sobol_convergence_report():
    f = lambda u: u[:, 0] + u[:, 1]
    cr = sobol_convergence(f, 5, 1024, 8192, seed=2, top_k=2)
    assert cr.ranks_agree
    assert set(cr.ranking_large) == {"x0", "x1"}
    assert cr.max_abs_delta_s1 < 0.1
    const = sobol_convergence(lambda u: np.full(len(u), 2.0), 3, 256, 512, seed=1)
    assert const.degenerate and const.ranks_agree
    with pytest.raises(ValueError):
        sobol_convergence(f, 5, 1024, 1024)


def test_sobol_deterministic():
    f = lambda u: u[:, 0] ** 2 + 0.5 * u[:, 1]
    a = sobol_indices(f, 3, 256, seed=9)
    b = sobol_indices(f, 3, 256, seed=9)
    np.testing.assert_array_equal(a.s1, b.s1)
    np.testing.assert_array_equal(a.st_stderr, b.st_stderr)
