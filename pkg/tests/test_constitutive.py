import math

import numpy as np
import pytest

from rdsm.constitutive import (
    bk_mixed_mode_gc,
    cdm_damage_evolution,
    cdm_effective_stress,
    cdm_initiation,
    cdm_shear_damage,
    cdm_shear_hardening,
    czm_initiation,
    czm_traction,
    jc_plastic_work,
    jc_stress,
    macaulay,
)
from rdsm.errors import AdmissibilityError


def test_power_hardening_oracle():
    # sigma = a + b * eps^n at the aluminum calibration point
    assert jc_stress(0.2, 29.8, 103.6, 0.607) == pytest.approx(
        68.80182800592101, rel=1e-12
    )
    assert jc_stress(0.0, 29.8, 103.6, 0.607) == pytest.approx(29.8, rel=1e-12)
    assert jc_stress(1.0, 29.8, 103.6, 0.607) == pytest.approx(133.4, rel=1e-12)
    with pytest.raises(ValueError):
        jc_stress(-0.1, 29.8, 103.6, 0.607)


def test_power_hardening_work_matches_quadrature():
    a, b, n = 29.8, 103.6, 0.607
    eps = 0.37
    grid = np.linspace(0.0, eps, 200001)
    numeric = np.trapezoid(jc_stress(grid, a, b, n), grid)
    assert jc_plastic_work(eps, a, b, n) == pytest.approx(numeric, rel=1e-8)
    assert jc_plastic_work(0.0, a, b, n) == 0.0


def test_macaulay():
    assert macaulay(3.0) == 3.0
    assert macaulay(-2.0) == 0.0
    np.testing.assert_array_equal(macaulay(np.array([-1.0, 0.0, 2.5])), [0.0, 0.0, 2.5])


def test_effective_stress():
    assert cdm_effective_stress(10.0, 0.5) == pytest.approx(20.0)
    assert cdm_effective_stress(10.0, 0.0) == 10.0
    with pytest.raises(ValueError):
        cdm_effective_stress(10.0, 1.0)
    with pytest.raises(ValueError):
        cdm_effective_stress(10.0, -0.1)


def test_cdm_initiation_ratio_and_tie_order():
    # ratios: 11 -> 0.8, 22 -> 1.2, 12 -> 1.1; largest wins
    assert cdm_initiation(40.0, 12.0, 5.5, 50.0, 10.0, 5.0) == "22"
    assert cdm_initiation(40.0, 8.0, 4.0, 50.0, 10.0, 5.0) is None
    # exact tie resolves in the order 11, 22, 12
    assert cdm_initiation(50.0, 10.0, 2.0, 50.0, 10.0, 5.0) == "11"
    # compression counts through the magnitude
    assert cdm_initiation(-60.0, 0.0, 0.0, 50.0, 10.0, 5.0) == "11"


def test_cdm_damage_evolution_oracle():
    d = cdm_damage_evolution(1.5, 53e3, 2.8e6, 150.0, 0.04)
    assert d == pytest.approx(0.4287236023501173, rel=1e-12)
    assert cdm_damage_evolution(1.0, 53e3, 2.8e6, 150.0, 0.04) == 0.0
    # d -> 1 as the overstress ratio grows
    assert cdm_damage_evolution(200.0, 53e3, 2.8e6, 150.0, 0.04) > 0.99
    # monotone in k
    ks = np.linspace(1.0, 5.0, 50)
    ds = cdm_damage_evolution(ks, 53e3, 2.8e6, 150.0, 0.04)
    assert np.all(np.diff(ds) > 0.0)


def test_cdm_damage_requires_positive_margin():
    # u0 * lc = 501.607 * 0.04 = 20.06 > g_f = 15
    with pytest.raises(AdmissibilityError):
        cdm_damage_evolution(1.5, 53e3, 2.8e6, 15.0, 0.04)
    with pytest.raises(ValueError):
        cdm_damage_evolution(0.9, 53e3, 2.8e6, 150.0, 0.04)


def test_shear_damage_log_law():
    d = cdm_shear_damage(2.0, 0.2767, d12_max=0.714)
    assert d == pytest.approx(0.2767 * math.log(2.0), rel=1e-12)
    assert cdm_shear_damage(1.0, 0.2767, d12_max=0.714) == 0.0
    assert cdm_shear_damage(1e9, 0.2767, d12_max=0.714) == 0.714
    with pytest.raises(ValueError):
        cdm_shear_damage(0.5, 0.2767)


def test_shear_hardening():
    assert cdm_shear_hardening(0.0, 5.16e3, 0.65e3, 0.729) == pytest.approx(5.16e3)
    got = cdm_shear_hardening(0.01, 5.16e3, 0.65e3, 0.729)
    assert got == pytest.approx(5.16e3 + 0.65e3 * 0.01**0.729, rel=1e-12)
    with pytest.raises(ValueError):
        cdm_shear_hardening(-1e-3, 5.16e3, 0.65e3, 0.729)


def test_czm_traction_envelope_and_unloading():
    k, t0, gc = 1e7, 7.6e3, 7.6
    delta0 = t0 / k
    delta_f = 2.0 * gc / t0
    assert czm_traction(0.5 * delta0, k, t0, gc) == pytest.approx(0.5 * t0)
    assert czm_traction(delta0, k, t0, gc) == pytest.approx(t0)
    mid = 0.5 * (delta0 + delta_f)
    expected = t0 * (delta_f - mid) / (delta_f - delta0)
    assert czm_traction(mid, k, t0, gc) == pytest.approx(expected)
    assert czm_traction(delta_f * 1.01, k, t0, gc) == 0.0
    # secant unloading returns along the damaged stiffness
    t_half = czm_traction(0.5 * mid, k, t0, gc, delta_max=mid)
    assert t_half == pytest.approx(0.5 * expected, rel=1e-12)
    with pytest.raises(ValueError):
        czm_traction(-1e-6, k, t0, gc)


def test_czm_softening_area_equals_gc():
    k, t0, gc = 1e7, 7.6e3, 7.6
    delta_f = 2.0 * gc / t0
    grid = np.linspace(0.0, delta_f, 400001)
    tr = czm_traction(grid, k, t0, gc)
    assert np.trapezoid(tr, grid) == pytest.approx(gc, rel=1e-6)


def test_czm_degenerate_lengths_rejected():
    # delta_f <= delta0 when gc is too small for the strength
    with pytest.raises(AdmissibilityError):
        czm_traction(1e-3, k=1e4, t0=7.6e3, gc=1e-3)


def test_czm_initiation_quadratic():
    # pure normal at strength trips; just below does not
    assert czm_initiation(7.6e3, 0.0, 0.0, 7.6e3, 4.9e3, 4.9e3)
    assert not czm_initiation(7.59e3, 0.0, 0.0, 7.6e3, 4.9e3, 4.9e3)
    # compressive normal traction does not count
    assert not czm_initiation(-50e3, 0.0, 0.0, 7.6e3, 4.9e3, 4.9e3)
    # mixed loading crossing the quadratic surface trips; just inside does not
    assert czm_initiation(0.8 * 7.6e3, 0.7 * 4.9e3, 0.0, 7.6e3, 4.9e3, 4.9e3)
    assert not czm_initiation(0.7 * 7.6e3, 0.7 * 4.9e3, 0.0, 7.6e3, 4.9e3, 4.9e3)
    got = czm_initiation(
        np.array([0.0, 8e3]), np.array([0.0, 0.0]), 0.0, 7.6e3, 4.9e3, 4.9e3
    )
    np.testing.assert_array_equal(got, [False, True])


def test_bk_mixed_mode_oracle():
    # 50% shear fraction from equal opening and shear rates
    got = bk_mixed_mode_gc(0.5, 0.5, 0.0, 7.6, 16.6, 2.6)
    assert got == pytest.approx(9.084446399619505, rel=1e-12)
    assert bk_mixed_mode_gc(1.0, 0.0, 0.0, 7.6, 16.6, 2.6) == pytest.approx(7.6)
    assert bk_mixed_mode_gc(0.0, 1.0, 0.0, 7.6, 16.6, 2.6) == pytest.approx(16.6)
    # modes II and III pool into one shear fraction
    a = bk_mixed_mode_gc(0.5, 0.3, 0.2, 7.6, 16.6, 2.6)
    b = bk_mixed_mode_gc(0.5, 0.5, 0.0, 7.6, 16.6, 2.6)
    assert a == pytest.approx(b, rel=1e-12)
    with pytest.raises(ValueError):
        bk_mixed_mode_gc(-0.1, 1.0, 0.0, 7.6, 16.6, 2.6)
    with pytest.raises(ValueError):
        bk_mixed_mode_gc(0.0, 0.0, 0.0, 7.6, 16.6, 2.6)
