"""Pointwise material laws for the bend source model.

Conventions: stresses and strengths share one unit system (the specimen
driver works in psi and inches), strains are dimensionless, fracture energies
are per unit area.  All functions accept scalars or broadcastable numpy
arrays and are pure.

The metal substrate hardens as a power law in equivalent plastic strain.  Ply
damage follows a continuum damage model: effective stress grows as 1/(1-d),
initiation is a stress-ratio-of-one criterion, and post-initiation damage
follows an exponential law regularized by a characteristic length so that a
fixed fracture energy is dissipated regardless of mesh scale.  An
admissibility bound (fracture energy must exceed the elastic energy stored in
one characteristic length at initiation) keeps the law monotone.  Cohesive
layers use a triangular traction-separation law with quadratic stress
initiation and a power-law mix of mode I and shear toughness.
"""

from __future__ import annotations

import numpy as np

from .errors import AdmissibilityError

__all__ = [
    "jc_stress",
    "jc_plastic_work",
    "macaulay",
    "cdm_effective_stress",
    "cdm_initiation",
    "cdm_damage_evolution",
    "cdm_shear_damage",
    "cdm_shear_hardening",
    "czm_traction",
    "czm_initiation",
    "bk_mixed_mode_gc",
]


def jc_stress(eps_p, a, b, n):
    """Power-law flow stress a + b * eps_p**n at equivalent plastic strain eps_p."""
    eps_p = np.asarray(eps_p, dtype=float)
    if np.any(eps_p < 0.0):
        raise ValueError("plastic strain must be nonnegative")
    out = a + b * eps_p**n
    return float(out) if out.ndim == 0 else out

def jc_plastic_work(eps_p, a, b, n):
    """Plastic work density for monotone flow: integral of the flow stress.

    Closed form a*e + b*e**(n+1)/(n+1); valid when the stress point stays on
    the yield surface from 0 to eps_p, which holds under monotone straining.
    """
    eps_p = np.asarray(eps_p, dtype=float)
    if np.any(eps_p < 0.0):
        raise ValueError("plastic strain must be nonnegative")
    out = a * eps_p + b * eps_p ** (n + 1.0) / (n + 1.0)
    return float(out) if out.ndim == 0 else out


def macaulay(x):
    """Positive part <x> = max(x, 0), used to split tension from compression."""
    x = np.asarray(x, dtype=float)
    out = np.maximum(x, 0.0)
    return float(out) if out.ndim == 0 else out


def cdm_effective_stress(sigma, d):
    """Effective (undamaged-area) stress sigma / (1 - d) for damage d in [0, 1)."""
    d = np.asarray(d, dtype=float)
    if np.any(d < 0.0) or np.any(d >= 1.0):
        raise ValueError("damage must lie in [0, 1)")
    out = np.asarray(sigma, dtype=float) / (1.0 - d)
    return float(out) if out.ndim == 0 else out


def cdm_initiation(sigma_eff_11, sigma_eff_22, sigma_eff_12, x11, x22, x12):
    """First ply direction whose effective stress reaches its strength.

    Returns "11", "22", or "12" for the direction with the largest stress
    ratio at or beyond one (ties resolved in that order), or None if no
    direction has initiated.
    """
    ratios = (
        ("11", abs(float(sigma_eff_11)) / float(x11)),
        ("22", abs(float(sigma_eff_22)) / float(x22)),
        ("12", abs(float(sigma_eff_12)) / float(x12)),
    )
    best = max(ratios, key=lambda t: t[1])
    for name, r in ratios:  # prefer 11 over 22 over 12 on exact ties
        if r >= 1.0 and r == best[1]:
            return name
    return None


def cdm_damage_evolution(k, x, e, g_f, l_c):
    """Damage after initiation at stress ratio k = effective stress / strength.

    d = 1 - (1/k) * exp(-2 * U0 * l_c * (k - 1) / (g_f - U0 * l_c)) with
    U0 = x**2 / (2 e), the elastic energy density at initiation.  Requires
    k >= 1 and the admissibility margin g_f - U0 * l_c > 0; the result is 0
    at k = 1 and increases monotonically toward 1.
    """
    k = np.asarray(k, dtype=float)
    if np.any(k < 1.0):
        raise ValueError("stress ratio k must be >= 1 at and after initiation")
    u0 = np.asarray(x, dtype=float) ** 2 / (2.0 * np.asarray(e, dtype=float))
    margin = np.asarray(g_f, dtype=float) - u0 * l_c
    if np.any(margin <= 0.0):
        raise AdmissibilityError(
            "fracture energy does not exceed the elastic energy over one "
            "characteristic length; damage law would not soften"
        )
    out = 1.0 - (1.0 / k) * np.exp(-2.0 * u0 * l_c * (k - 1.0) / margin)
    return float(out) if out.ndim == 0 else out


def cdm_shear_damage(k12, alpha12, d12_max=1.0):
    """Logarithmic shear damage alpha12 * ln(k12), clamped to [0, d12_max]."""
    k12 = np.asarray(k12, dtype=float)
    if np.any(k12 < 1.0):
        raise ValueError("shear stress ratio k12 must be >= 1 at and after initiation")
    out = np.clip(alpha12 * np.log(k12), 0.0, d12_max)
    return float(out) if out.ndim == 0 else out


def cdm_shear_hardening(eps12_p, sigma_y, c, p):
    """Matrix shear flow stress sigma_y + c * eps12_p**p."""
    eps12_p = np.asarray(eps12_p, dtype=float)
    if np.any(eps12_p < 0.0):
        raise ValueError("plastic shear strain must be nonnegative")
    out = sigma_y + c * eps12_p**p
    return float(out) if out.ndim == 0 else out


def _czm_lengths(k, t0, gc):
    delta0 = np.asarray(t0, dtype=float) / np.asarray(k, dtype=float)
    delta_f = 2.0 * np.asarray(gc, dtype=float) / np.asarray(t0, dtype=float)
    if np.any(delta_f <= delta0):
        raise AdmissibilityError(
            "cohesive failure separation does not exceed the initiation "
            "separation; triangular law is degenerate"
        )
    return delta0, delta_f


def czm_traction(delta, k, t0, gc, delta_max=None):
    """Triangular traction-separation law with secant unloading.

    Rising branch k * delta up to the initiation separation t0 / k, then a
    linear descent reaching zero at 2 * gc / t0 (so the enclosed area is gc).
    If delta_max (the largest separation seen so far) exceeds delta, the
    point unloads along the secant through the origin at its damaged
    stiffness.
    """
    delta = np.asarray(delta, dtype=float)
    if np.any(delta < 0.0):
        raise ValueError("separation must be nonnegative")
    delta0, delta_f = _czm_lengths(k, t0, gc)

    def envelope(d):
        rising = k * d
        descending = t0 * (d - delta_f) / (delta0 - delta_f)
        return np.where(
            d <= delta0, rising, np.where(d >= delta_f, 0.0, descending)
        )

    if delta_max is None:
        out = envelope(delta)
    else:
        dmax = np.maximum(np.asarray(delta_max, dtype=float), delta)
        secant = np.where(dmax > 0.0, envelope(dmax) / np.where(dmax > 0.0, dmax, 1.0), k)
        out = secant * delta
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def czm_initiation(t_n, t_s, t_t, t0_n, t0_s, t0_t):
    """Quadratic stress initiation; compressive normal traction does not count.

    Returns True where (<t_n>/t0_n)^2 + (t_s/t0_s)^2 + (t_t/t0_t)^2 >= 1.
    """
    q = (
        (macaulay(t_n) / t0_n) ** 2
        + (np.asarray(t_s, dtype=float) / t0_s) ** 2
        + (np.asarray(t_t, dtype=float) / t0_t) ** 2
    )
    out = q >= 1.0
    return bool(out) if np.ndim(out) == 0 else out


def bk_mixed_mode_gc(g_i, g_ii, g_iii, gc_i, gc_ii, exponent):
    """Mixed-mode toughness: gc_i + (gc_ii - gc_i) * shear_fraction**exponent.

    shear_fraction is (g_ii + g_iii) / (g_i + g_ii + g_iii) built from the
    current energy release rates, which must be nonnegative with a positive
    total.
    """
    g_i = np.asarray(g_i, dtype=float)
    g_ii = np.asarray(g_ii, dtype=float)
    g_iii = np.asarray(g_iii, dtype=float)
    if np.any(g_i < 0.0) or np.any(g_ii < 0.0) or np.any(g_iii < 0.0):
        raise ValueError("energy release rates must be nonnegative")
    total = g_i + g_ii + g_iii
    if np.any(total <= 0.0):
        raise ValueError("total energy release rate must be positive")
    frac = (g_ii + g_iii) / total
    out = gc_i + (gc_ii - gc_i) * frac**exponent
    return float(out) if out.ndim == 0 else out
