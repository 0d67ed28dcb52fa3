import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from urnflow.ggdist import GGParams, bound_constants, gg_cdf, gg_density, gg_mass, gg_potential
from urnflow.pmf import ExactPmf
from urnflow.rng import make_rng
from urnflow.stein import (
    AUDIT_TOL, RESIDUAL_TOL, Constant, Generic, Indicator, Ramp, bound_audit, characterization_residual,
    clean_grid, equilibrium_identity_check, g_eval, kappas, kappas_quad, perturbation_bound, ramp_mean,
    stein_solve, thm5_bound,
)
from urnflow.urns import UrnSpec, raw_moments, scale_for_moment, urn_exact_pmf

GRID = np.linspace(0.01, 6.0, 1000)
FAMILIES = {"kappa_f", "kappa_fprime", "uniform_f", "uniform_Bf", "uniform_fprime", "f_sup", "perturbation",
            "g_sup", "g_sup_max", "smoothing", "concentration", "batir_lower", "batir_upper", "wendel_lower",
            "wendel_upper", "mode_height_M", "inverse_mode_Mprime"}


# -- test functions ------------------------------------------------------------------

@pytest.mark.parametrize("k,r", [(1, 1), (2, 2), (3, 1), (2, 3)])
@pytest.mark.parametrize("s,eps", [(0.5, 0.1), (1.0, 0.5), (-0.05, 0.1), (2.0, 0.02)])
def test_ramp_mean_matches_quadrature(k, r, s, eps):
    p = GGParams(k, r)
    h = Ramp(s, eps)
    direct = integrate.quad(lambda z: float(h(z)) * gg_density(p, z), 0, 30, points=[max(s, 1e-9), s + eps],
                            limit=200, epsabs=1e-13)[0]
    assert h.mean(p) == pytest.approx(direct, abs=1e-12)
    assert ramp_mean(p, np.array([s]), eps)[0] == pytest.approx(direct, abs=1e-12)
    x = np.array([0.3, 1.0, 2.5])
    np.testing.assert_allclose(h.lower_mass(p, x) + h.upper_mass(p, x), direct, atol=1e-12)


def test_ramp_rejects_width():
    with pytest.raises(ValueError):
        Ramp(1.0, 0.0)


def test_indicator_masses():
    p = GGParams(2, 2)
    h = Indicator(1.0)
    assert h.mean(p) == pytest.approx(1 - math.exp(-1), abs=1e-14)
    x = np.array([0.5, 2.0])
    np.testing.assert_allclose(h.lower_mass(p, x) + h.upper_mass(p, x), h.mean(p), atol=1e-15)
    assert h.sup_centered(p) == pytest.approx(1 - math.exp(-1), abs=1e-14)


def test_generic_needs_bound():
    h = Generic(lambda x: np.sin(x))
    with pytest.raises(ValueError):
        h.sup_centered(GGParams(1, 1))


# -- Stein solutions ----------------------------------------------------------------------

def test_constant_gives_zero():
    sol = stein_solve(GGParams(2, 2), Constant(3.0))
    assert np.all(sol.f(GRID) == 0)
    assert np.all(sol.htilde(GRID) == 0)
    assert np.all(g_eval(sol, GRID) == 0)


@pytest.mark.parametrize("t", [0.3, 1.0, 2.5])
def test_exponential_indicator_closed_form(t):
    sol = stein_solve(GGParams(1, 1), Indicator(t))
    x = GRID
    expected = np.where(x <= t, np.expm1(x) * math.exp(-t), 1 - math.exp(-t))
    np.testing.assert_allclose(sol.f(x), expected, rtol=1e-12, atol=1e-14)
    assert sol.residual(x) < RESIDUAL_TOL


def test_ramp_residual_gg22():
    sol = stein_solve(GGParams(2, 2), Ramp(1.0, 0.1))
    x = np.linspace(0.01, 4.0, 1000)
    assert sol.residual(x) < RESIDUAL_TOL


@pytest.mark.parametrize("k,r", [(1, 1), (2, 2), (6, 6), (6, 1), (1, 6), (3, 1.5)])
@pytest.mark.parametrize("h", [Indicator(0.7), Indicator(1.3), Ramp(0.4, 0.05), Ramp(0.9, 0.5)])
def test_residual_small(k, r, h):
    sol = stein_solve(GGParams(k, r), h)
    assert sol.residual(np.linspace(0.01, 3.0, 600)) < RESIDUAL_TOL


@pytest.mark.parametrize("k,r", [(1, 1), (2, 2), (3, 2)])
@pytest.mark.parametrize("h", [Indicator(0.8), Ramp(0.6, 0.3)])
def test_closed_form_matches_quadrature(k, r, h):
    p = GGParams(k, r)
    closed = stein_solve(p, h)
    generic = stein_solve(p, Generic(h, h.breakpoints, bound=1.0))
    assert not generic.closed_form
    x = np.array([0.05, 0.4, 0.75, 0.85, 1.2, 2.0, 3.0])
    np.testing.assert_allclose(generic.f(x), closed.f(x), atol=1e-9)


def test_generic_residual():
    p = GGParams(2, 2)
    sol = stein_solve(p, Generic(lambda x: np.exp(-x) * np.cos(3 * x), bound=2.0))
    assert sol.residual(np.linspace(0.05, 3.0, 40)) < RESIDUAL_TOL


def test_f_requires_positive_x():
    sol = stein_solve(GGParams(1, 1), Indicator(1.0))
    with pytest.raises(ValueError):
        sol.f(0.0)
    with pytest.raises(ValueError):
        g_eval(sol, np.array([-1.0, 1.0]))
    with pytest.raises(ValueError):
        g_eval(sol, 1.0, form="36")


def test_solution_accepts_potential():
    pot = gg_potential(GGParams(2, 2))
    sol = stein_solve(pot, Indicator(1.0))
    assert sol.params == GGParams(2, 2)


def test_solution_bounded_at_zero():
    sol = stein_solve(GGParams(3, 2), Indicator(1.0))
    assert abs(sol.f(1e-8)) < 1e-6


# -- kappas -------------------------------------------------------------------------------------

def test_kappas_exponential():
    ka, kb = kappas(GGParams(1, 1), GRID)
    np.testing.assert_allclose(ka, np.expm1(GRID), rtol=1e-12)
    np.testing.assert_allclose(kb, 1.0, rtol=1e-12)


@pytest.mark.parametrize("k,r", [(1, 2), (2, 2), (3, 1), (4, 3)])
def test_kappas_match_quadrature(k, r):
    p = GGParams(k, r)
    for x in (0.05, 0.5, 1.0, 2.0):
        ka, kb = kappas(p, x)
        qa, qb = kappas_quad(p, x)
        assert ka == pytest.approx(qa, rel=1e-9)
        assert kb == pytest.approx(qb, rel=1e-9)


@pytest.mark.parametrize("k,r", [(1, 1), (2, 2), (3, 1), (5, 4)])
def test_kappa_monotonicity_and_bound(k, r):
    p = GGParams(k, r)
    pot = gg_potential(p)
    x = np.linspace(1e-4, 4.0, 2000)
    ka, kb = kappas(p, x)
    assert kappas(p, 1e-12)[0] < 1e-9
    left, right = x < pot.x0, x > pot.x0
    assert np.all(np.diff(ka[left]) >= -1e-12 * ka[left][1:])
    assert np.all(np.diff(kb[right]) <= 1e-12 * kb[right][1:])
    assert np.all(pot.Bprime(x[right]) * kb[right] <= 1 + 1e-12)


# -- g function -------------------------------------------------------------------------------------

@pytest.mark.parametrize("k,r", [(2, 2), (1, 1), (3, 2)])
@pytest.mark.parametrize("h", [Indicator(1.0), Ramp(0.5, 0.3)])
def test_g_forms_agree(k, r, h):
    sol = stein_solve(GGParams(k, r), h)
    x = clean_grid(np.linspace(0.01, 4.0, 1000), h.breakpoints)
    assert len(x) > 900
    diff = g_eval(sol, x, "35") - g_eval(sol, x, "34")
    assert np.max(np.abs(diff)) < 1e-6


def test_clean_grid_drops_breakpoints():
    x = clean_grid(np.array([1e-6, 0.5, 1.0, 1.00001, 2.0]), (1.0,))
    assert list(x) == [0.5, 2.0]


# -- characterization -------------------------------------------------------------------------------

def _bump_family(seed):
    rng = make_rng(seed)
    coef = rng.normal(size=4)
    c, w = rng.uniform(0.3, 2.0), rng.uniform(0.3, 1.0)

    def f(x):
        return x * np.polyval(coef, x) * np.exp(-((x - c) / w) ** 2)

    def fprime(x):
        poly = np.polyval(coef, x)
        dpoly = np.polyval(np.polyder(coef), x)
        bump = np.exp(-((x - c) / w) ** 2)
        return (poly + x * dpoly - x * poly * 2 * (x - c) / w**2) * bump

    return f, fprime


@pytest.mark.parametrize("k,r", [(1, 1), (2, 2), (3, 1), (2, 3)])
@pytest.mark.parametrize("seed", range(20))
def test_characterization(k, r, seed):
    f, fprime = _bump_family(seed)
    assert abs(characterization_residual(GGParams(k, r), f, fprime)) < 1e-7


def test_characterization_detects_wrong_law():
    f, fprime = _bump_family(0)
    p, q = GGParams(1, 1), GGParams(3, 1)
    pot = gg_potential(q)
    val = integrate.quad(lambda z: (fprime(z) - float(pot.Bprime(z)) * f(z)) * gg_density(p, z), 0, 40)[0]
    assert abs(val) > 1e-3


# -- equilibrium identity ------------------------------------------------------------------------------

def _scaled_urn(j, l, n):
    law = urn_exact_pmf(UrnSpec(1, j, l, n))
    scale = scale_for_moment(raw_moments(UrnSpec(1, j, l, n), l + 1)[-1], j, l + 1)
    return law, scale


@pytest.mark.parametrize("j,l,n", [(1, 1, 10), (2, 1, 25), (1, 2, 30), (3, 2, 12)])
def test_identity_linear_f(j, l, n):
    law, scale = _scaled_urn(j, l, n)
    chk = equilibrium_identity_check(j, l + 1, law, lambda x: x, lambda x: np.full(np.shape(x), float(j)), scale)
    assert chk.left == pytest.approx(j, abs=1e-12)
    assert chk.right == pytest.approx(j, abs=1e-9)


def test_identity_zero_f():
    law, scale = _scaled_urn(1, 1, 8)
    zero = lambda x: np.zeros(np.shape(x))
    chk = equilibrium_identity_check(1, 2, law, lambda x: 0.0, zero, scale)
    assert chk.left == 0 and chk.right == 0 and chk.rel_diff == 0


@pytest.mark.parametrize("k,r", [(1, 1), (2, 2), (3, 2)])
def test_identity_gg_smooth(k, r):
    def f(x):
        return np.sin(x) * x / (1 + x**2)

    def g(x):
        x = np.asarray(x, dtype=float)
        fp = (np.cos(x) * x + np.sin(x)) / (1 + x**2) - np.sin(x) * x * 2 * x / (1 + x**2) ** 2
        return fp + (k - 1) * f(x) / x

    chk = equilibrium_identity_check(k, r, GGParams(k, r), f, g)
    assert chk.rel_diff < 1e-6


@pytest.mark.parametrize("j,l,n", [(1, 1, 12), (2, 1, 20)])
def test_identity_with_stein_solution(j, l, n):
    law, scale = _scaled_urn(j, l, n)
    p = GGParams(j, l + 1)
    h = Ramp(0.8, 0.3)
    sol = stein_solve(p, h)
    chk = equilibrium_identity_check(j, l + 1, law, sol.f, sol.g, scale, breaks=h.breakpoints)
    assert chk.rel_diff < 1e-6


def test_identity_moment_precondition():
    law = urn_exact_pmf(UrnSpec(1, 1, 1, 6))
    with pytest.raises(ValueError):
        equilibrium_identity_check(1, 2, law, lambda x: x, lambda x: 1.0, 1.0)


# -- explicit bound ------------------------------------------------------------------------------------

def test_bound_example():
    assert thm5_bound(1, 1, 0.1, 1.0, 0.0) == pytest.approx(1.4, abs=1e-12)


def test_bound_vanishes():
    assert thm5_bound(2, 2, 1e-12, 1.0, 0.0) < 1e-10


@pytest.mark.parametrize("k,r", [(1, 1), (2, 2), (1, 1.5), (3, 4)])
def test_bound_monotone(k, r):
    betas = np.linspace(0.01, 1, 25)
    excs = np.linspace(0, 1, 25)
    vals = np.array([[thm5_bound(k, r, b, 0.9, e) for e in excs] for b in betas])
    assert np.all(np.diff(vals, axis=0) > 0)
    assert np.all(np.diff(vals, axis=1) > 0)


def test_bound_fractional_branch():
    k, r, b, ew, e = 2, 1.5, 0.2, 0.8, 0.01
    m, mp = bound_constants(GGParams(k, r))
    expected = b * (10 * m + 4 * r * ew) + 2 * r * b ** (r - 1) * mp + 4 * (2 + (r + k - 1) * mp) * e
    assert thm5_bound(k, r, b, ew, e) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("args", [(1, 1, 0.0, 1, 0), (1, 1, 1.5, 1, 0), (0.5, 1, 0.1, 1, 0), (1, 1, 0.1, 1, 2)])
def test_bound_invalid(args):
    with pytest.raises(ValueError):
        thm5_bound(*args)


@settings(max_examples=60, deadline=None)
@given(k=st.integers(1, 6), r=st.sampled_from([1, 1.5, 2, 3]), beta=st.floats(0.001, 1), x=st.floats(0.01, 5))
def test_perturbation_bound_positive(k, r, beta, x):
    assert perturbation_bound(k, r, x, beta, 1.0) > 0


# -- audit ----------------------------------------------------------------------------------------------

@pytest.mark.parametrize("k,r", [(1, 1), (2, 2), (3, 1.5), (2, 3), (4, 1)])
def test_small_audit(k, r):
    report = bound_audit(k, r, points=400, n_ind=10, n_ramp=10)
    assert set(report.entries) == FAMILIES
    bad = {name: e.max_ratio for name, e in report.entries.items() if not e.ok}
    assert not bad
    assert report.max_residual < RESIDUAL_TOL
    assert report.ok
    data = json.loads(report.to_json())
    assert data["ok"] and set(data["inequalities"]) == FAMILIES


def test_audit_fprime_bound_gg22():
    report = bound_audit(2, 2, points=600, n_ind=20, n_ramp=20)
    assert report.entries["uniform_fprime"].max_ratio <= 1 + AUDIT_TOL
    assert report.entries["uniform_fprime"].checks > 0


@pytest.mark.parametrize("k,r", [(1, 1), (2, 2), (4, 3)])
def test_concentration_for_target(k, r):
    p = GGParams(k, r)
    mode = gg_potential(p).mode_height
    s = np.linspace(0, 4, 300)
    for eps in (0.01, 0.1, 1.0):
        assert np.all(gg_mass(p, s, s + eps) <= mode * eps * (1 + 1e-12))


def test_discretization_dk_bounded_by_mode_height():
    from urnflow.stats import dk_discrete_vs_gg
    p = GGParams(1, 1)
    for delta in (0.1, 0.01):
        edges = np.arange(0, 40 / delta + 1) * delta
        mass = np.diff(gg_cdf(p, edges))
        pmf = ExactPmf(1, mass / mass.sum())
        assert dk_discrete_vs_gg(pmf, 1 / delta, p) <= gg_potential(p).mode_height * delta
