import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate
from scipy.special import gammainc, gammaincc

from urnflow.ggdist import (
    GGParams, batir_gamma_bounds, bound_constants, gammainc_p, gammainc_q, gg_cdf, gg_density, gg_kappa_a,
    gg_kappa_b, gg_mass, gg_moment, gg_potential, gg_sample, gg_sf, gg_upper_cutoff, wendel_bounds, wendel_ratio,
)
from urnflow.stats import dkw_band, ks_statistic

GRID = [(k, r) for k in range(1, 7) for r in range(1, 7)]


@pytest.mark.parametrize("k,r,x,want", [
    (1, 1, 2.0, math.exp(-2.0)),
    (2, 2, 1.0, 2.0 * math.exp(-1.0)),
    (1, 2, 1e-12, 2.0 / math.sqrt(math.pi)),
])
def test_density_values(k, r, x, want):
    assert gg_density(GGParams(k, r), x) == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("x", [0.0, -1.0, math.inf, math.nan])
def test_density_domain(x):
    with pytest.raises(ValueError):
        gg_density(GGParams(1, 1), x)


def test_params_must_be_positive():
    with pytest.raises(ValueError):
        GGParams(0, 1)
    with pytest.raises(ValueError):
        GGParams(1, -2)


@pytest.mark.parametrize("t", [0.1, 0.5, 1.0, 2.0, 4.0])
def test_cdf_rayleigh_closed_form(t):
    assert gg_cdf(GGParams(2, 2), t) == pytest.approx(1.0 - math.exp(-t * t), abs=1e-14)


def test_cdf_limits():
    assert gg_cdf(GGParams(1, 1), 0.0) == 0.0
    assert gg_cdf(GGParams(1, 1), -3.0) == 0.0
    assert gg_cdf(GGParams(1, 2), 50.0) == 1.0
    assert gg_sf(GGParams(1, 2), -1.0) == 1.0


@settings(max_examples=100, deadline=None)
@given(k=st.floats(0.2, 12.0), r=st.floats(0.3, 8.0), x=st.floats(1e-3, 6.0))
def test_power_identity_against_gamma_cdf(k, r, x):
    p = GGParams(k, r)
    assert gg_cdf(p, x) == pytest.approx(gammainc(k / r, x**r), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(a=st.floats(0.1, 30.0), x=st.floats(1e-4, 200.0))
def test_incomplete_gamma_matches_reference(a, x):
    assert gammainc_p(a, x) == pytest.approx(gammainc(a, x), abs=1e-13)
    q = gammaincc(a, x)
    assert gammainc_q(a, x) == pytest.approx(q, rel=1e-10, abs=1e-300)


def test_tail_survival_has_no_cancellation():
    assert gg_sf(GGParams(1, 1), 700.0) == pytest.approx(math.exp(-700.0), rel=1e-12)


@pytest.mark.parametrize("k,r", GRID)
def test_normalization(k, r):
    p = GGParams(k, r)
    total, _ = integrate.quad(lambda x: gg_density(p, x), 0.0, gg_upper_cutoff(p), epsabs=1e-13, limit=200)
    assert total == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("k,r,l,want", [
    (3, 2, 2, 1.5), (1, 1, 0, 1.0), (2, 2, 1, math.sqrt(math.pi) / 2.0),
])
def test_moment_values(k, r, l, want):
    assert gg_moment(GGParams(k, r), l) == pytest.approx(want, rel=1e-14)


def test_moment_domain():
    with pytest.raises(ValueError):
        gg_moment(GGParams(2, 1), -2.0)


@pytest.mark.parametrize("k,r", [(1, 1), (2, 3), (4, 2), (6, 6)])
@pytest.mark.parametrize("l", [1, 2, 3])
def test_moment_matches_quadrature(k, r, l):
    p = GGParams(k, r)
    q, _ = integrate.quad(lambda x: x**l * gg_density(p, x), 0.0, gg_upper_cutoff(p, 1e-16), epsabs=1e-13, limit=200)
    assert gg_moment(p, l) == pytest.approx(q, rel=1e-6)


def test_exponential_sample_mean(rng):
    x = gg_sample(GGParams(1, 1), rng, 1_000_000)
    assert abs(x.mean() - 1.0) < 3.0 / math.sqrt(1e6)


def test_rayleigh_second_moment(rng):
    x = gg_sample(GGParams(2, 2), rng, 1_000_000)
    assert abs((x**2).mean() - 1.0) < 4.0 * math.sqrt(1.0 / 1e6)


def test_sample_ks_inside_band(rng):
    p = GGParams(3, 3)
    assert ks_statistic(gg_sample(p, rng, 100_000), lambda t: gg_cdf(p, t)) < dkw_band(100_000)


def test_sample_is_deterministic():
    from urnflow.rng import make_rng
    a = gg_sample(GGParams(2, 3), make_rng(7, 1), 100)
    b = gg_sample(GGParams(2, 3), make_rng(7, 1), 100)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("k,r,x0,mode", [
    (1, 1, 0.0, 1.0),
    (2, 2, 1.0 / math.sqrt(2.0), 2.0 / math.sqrt(2.0) * math.exp(-0.5)),
])
def test_potential_values(k, r, x0, mode):
    pot = gg_potential(GGParams(k, r))
    assert pot.x0 == pytest.approx(x0, abs=1e-15)
    assert pot.mode_height == pytest.approx(mode, rel=1e-12)


@pytest.mark.parametrize("k,r", GRID)
def test_potential_normalizes_and_mode_is_max(k, r):
    p = GGParams(k, r)
    pot = gg_potential(p)
    total, _ = integrate.quad(pot.density, 0.0, gg_upper_cutoff(p), epsabs=1e-13, limit=200)
    assert total == pytest.approx(1.0, abs=1e-10)
    x = np.linspace(1e-3, gg_upper_cutoff(p), 5000)
    assert np.max(gg_density(p, x)) <= pot.mode_height * (1 + 1e-12)


def test_potential_is_convex():
    pot = gg_potential(GGParams(3, 2))
    x = np.linspace(0.05, 4.0, 400)
    assert np.all(np.diff(pot.Bprime(x)) > 0)


@pytest.mark.parametrize("k,r", [(0.5, 1), (1, 0.5)])
def test_potential_needs_k_r_at_least_one(k, r):
    with pytest.raises(ValueError):
        gg_potential(GGParams(k, r))


def test_bound_constants_exponential():
    m, _ = bound_constants(GGParams(1, 1))
    assert m == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("k", range(1, 11))
@pytest.mark.parametrize("r", range(1, 11))
def test_mode_height_below_m(k, r):
    p = GGParams(k, r)
    m, m_prime = bound_constants(p)
    pot = gg_potential(p)
    assert pot.mode_height <= m + 1e-12
    assert math.exp(pot.B_x0) * math.gamma(k / r) / r <= m_prime + 1e-12


@pytest.mark.parametrize("i", range(1, 101))
def test_batir_and_wendel(i):
    x = 0.1 * i
    lo, hi = batir_gamma_bounds(x)
    assert lo <= math.gamma(x + 1.0) <= hi * (1 + 1e-12)
    for s in (0.0, 0.25, 0.5, 0.75, 1.0):
        wl, wu = wendel_bounds(x, s)
        assert wl * (1 - 1e-12) <= wendel_ratio(x, s) <= wu * (1 + 1e-12)


def test_kappa_exponential_closed_form():
    p = GGParams(1, 1)
    x = np.array([1e-6, 0.3, 1.0, 5.0, 40.0, 800.0])
    assert np.allclose(gg_kappa_b(p, x), 1.0, rtol=1e-13)
    assert np.allclose(gg_kappa_a(p, x[:-1]), np.expm1(x[:-1]), rtol=1e-12)


@pytest.mark.parametrize("k,r", [(3, 2), (2, 5), (6, 1)])
def test_kappa_matches_ratios(k, r):
    p = GGParams(k, r)
    x = np.linspace(0.05, 2.5, 50)
    assert np.allclose(gg_kappa_a(p, x), gg_cdf(p, x) / gg_density(p, x), rtol=1e-11)
    assert np.allclose(gg_kappa_b(p, x), gg_sf(p, x) / gg_density(p, x), rtol=1e-11)


def test_mass_of_interval():
    p = GGParams(1, 1)
    assert gg_mass(p, 1.0, 2.0) == pytest.approx(math.exp(-1) - math.exp(-2), rel=1e-14)
    assert gg_mass(p, 30.0, 31.0) == pytest.approx(math.exp(-30) - math.exp(-31), rel=1e-12)


def test_upper_cutoff():
    p = GGParams(2, 2)
    x = gg_upper_cutoff(p, 1e-14)
    assert gg_sf(p, x) < 1e-14 <= gg_sf(p, x * (1 - 1e-9))
