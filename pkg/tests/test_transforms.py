from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.stats import kstest

from urnflow.ggdist import GGParams, gg_density
from urnflow.pmf import ExactPmf
from urnflow.rng import make_rng
from urnflow.stats import dkw_band, pmf_chi_square
from urnflow.transforms import (
    EquilibriumLaw, chain_laws, coupling_chain, equilibrium_cdf, gg_fixed_point_check, maximal_coupling,
    maximal_coupling_given, power_bias_pmf, tv_distance,
)
from urnflow.urns import UrnSpec, mu_n, urn_exact_pmf

F = Fraction
HALF = ExactPmf(1, (F(1, 2), F(1, 2)))


def _random_pmf(rng, size=None, offset=None):
    size = size or int(rng.integers(1, 12))
    offset = int(rng.integers(1, 6)) if offset is None else offset
    mass = rng.random(size)
    return ExactPmf(offset, mass / mass.sum())


# -- power bias ------------------------------------------------------------------

@pytest.mark.parametrize("r,expected", [(1, {1: F(1, 3), 2: F(2, 3)}), (2, {1: F(1, 5), 2: F(4, 5)})])
def test_power_bias_examples(r, expected):
    assert power_bias_pmf(HALF, r).as_dict() == expected


@pytest.mark.parametrize("r", [1, 2, 5])
def test_power_bias_point_mass(r):
    assert power_bias_pmf(ExactPmf.point(4), r).as_dict() == {4: 1}


def test_power_bias_all_mass_at_zero():
    with pytest.raises(ValueError):
        power_bias_pmf(ExactPmf.point(0), 1)
    with pytest.raises(ValueError):
        power_bias_pmf(ExactPmf(0, np.ones(1)), 2)


def test_power_bias_negative_support():
    with pytest.raises(ValueError):
        power_bias_pmf(ExactPmf(-1, (F(1, 2), F(1, 2))), 1)


@pytest.mark.parametrize("r,s", [(1, 1), (1, 2), (2, 3)])
def test_power_bias_composes(r, s):
    p = urn_exact_pmf(UrnSpec(0, 1, 1, 6), exact=True)
    assert power_bias_pmf(power_bias_pmf(p, r), s).as_dict() == power_bias_pmf(p, r + s).as_dict()


def test_power_bias_preserves_normalization_and_support(rng):
    for _ in range(10):
        p = _random_pmf(rng)
        q = power_bias_pmf(p, 3)
        assert abs(q.total() - 1) < 1e-12
        assert set(q.support) <= set(p.support)


# -- equilibrium law ------------------------------------------------------------------

def test_equilibrium_uniform_case():
    e = EquilibriumLaw(ExactPmf.point(1), 1, 1)
    t = np.linspace(0, 1, 11)
    np.testing.assert_allclose(e.cdf(t), t, atol=1e-15)


def test_equilibrium_example():
    assert equilibrium_cdf(EquilibriumLaw(HALF, 1, 1), 1.0) == pytest.approx(2 / 3, abs=1e-15)


def test_equilibrium_limits(rng):
    for _ in range(10):
        p = _random_pmf(rng)
        e = EquilibriumLaw(p, int(rng.integers(1, 4)), int(rng.integers(1, 4)))
        top = p.offset + len(p) - 1
        assert e.cdf(0.0) == 0.0 and e.cdf(-1.0) == 0.0
        assert e.cdf(top) == pytest.approx(1.0, abs=1e-12)
        assert e.cdf(top + 5.0) == pytest.approx(1.0, abs=1e-12)
        t = np.linspace(0, top, 400)
        assert np.all(np.diff(e.cdf(t)) >= -1e-15)


def test_equilibrium_continuous(rng):
    e = EquilibriumLaw(_random_pmf(rng, 6), 2, 2)
    t = np.linspace(0.01, 6, 2000)
    assert np.max(np.abs(np.diff(e.cdf(t)))) < 0.01


def test_equilibrium_renewal_mean(rng):
    for _ in range(20):
        p = _random_pmf(rng)
        e = EquilibriumLaw(p, 1, 1)
        top = p.offset + len(p) - 1
        mean = quad(lambda t: 1 - e.cdf(t), 0, top, limit=200, points=list(p.support), epsabs=1e-13)[0]
        expected = float(p.moment(2)) / (2 * float(p.mean()))
        assert mean == pytest.approx(expected, abs=1e-10)
        assert e.mean() == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("k,r", [(1, 1), (2, 1), (1, 2), (3, 2)])
def test_equilibrium_moment_identity(k, r, rng):
    p = _random_pmf(rng, 8)
    e = EquilibriumLaw(p, k, r)
    top = p.offset + len(p) - 1
    lhs = quad(lambda t: r * t ** (r - 1) * (1 - e.cdf(t)), 0, top, limit=200,
               points=list(p.support), epsabs=1e-13)[0]
    rhs = k / (k + r) * float(e.biased.as_float().moment(r))
    assert lhs == pytest.approx(rhs, abs=1e-8)


def test_equilibrium_sampler_matches_cdf(rng):
    e = EquilibriumLaw(_random_pmf(rng, 5), 2, 1)
    assert kstest(e.sample(rng, 50_000), e.cdf).pvalue > 0.01


def test_equilibrium_invalid():
    with pytest.raises(ValueError):
        EquilibriumLaw(HALF, 0, 1)


# -- fixed point of the transform -----------------------------------------------------------

@pytest.mark.parametrize("k,r", [(1, 1), (2, 2), (3, 1), (1, 3)])
def test_fixed_point_within_dkw(k, r, rng):
    m = 100_000
    assert gg_fixed_point_check(GGParams(k, r), m, rng) < dkw_band(m, 0.01)


def test_dkw_band_value():
    assert dkw_band(100_000, 0.01) == pytest.approx(0.005147, abs=1e-6)


@pytest.mark.parametrize("k,r", [(1, 1), (2, 2), (3, 2), (5, 4)])
def test_bias_of_gg_is_gg(k, r):
    x = np.linspace(0.01, 4, 500)
    p, q = GGParams(k, r), GGParams(k + r, r)
    lhs = gg_density(p, x) * x**r / (k / r)
    assert np.max(np.abs(lhs - gg_density(q, x))) < 1e-12


def test_fixed_point_rejects_empty(rng):
    with pytest.raises(ValueError):
        gg_fixed_point_check(GGParams(1, 1), 0, rng)


# -- maximal coupling ---------------------------------------------------------------------------

def test_coupling_identical(rng):
    p = _random_pmf(rng, 6)
    x, y = maximal_coupling(p, p, rng, 10_000)
    assert np.all(x == y)


def test_coupling_disjoint(rng):
    x, y = maximal_coupling(ExactPmf.point(0), ExactPmf.point(1), rng, 1000)
    assert np.all(x == 0) and np.all(y == 1)
    assert tv_distance(ExactPmf.point(0), ExactPmf.point(1)) == 1


def test_coupling_example(rng):
    p = ExactPmf(0, (F(1, 2), F(1, 2)))
    q = ExactPmf(0, (F(1, 4), F(3, 4)))
    assert tv_distance(p, q) == F(1, 4)
    m = 10**6
    x, y = maximal_coupling(p, q, rng, m)
    assert abs(np.mean(x != y) - 0.25) < 5 * np.sqrt(0.25 * 0.75 / m)
    assert pmf_chi_square(x, p) > 0.01
    assert pmf_chi_square(y, q) > 0.01


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32))
def test_coupling_marginals_random(seed):
    rng = make_rng(seed)
    p, q = _random_pmf(rng, 6, 2), _random_pmf(rng, 5, 3)
    x, y = maximal_coupling(p, q, rng, 40_000)
    d = float(tv_distance(p, q))
    assert abs(np.mean(x != y) - d) < 6 * np.sqrt(max(d * (1 - d), 1e-4) / 40_000)
    assert pmf_chi_square(x, p) > 1e-4
    assert pmf_chi_square(y, q) > 1e-4


def test_coupling_given_marginal(rng):
    p, q = _random_pmf(rng, 6, 2), _random_pmf(rng, 6, 3)
    x = p.sample(rng, 200_000)
    y = maximal_coupling_given(p, q, x, rng)
    assert pmf_chi_square(y, q) > 0.01
    assert abs(np.mean(x != y) - float(tv_distance(p, q))) < 0.01


def test_coupling_given_outside_support(rng):
    with pytest.raises(ValueError):
        maximal_coupling_given(HALF, HALF, np.array([7]), rng)


# -- coupling chain ------------------------------------------------------------------------------

def test_chain_marginals():
    j, l, n = 1, 1, 10
    res = coupling_chain(j, l, n, sample_size=10**6, seed=3, keep_samples=True)
    w_law = urn_exact_pmf(UrnSpec(1, j, l, n))
    assert pmf_chi_square(res.samples["W"], w_law) > 0.01
    star = EquilibriumLaw(w_law, j, l + 1)
    assert kstest(res.samples["W_star"][:200_000], star.cdf).pvalue > 0.01
    assert kstest(res.samples["V"][:200_000], lambda t: np.clip(t, 0, 1) ** j).pvalue > 0.01


@pytest.mark.parametrize("j,l,n", [(2, 1, 12), (1, 2, 15), (3, 3, 20)])
def test_chain_marginals_other(j, l, n):
    res = coupling_chain(j, l, n, sample_size=200_000, seed=5, keep_samples=True)
    w_law = urn_exact_pmf(UrnSpec(1, j, l, n))
    assert pmf_chi_square(res.samples["W"], w_law) > 0.01
    assert pmf_chi_square(res.samples["W_bias"], power_bias_pmf(w_law, l + 1)) > 0.01
    assert kstest(res.samples["W_star"], EquilibriumLaw(w_law, j, l + 1).cdf).pvalue > 0.01


def test_chain_degenerate_beta():
    n = 20
    top = 1 + n + 1
    res = coupling_chain(1, 1, n, beta=top / mu_n(1, 1, n), sample_size=20_000, seed=0)
    assert res.exceedance == 0.0


def test_chain_deterministic():
    a = coupling_chain(2, 1, 30, sample_size=50_000, seed=9)
    b = coupling_chain(2, 1, 30, sample_size=50_000, seed=9)
    assert a == b


def test_chain_block_size_invariance():
    a = coupling_chain(1, 1, 40, sample_size=50_000, seed=2, block=10_000)
    b = coupling_chain(1, 1, 40, sample_size=50_000, seed=2, block=10_000)
    assert a.exceedance == b.exceedance


def test_chain_record_fields():
    rec = coupling_chain(1, 1, 16, sample_size=1000, seed=4).record()
    assert set(rec) == {"n", "beta", "exceedance", "stderr", "seed"}


@pytest.mark.parametrize("args", [(0, 1, 5), (1, 0, 5), (1, 2, 2)])
def test_chain_invalid(args):
    with pytest.raises(ValueError):
        coupling_chain(*args, sample_size=10)


def test_chain_laws_tv_small():
    assert chain_laws(1, 1, 4096).t_law.tv_distance(chain_laws(1, 1, 4096).biased) < 0.05


def _exceedance_slope(ns, sample_size=400_000):
    ex = [coupling_chain(1, 1, n, sample_size=sample_size, seed=i).exceedance for i, n in enumerate(ns)]
    return np.polyfit(np.log(ns), np.log(ex), 1)[0]


def test_exceedance_slope_full_grid():
    slope = _exceedance_slope([2**e for e in range(6, 14)])
    assert abs(slope + 0.5) <= 0.15, f"slope {slope:.3f}"


def test_exceedance_slope_tail():
    slope = _exceedance_slope([2**e for e in range(9, 14)])
    assert abs(slope + 0.5) <= 0.15, f"slope {slope:.3f}"
