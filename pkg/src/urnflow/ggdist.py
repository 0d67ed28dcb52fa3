"""Generalized gamma distribution GG(k, r) and its Stein potential.

``Z ~ GG(k, r)`` means ``Z = X**(1/r)`` with ``X ~ Gamma(k/r, 1)``; the density is
``r x**(k-1) exp(-x**r) / Gamma(k/r)`` on ``x > 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

_EPS = 1e-17
_TINY = 1e-300
_MAX_ITER = 2000


@dataclass(frozen=True)
class GGParams:
    k: float
    r: float

    def __post_init__(self):
        if not (self.k > 0 and self.r > 0):
            raise ValueError(f"GG parameters must be positive, got k={self.k}, r={self.r}")

    @property
    def shape(self) -> float:
        """Gamma shape ``k/r`` of ``Z**r``."""
        return self.k / self.r


# -- regularized incomplete gamma -------------------------------------------

def _series_sum_scalar(a: float, x: float) -> float:
    term = total = 1.0
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) <= abs(total) * _EPS:
            break
    return total


def _cf_h_scalar(a: float, x: float) -> float:
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        d = _TINY if abs(d) < _TINY else d
        c = b + an / c
        c = _TINY if abs(c) < _TINY else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) <= 4e-16:
            break
    return h


def _series_sum(a: float, x: np.ndarray) -> np.ndarray:
    # P(a, x) = x^a e^-x / Gamma(a+1) * sum_n x^n / ((a+1)...(a+n))
    if x.size <= 8:
        return np.array([_series_sum_scalar(a, float(v)) for v in x.ravel()]).reshape(x.shape)
    term = np.ones_like(x)
    total = np.ones_like(x)
    active = np.ones(x.shape, dtype=bool)
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term = np.where(active, term * x / ap, term)
        total = np.where(active, total + term, total)
        active &= np.abs(term) > np.abs(total) * _EPS
        if not active.any():
            break
    return total


def _series_p(a: float, x: np.ndarray) -> np.ndarray:
    return _series_sum(a, x) * np.exp(a * np.log(x) - x - math.lgamma(a + 1.0))


def _cf_h(a: float, x: np.ndarray) -> np.ndarray:
    # Q(a, x) by the Legendre continued fraction, modified Lentz evaluation.
    if x.size <= 8:
        return np.array([_cf_h_scalar(a, float(v)) for v in x.ravel()]).reshape(x.shape)
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b = b + 2.0
        d_new = an * d + b
        d_new = np.where(np.abs(d_new) < _TINY, _TINY, d_new)
        c_new = b + an / c
        c_new = np.where(np.abs(c_new) < _TINY, _TINY, c_new)
        d_new = 1.0 / d_new
        delta = d_new * c_new
        d = np.where(active, d_new, d)
        c = np.where(active, c_new, c)
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) > 4e-16
        if not active.any():
            break
    return h


def _cf_q(a: float, x: np.ndarray) -> np.ndarray:
    return np.exp(a * np.log(x) - x - math.lgamma(a)) * _cf_h(a, x)


def gammainc_p(a: float, x) -> np.ndarray:
    """Regularized lower incomplete gamma ``P(a, x)``, vectorized in ``x``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape)
    pos = x > 0
    series = pos & (x < a + 1.0)
    cf = pos & ~series
    if series.any():
        out[series] = _series_p(a, x[series])
    if cf.any():
        out[cf] = 1.0 - _cf_q(a, x[cf])
    out[np.isposinf(x)] = 1.0
    return out


def gammainc_q(a: float, x) -> np.ndarray:
    """Regularized upper incomplete gamma ``Q(a, x) = 1 - P(a, x)`` without cancellation in the tail."""
    x = np.asarray(x, dtype=float)
    out = np.ones(x.shape)
    pos = x > 0
    series = pos & (x < a + 1.0)
    cf = pos & ~series & np.isfinite(x)
    if series.any():
        out[series] = 1.0 - _series_p(a, x[series])
    if cf.any():
        out[cf] = _cf_q(a, x[cf])
    out[np.isposinf(x)] = 0.0
    return out


# -- distribution functions --------------------------------------------------

def _scalar_or_array(values: np.ndarray, like):
    return float(values) if np.ndim(like) == 0 else values


def gg_log_density(p: GGParams, x):
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)) or np.any(xa <= 0):
        raise ValueError("density is defined for finite x > 0 only")
    out = math.log(p.r) - math.lgamma(p.shape) + (p.k - 1.0) * np.log(xa) - xa**p.r
    return _scalar_or_array(out, x)


def gg_density(p: GGParams, x):
    """``phi_{k,r}(x)``; raises ``ValueError`` for non-finite or non-positive ``x``."""
    return _scalar_or_array(np.exp(gg_log_density(p, x)), x)


def gg_cdf(p: GGParams, x):
    xa = np.asarray(x, dtype=float)
    u = np.where(xa > 0, np.abs(xa) ** p.r, 0.0)
    out = np.where(xa > 0, gammainc_p(p.shape, u), 0.0)
    return _scalar_or_array(out, x)


def gg_sf(p: GGParams, x):
    """Survival function ``1 - gg_cdf``, accurate far in the tail."""
    xa = np.asarray(x, dtype=float)
    u = np.where(xa > 0, np.abs(xa) ** p.r, 0.0)
    out = np.where(xa > 0, gammainc_q(p.shape, u), 1.0)
    return _scalar_or_array(out, x)


def gg_mass(p: GGParams, a, b):
    """``P[a < Z <= b]`` taking the difference on whichever side of the median is small."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ga, gb = np.asarray(gg_cdf(p, a)), np.asarray(gg_cdf(p, b))
    sa, sb = np.asarray(gg_sf(p, a)), np.asarray(gg_sf(p, b))
    out = np.where(gb <= 0.5, gb - ga, sa - sb)
    return np.maximum(out, 0.0)


def gg_moment(p: GGParams, l: float) -> float:
    """``E Z**l = Gamma((k+l)/r) / Gamma(k/r)`` for ``l > -k``."""
    if not l > -p.k:
        raise ValueError(f"moment of order {l} needs l > -k = {-p.k}")
    return math.exp(math.lgamma((p.k + l) / p.r) - math.lgamma(p.shape))


def gg_sample(p: GGParams, rng: np.random.Generator, size=None):
    return rng.gamma(p.shape, 1.0, size=size) ** (1.0 / p.r)


def gg_kappa_a(p: GGParams, x):
    """``G(x) / phi(x)`` without underflow near 0."""
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xa <= 0):
        raise ValueError("kappa is defined for x > 0")
    u = xa**p.r
    out = np.empty(xa.shape)
    series = u < p.shape + 1.0
    if series.any():
        out[series] = _series_sum(p.shape, u[series]) * xa[series] / p.k
    rest = ~series
    if rest.any():
        with np.errstate(over="ignore"):
            out[rest] = np.exp(np.log(gammainc_p(p.shape, u[rest])) - gg_log_density(p, xa[rest]))
    return _scalar_or_array(out if np.ndim(x) else out[0], x)


def gg_kappa_b(p: GGParams, x):
    """``(1 - G(x)) / phi(x)`` without underflow in the tail."""
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xa <= 0):
        raise ValueError("kappa is defined for x > 0")
    u = xa**p.r
    out = np.empty(xa.shape)
    tail = u >= p.shape + 1.0
    if tail.any():
        out[tail] = _cf_h(p.shape, u[tail]) * xa[tail] / p.r
    rest = ~tail
    if rest.any():
        out[rest] = gammainc_q(p.shape, u[rest]) / np.exp(gg_log_density(p, xa[rest]))
    return _scalar_or_array(out if np.ndim(x) else out[0], x)


def gg_upper_cutoff(p: GGParams, tail: float = 1e-14) -> float:
    """Smallest ``x`` (to bisection precision) with ``P[Z > x] < tail``."""
    hi = 1.0
    while gg_sf(p, hi) >= tail:
        hi *= 2.0
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gg_sf(p, mid) >= tail:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * hi:
            break
    return hi


# -- Stein potential ---------------------------------------------------------

def _psi(y: float) -> float:
    return 0.0 if y == 0 else y - y * math.log(y)


@dataclass(frozen=True)
class Potential:
    """Convex potential ``B`` on ``(a, b)`` with density ``normalizer * exp(-B)``."""

    a: float
    b: float
    B: Callable
    Bprime: Callable
    x0: float
    B_x0: float
    normalizer: float
    mode_height: float
    params: GGParams | None = field(default=None)

    def density(self, x):
        return self.normalizer * np.exp(-self.B(np.asarray(x, dtype=float)))


def gg_potential(p: GGParams) -> Potential:
    """``B(x) = x**r - (k-1) ln x`` with minimum at ``((k-1)/r)**(1/r)``; needs ``k, r >= 1``."""
    if p.k < 1 or p.r < 1:
        raise ValueError("potential is convex only for k, r >= 1")
    k, r = p.k, p.r
    y = (k - 1.0) / r
    x0 = y ** (1.0 / r) if k > 1 else 0.0
    normalizer = r / math.gamma(k / r)

    def B(x):
        x = np.asarray(x, dtype=float)
        return x**r - (k - 1.0) * np.log(x) if k > 1 else x**r

    def Bprime(x):
        x = np.asarray(x, dtype=float)
        return r * x ** (r - 1.0) - (k - 1.0) / x if k > 1 else r * x ** (r - 1.0)

    b_x0 = _psi(y)
    return Potential(a=0.0, b=math.inf, B=B, Bprime=Bprime, x0=x0, B_x0=b_x0,
                     normalizer=normalizer, mode_height=normalizer * math.exp(-b_x0), params=p)


def bound_constants(p: GGParams) -> tuple[float, float]:
    """Explicit majorants ``(M, M')`` of the mode height and of ``e^{B(x0)} Gamma(k/r)/r``."""
    if p.k < 1 or p.r < 1:
        raise ValueError("bound constants need k, r >= 1")
    k, r = p.k, p.r
    y = (k - 1.0) / r
    corr = 1.0 / (6.0 * (y + 0.375))
    m = k ** (1.0 - 1.0 / r) * r ** (1.0 / r) * math.exp(-4.0 / 9.0 + corr) / math.sqrt(2.0 * y + 1.0)
    m_prime = math.sqrt(2.0 * math.pi) * math.exp(-corr) * math.sqrt(y + 0.5) * (y + 1.0) ** (1.0 / r) / k
    return m, m_prime


def batir_gamma_bounds(x: float) -> tuple[float, float]:
    """Lower and upper bounds on ``Gamma(x + 1)`` for ``x >= 0``."""
    core = math.exp(-1.0 / (6.0 * (x + 0.375))) * (x**x if x > 0 else 1.0) * math.exp(-x) * math.sqrt(x + 0.5)
    return math.sqrt(2.0) * math.exp(4.0 / 9.0) * core, math.sqrt(2.0 * math.pi) * core


def wendel_bounds(x: float, s: float) -> tuple[float, float]:
    """Bounds ``((x/(x+s))**(1-s), 1)`` on ``Gamma(x+s) / (x**s Gamma(x))``."""
    return (x / (x + s)) ** (1.0 - s), 1.0


def wendel_ratio(x: float, s: float) -> float:
    return math.exp(math.lgamma(x + s) - math.lgamma(x) - s * math.log(x))
