"""Stein equation ``f' - B' f = h - E h(Z)`` for the generalized gamma potential, and bound checks.

For ``Z ~ GG(k, r)`` with density ``phi``, CDF ``G`` and survival ``S = 1 - G``,
the bounded solution is ``f = (H S - T G) / phi`` where ``H(x) = int_0^x h phi``
and ``T(x) = int_x^inf h phi``.  Indicators and ramps have closed forms for
``H`` and ``T``; other test functions fall back on adaptive quadrature.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .ggdist import (
    GGParams, Potential, batir_gamma_bounds, bound_constants, gg_cdf, gg_density, gg_kappa_a,
    gg_kappa_b, gg_mass, gg_moment, gg_potential, gg_sf, gg_upper_cutoff, wendel_bounds, wendel_ratio,
)
from .pmf import ExactPmf
from .stats import dk_discrete_vs_gg

AUDIT_TOL = 1e-6
RESIDUAL_TOL = 1e-8
_QUAD = dict(epsabs=1e-13, epsrel=1e-12, limit=400)


# -- test functions ----------------------------------------------------------------

class TestFunction:
    """Bounded ``h`` with ``h(x) in [lo, hi]``; subclasses may provide closed-form partial integrals."""

    breakpoints: tuple[float, ...] = ()

    def __call__(self, x):
        raise NotImplementedError

    def lower_mass(self, p: GGParams, x):
        """``H(x) = int_0^x h(z) phi(z) dz``, or ``None`` when only quadrature is available."""
        return None

    def upper_mass(self, p: GGParams, x):
        return None

    def mean(self, p: GGParams) -> float:
        full = self.lower_mass(p, np.inf)
        if full is not None:
            return float(full)
        return _quad_mean(self, p)

    def sup_centered(self, p: GGParams) -> float:
        """``||h - E h(Z)||`` for ``h`` taking both values 0 and 1."""
        m = self.mean(p)
        return max(m, 1.0 - m)


@dataclass(frozen=True)
class Indicator(TestFunction):
    """``h(x) = 1[x <= t]``."""

    t: float

    @property
    def breakpoints(self):
        return (self.t,)

    def __call__(self, x):
        return (np.asarray(x, dtype=float) <= self.t).astype(float)

    def lower_mass(self, p, x):
        return gg_cdf(p, np.minimum(x, self.t))

    def upper_mass(self, p, x):
        return gg_mass(p, np.minimum(x, self.t), self.t)


@dataclass(frozen=True)
class Ramp(TestFunction):
    """``1`` up to ``s``, linear down to ``0`` at ``s + eps``: the smoothed indicator."""

    s: float
    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    @property
    def breakpoints(self):
        return (self.s, self.s + self.eps)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip((self.s + self.eps - x) / self.eps, 0.0, 1.0)

    def mean(self, p):
        return float(ramp_mean(p, self.s, self.eps))

    def _linear_mass(self, p, a, b):
        # int_a^b (1 - (z - s)/eps) phi(z) dz on a <= b inside [s, s + eps]
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        q = GGParams(p.k + 1, p.r)
        mean = gg_moment(p, 1)
        return ((self.s + self.eps) * gg_mass(p, a, b) - mean * gg_mass(q, a, b)) / self.eps

    def lower_mass(self, p, x):
        s, e = max(self.s, 0.0), self.s + self.eps
        x = np.asarray(x, dtype=float)
        head = gg_cdf(p, np.minimum(x, s))
        lin = self._linear_mass(p, np.full(x.shape, s), np.clip(x, s, max(e, s)))
        return head + np.where(x > s, lin, 0.0)

    def upper_mass(self, p, x):
        s, e = max(self.s, 0.0), max(self.s + self.eps, 0.0)
        x = np.asarray(x, dtype=float)
        head = gg_mass(p, np.minimum(x, s), s)
        lo = np.clip(x, s, e)
        lin = self._linear_mass(p, lo, np.full(x.shape, e))
        return head + lin


def ramp_mean(p: GGParams, s, eps: float):
    """``E h(Z)`` for the ramp at ``s`` of width ``eps``, vectorized in ``s``."""
    s = np.asarray(s, dtype=float)
    a = np.maximum(s, 0.0)
    b = np.maximum(s + eps, 0.0)
    q = GGParams(p.k + 1, p.r)
    lin = ((s + eps) * gg_mass(p, a, b) - gg_moment(p, 1) * gg_mass(q, a, b)) / eps
    return gg_cdf(p, a) + lin


@dataclass(frozen=True)
class Constant(TestFunction):
    c: float = 1.0

    def __call__(self, x):
        return np.full(np.shape(x), self.c, dtype=float)

    def mean(self, p):
        return self.c

    def sup_centered(self, p):
        return 0.0


@dataclass(frozen=True)
class Generic(TestFunction):
    """Any bounded callable; ``points`` lists its discontinuities or kinks."""

    fn: Callable
    points: tuple[float, ...] = ()
    bound: float | None = None

    @property
    def breakpoints(self):
        return self.points

    def __call__(self, x):
        return np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)

    def sup_centered(self, p):
        if self.bound is None:
            raise ValueError("supply bound for a generic test function")
        return self.bound


def _quad_mean(h: TestFunction, p: GGParams) -> float:
    cut = gg_upper_cutoff(p, 1e-16)
    pts = sorted(b for b in h.breakpoints if 0 < b < cut)
    inner, _ = integrate.quad(lambda z: float(h(z)) * gg_density(p, z), 0.0, cut, points=pts or None, **_QUAD)
    return inner


# -- solution --------------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SteinSolution:
    params: GGParams
    potential: Potential
    h: TestFunction
    mean: float
    htilde_norm: float
    closed_form: bool
    _cache: dict = field(default_factory=dict, repr=False)

    def htilde(self, x):
        return self.h(x) - self.mean

    def f(self, x):
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(xa <= 0):
            raise ValueError("f is evaluated on x > 0")
        out = self._f_closed(xa) if self.closed_form else self._f_quad(xa)
        return float(out[0]) if np.ndim(x) == 0 else out

    def _f_closed(self, x):
        p = self.params
        if isinstance(self.h, Constant):
            return np.zeros(x.shape)
        if isinstance(self.h, Indicator):
            t = self.h.t
            if t <= 0:
                return np.zeros(x.shape)
            below = x <= t
            out = np.empty(x.shape)
            out[below] = gg_kappa_a(p, x[below]) * gg_sf(p, t)
            out[~below] = gg_cdf(p, t) * gg_kappa_b(p, x[~below])
            return out
        # ramp: f = kappa_a (1 - E h) left of the ramp, E h kappa_b right of it
        s, e = self.h.s, self.h.s + self.h.eps
        out = np.empty(x.shape)
        left, right = x <= s, x >= e
        mid = ~(left | right)
        out[left] = gg_kappa_a(p, x[left]) * (1.0 - self.mean)
        out[right] = self.mean * gg_kappa_b(p, x[right])
        if mid.any():
            # integrate h~ phi over the short stretch of ramp on the side away from the mode
            xm = x[mid]
            s0 = max(s, 0.0)
            h_lin = self.h._linear_mass
            left_side = xm <= self.potential.x0
            num = np.empty(xm.shape)
            xl = xm[left_side]
            num[left_side] = ((1.0 - self.mean) * gg_cdf(p, s0)
                              + h_lin(p, np.full(xl.shape, s0), xl) - self.mean * gg_mass(p, s0, xl))
            xr = xm[~left_side]
            num[~left_side] = (self.mean * gg_sf(p, e)
                               - h_lin(p, xr, np.full(xr.shape, e)) + self.mean * gg_mass(p, xr, e))
            out[mid] = num / gg_density(p, xm)
        return out

    def _f_quad(self, x):
        pot = self.potential
        cut = gg_upper_cutoff(self.params, 1e-16)
        pts = sorted(b for b in self.h.breakpoints if b > 0)
        out = np.empty(x.shape)
        for i, xi in enumerate(x):
            bx = float(pot.B(xi))
            integrand = lambda z: float(self.htilde(z)) * math.exp(bx - float(pot.B(z)))
            if xi <= pot.x0:
                inner = [b for b in pts if 0 < b < xi]
                val, _ = integrate.quad(integrand, 0.0, xi, points=inner or None, **_QUAD)
            else:
                hi = max(cut, xi + 1.0)
                inner = [b for b in pts if xi < b < hi]
                val, _ = integrate.quad(integrand, xi, hi, points=inner or None, **_QUAD)
                val = -val
            out[i] = val
        return out

    def fprime(self, x):
        """``f' = h~ + B' f`` from the Stein equation."""
        x = np.asarray(x, dtype=float)
        return self.htilde(x) + self.potential.Bprime(x) * self.f(x)

    def fprime_fd(self, x):
        """Central difference with step ``1e-5 max(1, x)``."""
        x = np.asarray(x, dtype=float)
        step = 1e-5 * np.maximum(1.0, x)
        return (self.f(x + step) - self.f(x - step)) / (2.0 * step)

    def fprime_fd5(self, x):
        """Five-point central difference with step ``1e-4 max(1, x)``."""
        x = np.asarray(x, dtype=float)
        st = 1e-4 * np.maximum(1.0, x)
        f = self.f
        return (f(x - 2 * st) - 8.0 * f(x - st) + 8.0 * f(x + st) - f(x + 2 * st)) / (12.0 * st)

    def g(self, x):
        """``g = h~ + r x^(r-1) f``."""
        x = np.asarray(x, dtype=float)
        return self.htilde(x) + self.params.r * x ** (self.params.r - 1.0) * self.f(x)

    def g_derivative_form(self, x):
        """``g = f' + (k-1) f / x`` with ``f'`` by central differences; the ``k = 1`` term is 0."""
        x = np.asarray(x, dtype=float)
        extra = 0.0 if self.params.k == 1 else (self.params.k - 1.0) * self.f(x) / x
        return self.fprime_fd(x) + extra

    def residual(self, grid) -> float:
        """Max of ``|f' - B' f - h~|`` with ``f'`` from :meth:`fprime_fd5`, away from breakpoints."""
        x = clean_grid(grid, self.h.breakpoints, step=1e-4)
        res = self.fprime_fd5(x) - self.potential.Bprime(x) * self.f(x) - self.htilde(x)
        return float(np.max(np.abs(res))) if x.size else 0.0


def clean_grid(grid, breakpoints, step: float = 1e-5) -> np.ndarray:
    """Drop grid points whose difference stencil (radius ``2 step max(1, x)``) reaches 0 or a breakpoint."""
    x = np.asarray(grid, dtype=float)
    radius = 2.0 * step * np.maximum(1.0, x)
    keep = x > 2.0 * radius
    for b in breakpoints:
        keep &= np.abs(x - b) > 2.0 * radius
    return x[keep]


def stein_solve(p: GGParams | Potential, h: TestFunction) -> SteinSolution:
    """Bounded solution of ``f' - B' f = h - E h(Z)``, ``Z ~ GG(k, r)``."""
    if isinstance(p, Potential):
        pot = p
        p = pot.params
    else:
        pot = gg_potential(p)
    closed = isinstance(h, (Indicator, Ramp, Constant))
    mean = h.mean(p)
    norm = h.sup_centered(p) if not isinstance(h, Generic) or h.bound is not None else math.nan
    return SteinSolution(params=p, potential=pot, h=h, mean=mean, htilde_norm=norm, closed_form=closed)


def kappas(p: GGParams | Potential, x) -> tuple:
    """``(kappa_a(x), kappa_b(x))`` with ``kappa_a = e^B int_0^x e^-B`` and ``kappa_b = e^B int_x^inf e^-B``."""
    params = p.params if isinstance(p, Potential) else p
    return gg_kappa_a(params, x), gg_kappa_b(params, x)


def kappas_quad(p: GGParams, x: float) -> tuple[float, float]:
    """Quadrature evaluation of both kappas, as an independent check."""
    pot = gg_potential(p)
    bx = float(pot.B(x))
    ka, _ = integrate.quad(lambda z: math.exp(bx - float(pot.B(z))), 0.0, x, **_QUAD)
    kb, _ = integrate.quad(lambda z: math.exp(bx - float(pot.B(z))), x, np.inf, **_QUAD)
    return ka, kb


def g_eval(sol: SteinSolution, x, form: str = "35"):
    """``g`` by the no-derivative form (``"35"``) or the derivative form (``"34"``)."""
    if np.any(np.asarray(x) <= 0):
        raise ValueError("g is evaluated on x > 0")
    if form == "35":
        return sol.g(x)
    if form == "34":
        return sol.g_derivative_form(x)
    raise ValueError("form must be '34' or '35'")


# -- characterization and the equilibrium identity -------------------------------------------------

def characterization_residual(p: GGParams, f: Callable, fprime: Callable) -> float:
    """``E[f'(Z) - B'(Z) f(Z)]`` by quadrature; zero for ``f`` with ``f phi -> 0`` at both ends."""
    pot = gg_potential(p)
    cut = gg_upper_cutoff(p, 1e-16)
    val, _ = integrate.quad(lambda z: (fprime(z) - float(pot.Bprime(z)) * f(z)) * gg_density(p, z),
                            0.0, cut, **_QUAD)
    return val


def _gauss_legendre(a: float, b: float, n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def _beta_expectation(g: Callable, y: float, k: int, breaks=(), nodes: int = 64) -> float:
    """``E g(V y)`` for ``V ~ Beta(k, 1)``, i.e. ``int_0^1 k u^(k-1) g(u y) du``, split at kinks."""
    cuts = sorted({0.0, 1.0} | {b / y for b in breaks if 0 < b / y < 1})
    total = 0.0
    for a, b in zip(cuts, cuts[1:]):
        u, w = _gauss_legendre(a, b, nodes)
        total += float(np.sum(w * k * u ** (k - 1) * g(u * y)))
    return total


@dataclass(frozen=True)
class IdentityCheck:
    left: float
    right: float

    @property
    def abs_diff(self) -> float:
        return abs(self.left - self.right)

    @property
    def rel_diff(self) -> float:
        scale = max(abs(self.left), abs(self.right))
        return self.abs_diff / scale if scale > 0 else 0.0


def equilibrium_identity_check(k: int, r: int, W, f: Callable, g: Callable, scale: float = 1.0,
                               breaks=(), moment_tol: float = 1e-9) -> IdentityCheck:
    """Both sides of ``E g(W*) = r E W^(r-1) f(W)`` for ``g = f' + (k-1) f / x``.

    ``W`` is an :class:`ExactPmf` (the variable is ``pmf / scale``) or
    :class:`GGParams` for ``W ~ GG(k, r)``; the left side integrates ``g``
    against the law of ``W* = V_k W^(r)``.
    """
    if isinstance(W, GGParams):
        q = GGParams(W.k + r, r)
        cut = gg_upper_cutoff(q, 1e-16)
        z, wz = _gauss_legendre(0.0, cut, 400)
        dens = gg_density(q, z)
        left = float(sum(wi * di * _beta_expectation(g, zi, k, breaks) for zi, wi, di in zip(z, wz, dens)))
        right_fn = lambda x: r * x ** (r - 1.0) * f(x) * gg_density(W, x)
        cut_w = gg_upper_cutoff(W, 1e-16)
        right, _ = integrate.quad(right_fn, 0.0, cut_w, points=[b for b in breaks if 0 < b < cut_w] or None, **_QUAD)
        return IdentityCheck(left, right)
    x = W.support.astype(float) / scale
    m = W.as_array()
    moment = float(np.dot(m, x**r))
    if abs(moment - k / r) > moment_tol:
        raise ValueError(f"need E W^r = k/r, got {moment}")
    keep = (m > 0) & (x > 0)
    x, m = x[keep], m[keep]
    biased = m * x**r / moment
    left = float(sum(b * _beta_expectation(g, xi, k, breaks) for xi, b in zip(x, biased)))
    right = float(np.dot(m, r * x ** (r - 1.0) * np.array([f(xi) for xi in x])))
    return IdentityCheck(left, right)


# -- explicit Kolmogorov bound ----------------------------------------------------------------------

def thm5_bound(k: float, r: float, beta: float, EW_r_minus_1: float, exceedance: float) -> float:
    """Kolmogorov bound from a coupling of ``W`` and ``W*`` at distance ``beta``."""
    if not 0 < beta <= 1:
        raise ValueError("beta must lie in (0, 1]")
    if k < 1 or r < 1:
        raise ValueError("need k, r >= 1")
    if not 0 <= exceedance <= 1:
        raise ValueError("exceedance must be a probability")
    m, mp = bound_constants(GGParams(k, r))
    tail = 4.0 * (2.0 + (r + k - 1.0) * mp) * exceedance
    if r == 1 or r >= 2:
        inner = (10.0 * m + 2.0 * r * (r - 1.0) * (1.0 + 2.0 ** (r - 2.0) * (EW_r_minus_1 + beta ** (r - 1.0))) * mp
                 + 4.0 * r * EW_r_minus_1)
        return beta * inner + tail
    return beta * (10.0 * m + 4.0 * r * EW_r_minus_1) + 2.0 * r * beta ** (r - 1.0) * mp + tail


def perturbation_bound(k: float, r: float, x, beta: float, htilde_norm: float):
    """Right side of the bound on ``|(x+t)^(r-1) f(x+t) - x^(r-1) f(x)|`` for ``|t| <= beta``."""
    _, mp = bound_constants(GGParams(k, r))
    x = np.asarray(x, dtype=float)
    if r == 1 or r >= 2:
        inner = beta * (r - 1.0) * (1.0 + 2.0 ** (r - 2.0) * x ** (r - 1.0) + 2.0 ** (r - 2.0) * beta ** (r - 1.0)) * mp
    else:
        inner = beta ** (r - 1.0) * mp
    return htilde_norm * (inner + 2.0 * beta * x ** (r - 1.0))


# -- audit -----------------------------------------------------------------------------------------------

@dataclass
class AuditEntry:
    name: str
    max_ratio: float = 0.0
    argmax: dict = field(default_factory=dict)
    checks: int = 0

    def update(self, lhs, rhs, where: dict) -> None:
        lhs = np.atleast_1d(np.asarray(lhs, dtype=float))
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        lhs, rhs = np.broadcast_arrays(lhs, rhs)
        ratio = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0), np.where(lhs > 0, np.inf, 0.0))
        self.checks += ratio.size
        i = int(np.argmax(ratio))
        if ratio.flat[i] > self.max_ratio or not self.argmax:
            self.max_ratio = float(ratio.flat[i])
            self.argmax = {key: (float(v.flat[i]) if isinstance(v, np.ndarray) else v) for key, v in where.items()}

    @property
    def ok(self) -> bool:
        return self.max_ratio <= 1.0 + AUDIT_TOL


@dataclass
class AuditReport:
    k: float
    r: float
    entries: dict[str, AuditEntry]
    max_residual: float

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.entries.values()) and self.max_residual < RESIDUAL_TOL

    def to_dict(self) -> dict:
        return {
            "k": self.k, "r": self.r, "ok": self.ok, "max_residual": self.max_residual,
            "inequalities": {name: {"max_ratio": e.max_ratio, "argmax": e.argmax, "checks": e.checks, "ok": e.ok}
                             for name, e in self.entries.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def audit_grid(p: GGParams, points: int = 2000) -> np.ndarray:
    """Grid on ``(0, x_max]`` denser near 0, with ``x_max`` the ``1e-14`` upper quantile."""
    top = gg_upper_cutoff(p, 1e-14)
    small = np.geomspace(1e-4, 0.05 * top, points // 4, endpoint=False)
    return np.concatenate((small, np.linspace(0.05 * top, top, points - points // 4)))


def audit_test_functions(p: GGParams, n_ind: int = 50, n_ramp: int = 50) -> list[TestFunction]:
    qs = np.linspace(0.01, 0.99, n_ind)
    thresholds = [_quantile(p, q) for q in qs]
    ramps = []
    s_q = np.linspace(0.02, 0.98, n_ramp // 2)
    for eps in (0.05, 0.5):
        ramps += [Ramp(_quantile(p, q), eps) for q in s_q]
    return [Indicator(t) for t in thresholds] + ramps


def _quantile(p: GGParams, q: float) -> float:
    from scipy.special import gammaincinv
    return float(gammaincinv(p.shape, q) ** (1.0 / p.r))


def _smoothing_targets(p: GGParams) -> list[tuple[str, ExactPmf, float]]:
    # lattice versions of Z and a point mass, as (name, pmf, scale)
    out = []
    for delta in (0.2, 0.05):
        scale = 1.0 / delta
        top = int(math.ceil(gg_upper_cutoff(p, 1e-12) * scale)) + 1
        edges = np.arange(top + 1) / scale
        mass = gg_mass(p, np.concatenate(([-1.0], edges[:-1])), edges)
        mass = mass / mass.sum()
        out.append((f"lattice{delta}", ExactPmf(0, mass), scale))
    out.append(("point_mass", ExactPmf(1, np.ones(1)), 1.0))
    return out


def bound_audit(k: float, r: float, points: int = 2000, n_ind: int = 50, n_ramp: int = 50,
                betas=(0.01, 0.1, 0.5)) -> AuditReport:
    """Evaluate both sides of every solution bound on a grid and report the worst ratio per family."""
    p = GGParams(k, r)
    pot = gg_potential(p)
    m_const, mp_const = bound_constants(p)
    grid = audit_grid(p, points)
    names = ["kappa_f", "kappa_fprime", "uniform_f", "uniform_Bf", "uniform_fprime", "f_sup",
             "perturbation", "g_sup", "g_sup_max", "smoothing", "concentration", "batir_lower",
             "batir_upper", "wendel_lower", "wendel_upper", "mode_height_M", "inverse_mode_Mprime"]
    entries = {name: AuditEntry(name) for name in names}
    ka, kb = kappas(p, grid)
    kmin = np.minimum(ka, kb)
    bprime = pot.Bprime(grid)
    f_uniform = math.exp(pot.B_x0) / pot.normalizer
    max_res = 0.0
    tvals = np.linspace(-1.0, 1.0, 9)
    for h in audit_test_functions(p, n_ind, n_ramp):
        sol = stein_solve(p, h)
        nrm = sol.htilde_norm
        f = sol.f(grid)
        fp = sol.fprime(grid)
        g = sol.g(grid)
        tag = {"h": repr(h), "x": grid}
        entries["kappa_f"].update(np.abs(f), nrm * kmin, tag)
        entries["kappa_fprime"].update(np.abs(fp), nrm * (1.0 + np.abs(bprime) * kmin), tag)
        entries["uniform_f"].update(np.abs(f), nrm * f_uniform, tag)
        entries["uniform_Bf"].update(np.abs(bprime * f), nrm, tag)
        entries["uniform_fprime"].update(np.abs(fp), 2.0 * nrm, tag)
        entries["f_sup"].update(np.abs(f), nrm * mp_const, tag)
        entries["g_sup"].update(np.abs(g), nrm * (2.0 + (r + k - 1.0) * mp_const), tag)
        entries["g_sup_max"].update(np.abs(g), nrm * max(2.0 + (k - 1.0) * mp_const, 1.0 + r * mp_const), tag)
        xs = grid[:: max(1, len(grid) // 400)]
        base = xs ** (r - 1.0) * sol.f(xs)
        shifts = np.outer(tvals, betas).ravel()
        moved_x = xs[None, :] + shifts[:, None]
        ok = moved_x > 0
        moved = np.zeros(moved_x.shape)
        moved[ok] = moved_x[ok] ** (r - 1.0) * sol.f(moved_x[ok])
        lhs = np.where(ok, np.abs(moved - base[None, :]), 0.0)
        beta_col = np.broadcast_to(np.tile(betas, len(tvals))[:, None], lhs.shape)
        rhs = perturbation_bound(k, r, xs[None, :], beta_col, nrm)
        where = {"h": repr(h), "x": np.broadcast_to(xs, lhs.shape), "beta": beta_col,
                 "t": np.broadcast_to(shifts[:, None], lhs.shape)}
        entries["perturbation"].update(lhs, rhs, where)
        max_res = max(max_res, sol.residual(grid[:: max(1, len(grid) // 1000)]))
    # smoothing inequality and concentration for lattice targets
    mode = pot.mode_height
    for name, pmf, scale in _smoothing_targets(p):
        dk = dk_discrete_vs_gg(pmf, scale, p)
        x = pmf.support / scale
        w = pmf.as_array()
        top = gg_upper_cutoff(p, 1e-10)
        for eps in (0.02, 0.1, 0.3):
            s_grid = np.concatenate((np.linspace(-eps, top, 400), x, x - eps))
            h_w = np.clip((s_grid[:, None] + eps - x[None, :]) / eps, 0.0, 1.0) @ w
            best = float(np.max(np.abs(h_w - ramp_mean(p, s_grid, eps))))
            entries["smoothing"].update(dk, best + mode * eps, {"target": name, "eps": eps})
            s_vals = np.linspace(0.0, top, 200)
            cw = np.concatenate(([0.0], np.cumsum(w)))
            prob = cw[np.searchsorted(x, s_vals + eps, side="right")] - cw[np.searchsorted(x, s_vals, side="left")]
            entries["concentration"].update(prob, mode * eps + 2.0 * dk, {"target": name, "s": s_vals, "eps": eps})
            entries["concentration"].update(gg_mass(p, s_vals, s_vals + eps), mode * eps,
                                            {"target": "Z", "s": s_vals, "eps": eps})
    # gamma-function inequalities and constants
    xs = 0.1 * np.arange(1, 101)
    for xv in xs:
        lo, hi = batir_gamma_bounds(float(xv))
        gam = math.gamma(xv + 1.0)
        entries["batir_lower"].update(lo, gam, {"x": float(xv)})
        entries["batir_upper"].update(gam, hi, {"x": float(xv)})
        for s in (0.0, 0.25, 0.5, 0.75, 1.0):
            wl, wu = wendel_bounds(float(xv), s)
            ratio = wendel_ratio(float(xv), s)
            entries["wendel_lower"].update(wl, ratio, {"x": float(xv), "s": s})
            entries["wendel_upper"].update(ratio, wu, {"x": float(xv), "s": s})
    entries["mode_height_M"].update(mode, m_const, {"k": k, "r": r})
    entries["inverse_mode_Mprime"].update(math.exp(pot.B_x0) * math.gamma(k / r) / r, mp_const, {"k": k, "r": r})
    return AuditReport(k=k, r=r, entries=entries, max_residual=max_res)
