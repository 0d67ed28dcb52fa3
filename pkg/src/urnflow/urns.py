"""Polya urn with black immigration after every ``l``th draw, and the classical urn.

``F(n, l; b, w)`` is the law of the white count after ``n`` draws from an urn
that starts with ``b`` black and ``w`` white balls; each drawn ball goes back
with one more of its colour, and one extra black ball is added after draws
``l, 2l, 3l, ...``.  ``P(i, j; n)`` is the classical urn (no immigration)
started from ``i`` black and ``j`` white balls.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Iterator

import numpy as np

from .pmf import ExactPmf, mixture, rising

EXACT_MAX_DRAWS = 64
MAX_DRAWS = 1 << 22


class ResourceLimitError(RuntimeError):
    """Requested table would not fit the configured limits."""


@dataclass(frozen=True)
class UrnSpec:
    black0: int
    white0: int
    period: int
    draws: int

    def __post_init__(self):
        if self.black0 < 0 or self.white0 < 0:
            raise ValueError("initial ball counts must be non-negative")
        if self.black0 + self.white0 < 1:
            raise ValueError("urn needs at least one ball")
        if self.period < 1:
            raise ValueError("immigration period must be >= 1")
        if self.draws < 0:
            raise ValueError("number of draws must be >= 0")

    def with_draws(self, n: int) -> "UrnSpec":
        return replace(self, draws=n)


def total_balls(spec: UrnSpec, i: int) -> int:
    """Balls in the urn after ``i`` draws: ``w + b + i + floor(i/l)``."""
    if not 0 <= i <= spec.draws:
        raise ValueError(f"draw index {i} outside 0..{spec.draws}")
    return spec.white0 + spec.black0 + i + i // spec.period


def _balls(spec: UrnSpec, i: int) -> int:
    return spec.white0 + spec.black0 + i + i // spec.period


def simulate_urn(spec: UrnSpec, rng: np.random.Generator) -> int:
    """One draw-by-draw trajectory; returns the final white count."""
    white = spec.white0
    total = spec.white0 + spec.black0
    for i in range(1, spec.draws + 1):
        if rng.random() * total < white:
            white += 1
        total += 1
        if i % spec.period == 0:
            total += 1
    return white


def simulate_urn_batch(spec: UrnSpec, size: int, rng: np.random.Generator,
                       start: np.ndarray | None = None, first_draw: int = 0) -> np.ndarray:
    """``size`` independent trajectories at once.

    ``start`` and ``first_draw`` continue trajectories that already made
    ``first_draw`` draws and hold ``start`` white balls.
    """
    white = np.full(size, spec.white0, dtype=np.int64) if start is None else np.array(start, dtype=np.int64)
    for i in range(first_draw, spec.draws):
        total = _balls(spec, i)
        white += rng.random(size) * total < white
    return white


def _check_size(n: int, exact: bool):
    if exact and n > EXACT_MAX_DRAWS:
        raise ResourceLimitError(f"rational mode supports at most {EXACT_MAX_DRAWS} draws, got {n}")
    if n > MAX_DRAWS:
        raise ResourceLimitError(f"{n} draws exceeds the table limit {MAX_DRAWS}")


def _dp_float(spec: UrnSpec, checkpoints: Iterable[int]) -> Iterator[tuple[int, ExactPmf]]:
    wanted = sorted(set(checkpoints))
    mass = np.ones(1)
    w = spec.white0
    pos = 0
    for i in range(spec.draws + 1):
        while pos < len(wanted) and wanted[pos] == i:
            yield i, ExactPmf(w, mass.copy())
            pos += 1
        if i == spec.draws or pos == len(wanted):
            break
        x = np.arange(w, w + len(mass), dtype=float)
        p_white = x / _balls(spec, i)
        new = np.zeros(len(mass) + 1)
        new[:-1] += mass * (1.0 - p_white)
        new[1:] += mass * p_white
        mass = new


def _dp_exact(spec: UrnSpec) -> ExactPmf:
    mass = [Fraction(1)]
    w = spec.white0
    for i in range(spec.draws):
        total = _balls(spec, i)
        new = [Fraction(0)] * (len(mass) + 1)
        for j, m in enumerate(mass):
            if not m:
                continue
            p = Fraction(w + j, total)
            new[j] += m * (1 - p)
            new[j + 1] += m * p
        mass = new
    return ExactPmf(w, tuple(mass))


def urn_exact_pmf(spec: UrnSpec, exact: bool = False) -> ExactPmf:
    """Exact law of the white count, by dynamic programming over (draw, white count)."""
    _check_size(spec.draws, exact)
    if exact:
        return _dp_exact(spec)
    return next(_dp_float(spec, [spec.draws]))[1]


def urn_pmf_path(spec: UrnSpec, checkpoints: Iterable[int]) -> dict[int, ExactPmf]:
    """Float laws after each draw count in ``checkpoints`` from a single DP pass."""
    checkpoints = sorted(set(checkpoints))
    _check_size(checkpoints[-1], False)
    return dict(_dp_float(spec.with_draws(checkpoints[-1]), checkpoints))


def brute_force_pmf(spec: UrnSpec) -> ExactPmf:
    """Law of the white count by enumerating all ``2**n`` colour sequences (rational)."""
    if spec.draws > 16:
        raise ResourceLimitError("brute-force enumeration is capped at 16 draws")
    probs: dict[int, Fraction] = {}
    for seq in itertools.product((0, 1), repeat=spec.draws):
        white, prob = spec.white0, Fraction(1)
        for i, is_white in enumerate(seq):
            total = _balls(spec, i)
            prob *= Fraction(white, total) if is_white else Fraction(total - white, total)
            if not prob:
                break
            white += is_white
        if prob:
            probs[white] = probs.get(white, Fraction(0)) + prob
    return ExactPmf.from_dict(probs).trim()


# -- moments -----------------------------------------------------------------

def rising_moment(spec: UrnSpec, m: int, exact: bool = True):
    """``E[X (X+1) ... (X+m-1)]`` from the closed product over draws."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if exact:
        out = Fraction(rising(spec.white0, m))
        for i in range(1, spec.draws + 1):
            out *= 1 + Fraction(m, _balls(spec, i - 1))
        return out
    if spec.white0 == 0:
        return 0.0
    n = np.arange(spec.draws)
    totals = spec.white0 + spec.black0 + n + n // spec.period
    return float(rising(spec.white0, m)) * math.exp(float(np.sum(np.log1p(m / totals))))


def stirling_unsigned(m: int) -> list[list[int]]:
    """Table ``c[i][j]`` of unsigned Stirling numbers of the first kind, ``0 <= j <= i <= m``."""
    c = [[0] * (m + 1) for _ in range(m + 1)]
    c[0][0] = 1
    for i in range(1, m + 1):
        for j in range(1, i + 1):
            c[i][j] = (i - 1) * c[i - 1][j] + c[i - 1][j - 1]
    return c


def raw_moments(spec: UrnSpec, up_to: int, exact: bool = False) -> list:
    """``[E X, E X**2, ..., E X**up_to]`` by inverting the rising-factorial expansion."""
    if up_to < 1:
        raise ValueError("up_to must be >= 1")
    c = stirling_unsigned(up_to)
    rising_m = [rising_moment(spec, m, exact=exact) for m in range(1, up_to + 1)]
    raw: list = []
    for m in range(1, up_to + 1):
        value = rising_m[m - 1] - sum(c[m][i] * raw[i - 1] for i in range(1, m))
        raw.append(value)
    return raw


def raw_moments_from_pmf(pmf: ExactPmf, up_to: int) -> list:
    return [pmf.moment(m) for m in range(1, up_to + 1)]


def scale_for_moment(moment_r: float, k: float, r: float) -> float:
    """``mu`` with ``E (W/mu)**r = k/r`` given ``E W**r``."""
    return (r / k * float(moment_r)) ** (1.0 / r)


def mu_n(j: int, l: int, n: int, exact: bool = False) -> float:
    """Scaling ``mu_n`` with ``mu_n**(l+1) = (l+1)/j * E W_n**(l+1)``, ``W_n ~ F(n, l; 1, j)``."""
    if j < 1 or l < 1 or n < 0:
        raise ValueError("need j, l >= 1 and n >= 0")
    moment = raw_moments(UrnSpec(1, j, l, n), l + 1, exact=exact)[-1]
    return scale_for_moment(moment, j, l + 1)


# -- classical urn -------------------------------------------------------------

def polya_pmf(black: int, white: int, n: int, exact: bool = True) -> ExactPmf:
    """Law ``P(black, white; n)`` of the white count (beta-binomial)."""
    if black < 0 or white < 0 or black + white < 1 or n < 0:
        raise ValueError("invalid classical urn")
    if white == 0 or black == 0:
        return ExactPmf.point(white if white == 0 else white + n, exact=exact)
    if exact:
        denom = rising(black + white, n)
        mass = tuple(Fraction(math.comb(n, m) * rising(white, m) * rising(black, n - m), denom)
                     for m in range(n + 1))
        return ExactPmf(white, mass)
    m = np.arange(n + 1)
    from scipy.special import gammaln
    logp = (gammaln(n + 1) - gammaln(m + 1) - gammaln(n - m + 1)
            + gammaln(white + m) - gammaln(white) + gammaln(black + n - m) - gammaln(black)
            - gammaln(black + white + n) + gammaln(black + white))
    mass = np.exp(logp)
    return ExactPmf(white, mass / mass.sum())


def polya_cdf(j: int, n: int, t: int, exact: bool = False):
    """``P[Q_j(n) <= t]`` for the classical urn started from 1 black and ``j`` white balls."""
    if t < j:
        return Fraction(0) if exact else 0.0
    if t >= j + n:
        return Fraction(1) if exact else 1.0
    out = Fraction(1)
    for i in range(j):
        out *= Fraction(t - i, n + j - i)
    return out if exact else float(out)


def polya_coupled_sample(j: int, n, rng: np.random.Generator, size=None):
    """Coupled ``(Q, V)`` with ``Q ~ P(1, j; n)``, ``V ~ Beta(j, 1)`` and ``0 <= Q - n V <= j + 1``.

    ``n`` may be an array (one classical urn length per sample).  Uses
    ``Q = max_i (i + ceil((n + j - i) U_i))`` and ``V = max_i U_i`` for the
    same uniforms ``U_0 .. U_{j-1}``.
    """
    if j < 1:
        raise ValueError("j must be >= 1")
    shape = () if size is None else (size,) if np.ndim(size) == 0 else tuple(size)
    u = 1.0 - rng.random(shape + (j,))  # (0, 1]
    i = np.arange(j)
    n_arr = np.asarray(n)[..., None] if np.ndim(n) else n
    q = np.max(i + np.ceil((n_arr + j - i) * u), axis=-1).astype(np.int64)
    v = np.max(u, axis=-1)
    if size is None:
        return int(q), float(v)
    return q, v


# -- distributional identities -------------------------------------------------

IDENTITIES = ("lemma4.2", "lemma4.7", "lemma4.8", "lemma4.9", "lemma4.10")


def rising_bias_pmf(spec: UrnSpec, r: int, exact: bool = True) -> ExactPmf:
    """Law of ``T`` with ``P[T = x]`` proportional to ``x (x+1)...(x+r-1) P[X = x]``."""
    base = urn_exact_pmf(spec, exact=exact)
    norm = rising_moment(spec, r, exact=exact)
    if exact:
        mass = tuple(m * rising(x, r) / norm for x, m in base.items())
        return ExactPmf(base.offset, mass)
    x = base.support.astype(float)
    return ExactPmf(base.offset, base.as_array() * rising(x, r) / norm)


def _polya_mixture(weights: ExactPmf, component, exact: bool) -> ExactPmf:
    return mixture((m, component(x)) for x, m in weights.items() if m)


def identity_sides(name: str, exact: bool = True, **params) -> tuple[ExactPmf, ExactPmf]:
    """Both sides of a distributional identity as exact laws.

    ``lemma4.2``  (b, w, l, n, r): ``F(n,l; b, w+r)`` vs ``T + r``, ``T`` rising-factorial biased.
    ``lemma4.7``  (j, l, n): ``F(n,l; 1, j)`` vs mixture of ``F(n-l,l; 2+j+l-X, X)``, ``X ~ P(1,j; l)``.
    ``lemma4.8``  (j, l, n, i): ``F(n-l,l; 2+i, j+l-i)`` vs ``P(1+i, j+l-i; R-j-l-1)``, ``R ~ F(n-l,l; 1, 1+j+l)``.
    ``lemma4.9``  (j, l, n): mixture of ``P(1+j+l-X, X; n-l)`` vs ``P(1, j; n)``.
    ``lemma4.10`` (j, l, n): ``F(n,l; 1, j)`` vs ``P(1, j; R-j-1)``, ``R ~ F(n-l,l; 1, j+l+1)``.
    """
    if name == "lemma4.2":
        b, w, l, n, r = (params[key] for key in ("b", "w", "l", "n", "r"))
        if r < 1:
            raise ValueError("bias order r must be >= 1")
        left = urn_exact_pmf(UrnSpec(b, w + r, l, n), exact=exact)
        right = rising_bias_pmf(UrnSpec(b, w, l, n), r, exact=exact).shift(r)
        return left, right
    j, l, n = params["j"], params["l"], params["n"]
    if j < 1 or l < 1:
        raise ValueError("need j, l >= 1")
    if n < l:
        raise ValueError("identity needs n >= l")
    if name == "lemma4.7":
        left = urn_exact_pmf(UrnSpec(1, j, l, n), exact=exact)
        x_law = polya_pmf(1, j, l, exact=exact)
        right = _polya_mixture(x_law, lambda x: urn_exact_pmf(UrnSpec(2 + j + l - x, x, l, n - l), exact=exact), exact)
        return left, right
    if name == "lemma4.8":
        i = params.get("i", 0)
        if not 0 <= i <= l:
            raise ValueError("need 0 <= i <= l")
        left = urn_exact_pmf(UrnSpec(2 + i, j + l - i, l, n - l), exact=exact)
        r_law = urn_exact_pmf(UrnSpec(1, 1 + j + l, l, n - l), exact=exact)
        right = _polya_mixture(r_law, lambda rho: polya_pmf(1 + i, j + l - i, rho - j - l - 1, exact=exact), exact)
        return left, right
    if name == "lemma4.9":
        x_law = polya_pmf(1, j, l, exact=exact)
        left = _polya_mixture(x_law, lambda x: polya_pmf(1 + j + l - x, x, n - l, exact=exact), exact)
        right = polya_pmf(1, j, n, exact=exact)
        return left, right
    if name == "lemma4.10":
        left = urn_exact_pmf(UrnSpec(1, j, l, n), exact=exact)
        r_law = urn_exact_pmf(UrnSpec(1, j + l + 1, l, n - l), exact=exact)
        right = _polya_mixture(r_law, lambda rho: polya_pmf(1, j, rho - j - 1, exact=exact), exact)
        return left, right
    raise ValueError(f"unknown identity {name!r}; expected one of {IDENTITIES}")


def identity_discrepancy(name: str, exact: bool = True, **params):
    """``max_x |p_left(x) - p_right(x)|``; zero (rational mode) when the identity holds."""
    left, right = identity_sides(name, exact=exact, **params)
    return left.sup_distance(right)
