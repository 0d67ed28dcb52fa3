"""Power bias, the generalized equilibrium transform, maximal couplings and the urn coupling chain."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .ggdist import GGParams, gg_cdf, gg_sample
from .parallel import map_blocks
from .pmf import ExactPmf
from .stats import ks_statistic
from .urns import UrnSpec, mu_n, rising_bias_pmf, simulate_urn_batch, urn_exact_pmf, polya_coupled_sample


def power_bias_pmf(p: ExactPmf, r: int) -> ExactPmf:
    """``W^(r)``: mass at ``x`` proportional to ``x**r p(x)``."""
    if r < 0:
        raise ValueError("bias order must be non-negative")
    if p.offset < 0:
        raise ValueError("power bias needs non-negative support")
    if p.exact:
        weights = [m * Fraction(x) ** r for x, m in p.items()]
        z = sum(weights)
        if z == 0:
            raise ValueError("all mass at 0; bias undefined")
        return ExactPmf(p.offset, tuple(w / z for w in weights)).trim()
    weights = p.as_array() * p.support.astype(float) ** r
    z = weights.sum()
    if not z > 0:
        raise ValueError("all mass at 0; bias undefined")
    return ExactPmf(p.offset, weights / z).trim()


@dataclass(frozen=True, eq=False)
class EquilibriumLaw:
    """``W* = V_k W^(r)`` with ``V_k ~ Beta(k, 1)`` independent of the power-biased ``W^(r)``."""

    base: ExactPmf
    k: int
    r: int
    biased: ExactPmf = field(init=False)
    moment_r: float = field(init=False)

    def __post_init__(self):
        if self.k < 1 or self.r < 1:
            raise ValueError("need k, r >= 1")
        object.__setattr__(self, "biased", power_bias_pmf(self.base, self.r))
        object.__setattr__(self, "moment_r", float(self.base.as_float().moment(self.r)))

    def cdf(self, t):
        """``P[W* <= t]``; vectorized in ``t``."""
        t = np.asarray(t, dtype=float)
        x = self.biased.support.astype(float)
        w = self.biased.as_array()
        keep = (w > 0) & (x > 0)
        x, w = x[keep], w[keep]
        ratio = np.clip(np.maximum(t[..., None], 0.0) / x, 0.0, 1.0)
        out = np.sum(w * ratio**self.k, axis=-1)
        return float(out) if out.ndim == 0 else out

    def mean(self) -> float:
        return self.k / (self.k + 1.0) * self.biased.as_float().mean()

    def sample(self, rng: np.random.Generator, size=None):
        v = rng.random(size) ** (1.0 / self.k)
        return v * self.biased.sample(rng, size)


def equilibrium_cdf(e: EquilibriumLaw, t):
    return e.cdf(t)


def gg_fixed_point_check(p: GGParams, sample_size: int, rng: np.random.Generator) -> float:
    """Kolmogorov statistic of ``V_k Z'`` against ``GG(k, r)``, where ``Z' ~ GG(k+r, r)`` is the ``r``-power bias of ``GG(k, r)``."""
    if sample_size < 1:
        raise ValueError("sample_size must be >= 1")
    v = rng.random(sample_size) ** (1.0 / p.k)
    z = gg_sample(GGParams(p.k + p.r, p.r), rng, sample_size)
    return ks_statistic(v * z, lambda t: gg_cdf(p, t))


def tv_distance(p: ExactPmf, q: ExactPmf):
    return p.tv_distance(q)


# -- maximal coupling ----------------------------------------------------------

def _aligned(p: ExactPmf, q: ExactPmf) -> tuple[int, np.ndarray, np.ndarray]:
    lo = min(p.offset, q.offset)
    hi = max(p.offset + len(p), q.offset + len(q))
    a, b = np.zeros(hi - lo), np.zeros(hi - lo)
    a[p.offset - lo: p.offset - lo + len(p)] = p.as_array()
    b[q.offset - lo: q.offset - lo + len(q)] = q.as_array()
    return lo, a, b


def _draw(weights: np.ndarray, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(weights)
    idx = np.searchsorted(cdf, u * cdf[-1], side="right")
    return np.minimum(idx, len(cdf) - 1)


def maximal_coupling(p: ExactPmf, q: ExactPmf, rng: np.random.Generator, size: int = 1):
    """Samples ``(X, Y)`` with ``X ~ p``, ``Y ~ q`` and ``P[X != Y] = d_TV(p, q)``."""
    lo, a, b = _aligned(p, q)
    common = np.minimum(a, b)
    overlap = common.sum()
    x = np.empty(size, dtype=np.int64)
    y = np.empty(size, dtype=np.int64)
    same = rng.random(size) < overlap
    n_same = int(same.sum())
    if n_same:
        x[same] = y[same] = _draw(common, rng.random(n_same))
    n_diff = size - n_same
    if n_diff:
        x[~same] = _draw(a - common, rng.random(n_diff))
        y[~same] = _draw(b - common, rng.random(n_diff))
    return x + lo, y + lo


def maximal_coupling_given(p: ExactPmf, q: ExactPmf, x, rng: np.random.Generator) -> np.ndarray:
    """``Y`` given ``X = x`` under the maximal coupling of ``p`` and ``q``.

    Keeps ``Y = x`` with probability ``min(p, q)(x) / p(x)``, otherwise draws
    from the normalized residual ``(q - p)^+``.
    """
    lo, a, b = _aligned(p, q)
    x = np.asarray(x, dtype=np.int64)
    i = x - lo
    if np.any((i < 0) | (i >= len(a))) or np.any(a[i] <= 0):
        raise ValueError("conditioning value outside the support of p")
    stay = rng.random(x.shape) * a[i] < np.minimum(a, b)[i]
    y = x.copy()
    move = ~stay
    if move.any():
        y[move] = lo + _draw(np.maximum(b - a, 0.0), rng.random(int(move.sum())))
    return y


# -- coupling chain --------------------------------------------------------------

@dataclass(frozen=True)
class CouplingResult:
    j: int
    l: int
    n: int
    beta: float
    mu_n: float
    exceedance: float
    stderr: float
    seed: int
    sample_size: int
    d_tv: float
    max_gap: float
    samples: dict | None = None

    def record(self) -> dict:
        return {"n": self.n, "beta": self.beta, "exceedance": self.exceedance,
                "stderr": self.stderr, "seed": self.seed}


@dataclass(frozen=True, eq=False)
class _ChainLaws:
    r_law: ExactPmf
    t_law: ExactPmf
    biased: ExactPmf


def chain_laws(j: int, l: int, n: int) -> _ChainLaws:
    """Exact laws used by the chain: ``R``, the rising-factorial bias ``T`` and the power bias ``W^(l+1)``."""
    w_law = urn_exact_pmf(UrnSpec(1, j, l, n))
    return _ChainLaws(
        r_law=urn_exact_pmf(UrnSpec(1, j + l + 1, l, n - l)),
        t_law=rising_bias_pmf(UrnSpec(1, j, l, n), l + 1, exact=False),
        biased=power_bias_pmf(w_law, l + 1),
    )


def _chain_block(j: int, l: int, n: int, laws: _ChainLaws, rng: np.random.Generator, size: int):
    # Sample-path layout per block: R, then l continuation draws, then the
    # coupling decision for W^(l+1), then j uniforms driving Q and V.
    r = laws.r_law.sample(rng, size)
    x_full = simulate_urn_batch(UrnSpec(1, j + l + 1, l, n), size, rng, start=r, first_draw=n - l)
    t = x_full - (l + 1)
    w_bias = maximal_coupling_given(laws.t_law, laws.biased, t, rng)
    q, v = polya_coupled_sample(j, r - j - 1, rng, size)
    return q, v, w_bias


def coupling_chain(j: int, l: int, n: int, beta: float | None = None, sample_size: int = 100_000,
                   seed: int = 0, keep_samples: bool = False, block: int = 200_000) -> CouplingResult:
    """Couple ``W_n ~ F(n, l; 1, j)`` with its ``(j, l+1)`` equilibrium transform and estimate
    ``P[|W_n - W_n*| / mu_n > beta]``.

    ``R ~ F(n-l, l; 1, j+l+1)`` is drawn exactly and run for ``l`` further draws,
    which gives ``T + l + 1`` with ``T`` rising-factorial biased.  ``W^(l+1)`` is
    maximally coupled to ``T``.  ``W = Q_j(R - j - 1)`` and ``V_j`` come from the
    same uniforms, independent of ``R``, so ``W* = V_j W^(l+1)``.
    The default ``beta`` is ``(2j + 2l + 5) / mu_n``.
    """
    if j < 1 or l < 1:
        raise ValueError("need j, l >= 1")
    if n <= l:
        raise ValueError("coupling chain needs n > l")
    if sample_size < 1:
        raise ValueError("sample_size must be >= 1")
    mu = mu_n(j, l, n)
    if beta is None:
        beta = (2 * j + 2 * l + 5) / mu
    laws = chain_laws(j, l, n)
    parts = map_blocks(lambda g, s: _chain_block(j, l, n, laws, g, s), sample_size, seed, block)
    q = np.concatenate([part[0] for part in parts])
    v = np.concatenate([part[1] for part in parts])
    w_bias = np.concatenate([part[2] for part in parts])
    gap = np.abs(q - v * w_bias) / mu
    hits = gap > beta
    p_hat = float(hits.mean())
    samples = {"W": q, "V": v, "W_bias": w_bias, "W_star": v * w_bias} if keep_samples else None
    return CouplingResult(
        j=j, l=l, n=n, beta=float(beta), mu_n=mu, exceedance=p_hat,
        stderr=math.sqrt(p_hat * (1.0 - p_hat) / sample_size), seed=seed,
        sample_size=sample_size, d_tv=float(laws.t_law.tv_distance(laws.biased)),
        max_gap=float(gap.max()), samples=samples,
    )
