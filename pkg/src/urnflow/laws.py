"""Exact laws of tree and path statistics assembled from urn laws.

Each function builds the law through the urn embedding: an urn pmf, possibly
followed by binomial thinning, geometric subtraction or conditioning on
positivity, all done exactly on the pmf.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy.stats import binom

from .pmf import ExactPmf, mixture
from .urns import UrnSpec, urn_exact_pmf


def binomial_pmf(m: int, exact: bool = True) -> ExactPmf:
    """``Bi(m, 1/2)``."""
    if m < 0:
        raise ValueError("binomial size must be >= 0")
    if exact:
        return ExactPmf(0, tuple(Fraction(math.comb(m, i), 2**m) for i in range(m + 1)))
    return ExactPmf(0, binom.pmf(np.arange(m + 1), m, 0.5))


def binomial_thinning(n_law: ExactPmf, minus: int = 0) -> ExactPmf:
    """Law of ``Bi(N - minus, 1/2)`` for ``N`` with the given law."""
    if n_law.offset - minus < 0:
        raise ValueError("binomial size would be negative")
    if n_law.exact:
        return mixture((m, binomial_pmf(x - minus)) for x, m in n_law.items())
    sizes = n_law.support - minus
    top = int(sizes.max())
    k = np.arange(top + 1)
    table = binom.pmf(k[None, :], sizes[:, None], 0.5)
    return ExactPmf(0, n_law.as_array() @ table)


def minus_geometric(n_law: ExactPmf) -> ExactPmf:
    """Law of ``N - Y`` with ``Y ~ Ge(1/2)`` on ``{0, 1, ...}`` independent of ``N``."""
    hi = n_law.offset + len(n_law) - 1
    if n_law.exact:
        # truncate the geometric tail at the value 0 for the purpose of conditioning later
        probs: dict[int, Fraction] = {}
        for x, m in n_law.items():
            for y in range(0, x):
                probs[x - y] = probs.get(x - y, Fraction(0)) + m * Fraction(1, 2 ** (y + 1))
            probs[0] = probs.get(0, Fraction(0)) + m * Fraction(1, 2**x)  # mass of N - Y <= 0
        return ExactPmf.from_dict(probs)
    mass = np.zeros(hi + 1)
    for x, m in n_law.items():
        ys = np.arange(x)
        mass[x - ys] += m * 0.5 ** (ys + 1)
        mass[0] += m * 0.5**x
    return ExactPmf(0, mass)


# -- trees ------------------------------------------------------------------------------

def ub_law(n: int, k: int = 1, exact: bool = True) -> ExactPmf:
    """Spanning size of the root and ``k`` uniform leaves of a uniform binary tree with ``n`` leaves."""
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    return urn_exact_pmf(UrnSpec(0, 2 * k - 1, 1, n - k), exact=exact)


def vb_law(n: int, exact: bool = True) -> ExactPmf:
    """Path length to a uniform node: ``N - Y`` given ``N - Y > 0`` with ``N ~ F(n-1, 1; 0, 1)``."""
    if n < 1:
        raise ValueError("need n >= 1")
    base = minus_geometric(urn_exact_pmf(UrnSpec(0, 1, 1, n - 1), exact=exact))
    return base.condition_positive()


def vp_law(n: int, k: int = 1, convention: str = "edges", exact: bool = True) -> ExactPmf:
    """``Bi(N - (2k-1), 1/2) + k - 1`` with ``N ~ F(n-k, 1; 0, 2k-1)``.

    ``convention="edges"`` is that formula (the plane spanning tree's edge
    count); ``"nodes"`` adds one for the root and counts nodes.
    """
    if convention not in ("edges", "nodes"):
        raise ValueError("convention must be 'edges' or 'nodes'")
    law = binomial_thinning(ub_law(n, k, exact), 2 * k - 1).shift(k - 1)
    return law.shift(1) if convention == "nodes" else law


# -- paths --------------------------------------------------------------------------------

def excursion_height_law(n: int, convention: str = "n-1", exact: bool = True) -> ExactPmf:
    """Height of an excursion of length ``2n`` at a uniform time in ``0..2n-1``: ``Bi(N, 1/2)``.

    ``convention="n-1"`` takes ``N ~ F(n-1, 1; 0, 1)``, ``"n"`` takes ``N ~ F(n, 1; 0, 1)``.
    """
    draws = {"n-1": n - 1, "n": n}.get(convention)
    if draws is None:
        raise ValueError("convention must be 'n-1' or 'n'")
    if n < 1:
        raise ValueError("need n >= 1")
    return binomial_thinning(urn_exact_pmf(UrnSpec(0, 1, 1, draws), exact=exact))


def bridge_local_time_law(n: int, exact: bool = True) -> ExactPmf:
    """Origin visits of a bridge of length ``2n``: ``F(n, 1; 0, 1)``."""
    return urn_exact_pmf(UrnSpec(0, 1, 1, n), exact=exact)


def meander_final_law(length: int, exact: bool = True) -> ExactPmf:
    """Final height of a meander: ``2 Bi(N-1, 1/2) + 1`` for length ``2n+1`` and
    ``2Y | Y > 0`` with ``Y ~ Bi(N, 1/2)`` for length ``2n+2``, where ``N ~ F(n, 1; 0, 1)``."""
    if length < 1:
        raise ValueError("need length >= 1")
    n = (length - 1) // 2
    n_law = urn_exact_pmf(UrnSpec(0, 1, 1, n), exact=exact)
    if length % 2:
        return binomial_thinning(n_law, 1).affine(2, 1)
    return binomial_thinning(n_law).condition_positive().affine(2, 0).trim()


def walk_local_time_law(length: int, exact: bool = True) -> ExactPmf:
    """Origin visits of a simple random walk of length ``2n`` or ``2n+1``: ``F(n, 1; 1, 1)``."""
    if length < 0:
        raise ValueError("need length >= 0")
    return urn_exact_pmf(UrnSpec(1, 1, 1, length // 2), exact=exact)
