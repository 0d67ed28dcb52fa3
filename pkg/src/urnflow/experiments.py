"""Rate reports and the end-to-end bound check, built from exact urn laws."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ggdist import GGParams
from .stats import RateReport, RateRow, dk_discrete_vs_gg, sandwich_check
from .stein import thm5_bound
from .transforms import coupling_chain
from .urns import UrnSpec, mu_n, raw_moments, scale_for_moment, urn_pmf_path

DEFAULT_NGRID = tuple(2**e for e in range(5, 15))
STATISTICS = ("Ub1", "Ub2", "L", "Lb")


def _check_grid(ngrid) -> list[int]:
    grid = [int(n) for n in ngrid]
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] < 1:
        raise ValueError("n-grid must be positive and strictly increasing")
    return grid


def urn_rate_report(j: int, l: int, ngrid=DEFAULT_NGRID) -> RateReport:
    """Exact ``d_K(W_n / mu_n, GG(j, l+1))`` for ``W_n ~ F(n, l; 1, j)`` along ``ngrid``."""
    if j < 1 or l < 1:
        raise ValueError("need j, l >= 1")
    grid = _check_grid(ngrid)
    target = GGParams(j, l + 1)
    laws = urn_pmf_path(UrnSpec(1, j, l, grid[-1]), grid)
    rows = []
    for n in grid:
        mu = mu_n(j, l, n)
        rows.append(RateRow(n=n, mu_n=mu, d_K=dk_discrete_vs_gg(laws[n], mu, target)))
    return RateReport(label=f"urn j={j} l={l}", rows=rows, exponent=l / (l + 1)).fit()


@dataclass(frozen=True)
class StatisticFamily:
    """A statistic whose law along the grid is an urn law (possibly thinned); ``draws(n)`` maps size to draws."""

    name: str
    spec: UrnSpec
    target: GGParams
    offset: int = 0

    def draws(self, n: int) -> int:
        return n - self.offset


def statistic_family(name: str) -> StatisticFamily:
    """``Ub1``/``Ub2``: spanning size with ``k`` leaves; ``L``: walk origin visits (length ``n``);
    ``Lb``: bridge origin visits (length ``2n``)."""
    if name in ("Ub1", "Ub2"):
        k = int(name[-1])
        return StatisticFamily(name, UrnSpec(0, 2 * k - 1, 1, 0), GGParams(2 * k, 2), offset=k)
    if name == "L":
        return StatisticFamily(name, UrnSpec(1, 1, 1, 0), GGParams(1, 2))
    if name == "Lb":
        return StatisticFamily(name, UrnSpec(0, 1, 1, 0), GGParams(2, 2))
    raise ValueError(f"unknown statistic {name!r}; choose from {STATISTICS}")


def statistic_rate_report(name: str, ngrid=DEFAULT_NGRID) -> RateReport:
    """Exact ``d_K`` of a tree or walk statistic, scaled so its second moment matches the target, along ``ngrid``."""
    fam = statistic_family(name)
    grid = _check_grid(ngrid)
    draws = {n: (n // 2 if name == "L" else fam.draws(n)) for n in grid}
    if min(draws.values()) < 0:
        raise ValueError("n-grid too small for this statistic")
    laws = urn_pmf_path(fam.spec.with_draws(max(draws.values())), draws.values())
    rows = []
    for n in grid:
        d = draws[n]
        second = raw_moments(fam.spec.with_draws(d), 2)[-1]
        mu = scale_for_moment(second, fam.target.k, fam.target.r)
        rows.append(RateRow(n=n, mu_n=mu, d_K=dk_discrete_vs_gg(laws[d], mu, fam.target)))
    return RateReport(label=f"statistic {name}", rows=rows, exponent=0.5).fit()


@dataclass
class SoundnessRow:
    n: int
    mu_n: float
    beta: float
    exceedance: float
    stderr: float
    EW_l: float
    bound: float
    d_K: float
    trivial: bool

    @property
    def holds(self) -> bool:
        return self.d_K <= self.bound


@dataclass
class SoundnessReport:
    j: int
    l: int
    seed: int
    sample_size: int
    rows: list[SoundnessRow] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return all(row.holds for row in self.rows)

    def records(self) -> list[dict]:
        return [{"n": r.n, "beta": r.beta, "exceedance": r.exceedance, "stderr": r.stderr, "seed": self.seed}
                for r in self.rows]

    def to_dict(self) -> dict:
        return {"j": self.j, "l": self.l, "seed": self.seed, "sample_size": self.sample_size, "holds": self.holds,
                "rows": [dict(vars(r), holds=r.holds) for r in self.rows]}


def soundness_report(j: int = 1, l: int = 1, ngrid=DEFAULT_NGRID, sample_size: int = 100_000,
                     seed: int = 0) -> SoundnessReport:
    """Kolmogorov bound from measured coupling exceedances next to the exact ``d_K``, for each ``n``.

    ``beta = (2j + 2l + 5) / mu_n``; where ``beta > 1`` the bound is not defined
    and the trivial bound 1 is recorded instead.
    """
    grid = _check_grid(ngrid)
    target = GGParams(j, l + 1)
    laws = urn_pmf_path(UrnSpec(1, j, l, grid[-1]), grid)
    out = SoundnessReport(j=j, l=l, seed=seed, sample_size=sample_size)
    for i, n in enumerate(grid):
        if n <= l:
            raise ValueError("coupling needs n > l")
        mu = mu_n(j, l, n)
        beta = (2 * j + 2 * l + 5) / mu
        law = laws[n]
        ew_l = float(np.dot(law.as_array(), (law.support / mu) ** l))
        d_k = dk_discrete_vs_gg(law, mu, target)
        res = coupling_chain(j, l, n, beta=beta, sample_size=sample_size, seed=seed + i)
        trivial = beta > 1
        bound = 1.0 if trivial else thm5_bound(j, l + 1, beta, ew_l, res.exceedance)
        out.rows.append(SoundnessRow(n=n, mu_n=mu, beta=beta, exceedance=res.exceedance, stderr=res.stderr,
                                     EW_l=ew_l, bound=bound, d_K=d_k, trivial=trivial))
    return out


def sandwich(report: RateReport) -> dict:
    lo, hi = sandwich_check(report)
    return {"min": lo, "max": hi, "ratio": hi / lo if lo > 0 else math.inf}
