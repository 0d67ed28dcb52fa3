"""Kolmogorov distances and log-log rate fits."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .ggdist import GGParams, gg_cdf
from .pmf import ExactPmf


def dk_discrete_vs_gg(pmf: ExactPmf, scale: float, p: GGParams) -> float:
    """Exact ``sup_t |P[W/scale <= t] - G(t)|`` for integer-valued ``W``.

    Between atoms the lattice CDF is flat while ``G`` increases, so the
    supremum is attained at an atom, either at the atom or just before it.
    """
    if not scale > 0:
        raise ValueError("scale must be positive")
    return dk_discrete_vs_cdf(pmf, lambda t: gg_cdf(p, t), scale)


def dk_discrete_vs_cdf(pmf: ExactPmf, cdf: Callable, scale: float = 1.0) -> float:
    """Same as :func:`dk_discrete_vs_gg` against any continuous CDF."""
    mass = pmf.as_array()
    keep = mass > 0
    x = pmf.support[keep].astype(float)
    mass = mass[keep]
    right = np.cumsum(mass)
    right[-1] = 1.0
    left = np.concatenate(([0.0], right[:-1]))
    g = np.asarray(cdf(x / scale), dtype=float)
    return float(max(np.max(np.abs(right - g)), np.max(np.abs(left - g))))


def dk_grid_scan(pmf: ExactPmf, scale: float, p: GGParams, points: int = 1_000_000) -> float:
    """Brute-force sup over a dense grid plus atom neighbourhoods; a check on the exact routine."""
    x = pmf.support.astype(float) / scale
    lo, hi = min(0.0, x[0]) - 1.0, x[-1] + 1.0
    eps = 1e-12 * max(1.0, hi)
    t = np.concatenate((np.linspace(lo, hi, points), x, x - eps))
    t.sort()
    cdf = np.concatenate(([0.0], pmf.cdf_array()))
    idx = np.searchsorted(x, t, side="right")
    return float(np.max(np.abs(cdf[idx] - gg_cdf(p, t))))


def dkw_band(m: int, alpha: float = 0.01) -> float:
    """Half-width ``sqrt(ln(2/alpha) / (2m))`` of the DKW confidence band."""
    if m < 1:
        raise ValueError("sample size must be >= 1")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * m))


def ks_statistic(samples, cdf: Callable) -> float:
    """One-sample Kolmogorov statistic ``sup |ECDF - cdf|`` of a continuous CDF."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    m = x.size
    if m == 0:
        raise ValueError("empty sample")
    g = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, m + 1)
    return float(max(np.max(i / m - g), np.max(g - (i - 1) / m)))


def dk_empirical(samples, p: GGParams, alpha: float = 0.01) -> tuple[float, float]:
    """``(statistic, DKW band)`` for a sample against ``GG(k, r)``."""
    stat = ks_statistic(samples, lambda t: gg_cdf(p, t))
    return stat, dkw_band(np.size(samples), alpha)


def chi_square_pvalue(counts, probs, min_expected: float = 5.0) -> float:
    """Pearson goodness-of-fit p-value; cells with small expectation are pooled."""
    from scipy.stats import chi2

    counts = np.asarray(counts, dtype=float)
    probs = np.asarray(probs, dtype=float)
    total = counts.sum()
    expected = probs / probs.sum() * total
    order = np.argsort(expected)
    obs_cells, exp_cells = [], []
    acc_o = acc_e = 0.0
    for i in order:
        acc_o += counts[i]
        acc_e += expected[i]
        if acc_e >= min_expected:
            obs_cells.append(acc_o)
            exp_cells.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if exp_cells:
            obs_cells[-1] += acc_o
            exp_cells[-1] += acc_e
        else:
            return 1.0
    if len(exp_cells) < 2:
        return 1.0
    obs, exp = np.array(obs_cells), np.array(exp_cells)
    stat = float(np.sum((obs - exp) ** 2 / exp))
    return float(chi2.sf(stat, len(exp) - 1))


def pmf_chi_square(samples, pmf: ExactPmf) -> float:
    """Chi-square p-value of integer samples against an exact pmf."""
    samples = np.asarray(samples, dtype=np.int64)
    if samples.min() < pmf.offset or samples.max() >= pmf.offset + len(pmf):
        return 0.0
    counts = np.bincount(samples - pmf.offset, minlength=len(pmf))
    return chi_square_pvalue(counts, pmf.as_array())


# -- rate reports --------------------------------------------------------------

@dataclass(frozen=True)
class RateRow:
    n: int
    mu_n: float
    d_K: float
    method: str = "exact"
    stderr: float | None = None

    def __post_init__(self):
        if self.method not in ("exact", "empirical"):
            raise ValueError(f"unknown method {self.method!r}")
        if not 0.0 <= self.d_K <= 1.0:
            raise ValueError(f"d_K={self.d_K} outside [0, 1]")


@dataclass
class RateReport:
    label: str
    rows: list[RateRow]
    exponent: float
    slope: float = math.nan
    intercept: float = math.nan
    normalized: list[float] = field(default_factory=list)

    def __post_init__(self):
        ns = [row.n for row in self.rows]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("report rows must have strictly increasing n")

    @property
    def theory_slope(self) -> float:
        return -self.exponent

    def fit(self) -> "RateReport":
        self.slope, self.intercept, self.normalized = rate_fit(self.rows, self.exponent)
        return self

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "mu_n", "d_K", "normalized"])
        norm = self.normalized or [row.d_K * row.n**self.exponent for row in self.rows]
        for row, z in zip(self.rows, norm):
            writer.writerow([row.n, repr(row.mu_n), repr(row.d_K), repr(z)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "exponent": self.exponent,
            "theory_slope": self.theory_slope,
            "slope": self.slope,
            "intercept": self.intercept,
            "rows": [asdict(row) for row in self.rows],
            "normalized": list(self.normalized),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def rate_fit(rows: Sequence[RateRow], exponent: float) -> tuple[float, float, list[float]]:
    """Least-squares line through ``(log n, log d_K)``, plus ``d_K * n**exponent`` per row."""
    if len(rows) < 4:
        raise ValueError("rate fit needs at least 4 rows")
    n = np.array([row.n for row in rows], dtype=float)
    d = np.array([row.d_K for row in rows], dtype=float)
    if n.max() / n.min() < 100:
        raise ValueError("rate fit needs n spanning at least two decades")
    if np.any(d <= 0):
        raise ValueError("d_K must be positive to take logs")
    slope, intercept = np.polyfit(np.log(n), np.log(d), 1)
    return float(slope), float(intercept), [float(v) for v in d * n**exponent]


def sandwich_check(report: RateReport) -> tuple[float, float]:
    """``(min, max)`` of ``d_K * n**exponent`` over the exact rows."""
    rows = [row for row in report.rows if row.method == "exact"]
    if not rows:
        raise ValueError("sandwich check needs exact rows")
    z = [row.d_K * row.n**report.exponent for row in rows]
    return min(z), max(z)
