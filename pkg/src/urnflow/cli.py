"""``urnflow`` command-line runner.

Every subcommand accepts ``--config FILE`` (a JSON object of option values;
flags given on the command line win), ``--seed``, ``--out``, ``--manifest``,
``--format`` and ``--check``.  Exit codes: 0 success, 1 invalid
configuration, 2 resource limit, 3 failed ``--check``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import platform
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from types import SimpleNamespace
from typing import Any, Callable

import numpy as np
import scipy
from scipy import integrate
from scipy.special import gammainc

from . import __version__
from .experiments import STATISTICS, sandwich, soundness_report, statistic_rate_report, urn_rate_report
from .ggdist import GGParams, gg_cdf, gg_density, gg_moment, gg_sample, gg_upper_cutoff
from .laws import (bridge_local_time_law, excursion_height_law, meander_final_law, ub_law, vb_law, vp_law,
                   walk_local_time_law)
from .parallel import map_blocks
from .pmf import ExactPmf, rising
from .rng import DEFAULT_SEED, make_rng
from .stats import dkw_band, ks_statistic, pmf_chi_square
from .stein import Indicator, Ramp, bound_audit, clean_grid, stein_solve, thm5_bound
from .transforms import EquilibriumLaw, coupling_chain, power_bias_pmf
from .trees import (DecoratedBinaryTree, binary_to_plane, catalan, decorated_count, enumerate_decorated,
                    exact_tree_stat_law, plane_to_binary, remy_grow_batch, tree_stat_samples)
from .urns import (IDENTITIES, ResourceLimitError, UrnSpec, brute_force_pmf, identity_discrepancy, raw_moments,
                   raw_moments_from_pmf, rising_moment, simulate_urn_batch, urn_exact_pmf)
from .walks import (CLASSES, LatticePath, bridge_to_meander, enumerate_paths, excursion_to_tree,
                    meander_to_bridge, path_stat_law, tree_to_bridge, tree_to_excursion, trees_to_walk)

EXIT_OK, EXIT_CONFIG, EXIT_RESOURCE, EXIT_CHECK = 0, 1, 2, 3
MAX_SEED = 2**64


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# -- option and command tables ---------------------------------------------------------------------

def _bool(value) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, str) and value.lower() in ("true", "false", "1", "0"):
        return value.lower() in ("true", "1")
    raise ConfigError(f"expected a boolean, got {value!r}")


def _floats(value) -> list[float]:
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    if isinstance(value, (int, float)):
        return [float(value)]
    try:
        return [float(v) for v in str(value).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {value!r}") from None


@dataclass(frozen=True)
class Opt:
    name: str
    kind: Any
    default: Any
    help: str = ""
    choices: tuple | None = None

    @property
    def dest(self) -> str:
        return self.name.replace("-", "_")

    def coerce(self, value):
        if value is None:
            return None
        try:
            if self.kind is bool:
                out = _bool(value)
            elif self.kind is list:
                out = _floats(value)
            elif self.kind is int:
                if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                    raise ValueError
                out = int(value)
            else:
                out = self.kind(value)
        except (TypeError, ValueError):
            raise ConfigError(f"option {self.name}: invalid value {value!r}") from None
        if self.choices and out not in self.choices:
            raise ConfigError(f"option {self.name}: {out!r} not in {list(self.choices)}")
        return out


@dataclass
class Result:
    payload: Any
    csv: str | None = None


@dataclass(frozen=True)
class Command:
    path: tuple[str, ...]
    help: str
    opts: tuple[Opt, ...]
    run: Callable[[SimpleNamespace], Result]
    check: Callable[[SimpleNamespace, Result], list[tuple[str, bool, str]]]
    default_format: str = "json"


COMMON = (
    Opt("seed", int, DEFAULT_SEED, "64-bit seed for every random stream"),
    Opt("out", str, None, "output file (default stdout)"),
    Opt("manifest", str, None, "manifest path (default OUT.manifest.json, or stderr)"),
    Opt("format", str, None, "output format", ("json", "csv")),
    Opt("check", bool, False, "run the acceptance assertions; exit 3 on failure"),
)

URN = (Opt("b", int, 1, "initial black balls"), Opt("w", int, 1, "initial white balls"),
       Opt("l", int, 1, "immigration period"), Opt("n", int, 10, "draws"))
RATIONAL = Opt("rational", bool, False, "exact rational arithmetic")
GG = (Opt("k", float, 1.0, "GG shape k"), Opt("r", float, 1.0, "GG power r"))
XS = Opt("x", list, [0.5, 1.0, 2.0], "comma-separated evaluation points")
SIZE = Opt("size", int, 1000, "sample size")


def _num(value, exact: bool):
    return str(Fraction(value)) if exact else float(value)


def _pmf_payload(pmf: ExactPmf, exact: bool) -> dict:
    return {"offset": int(pmf.offset), "mass": [_num(m, exact) for m in pmf.mass]}


def _spec(a) -> UrnSpec:
    return UrnSpec(a.b, a.w, a.l, a.n)


def _lines(header: str, values) -> str:
    return header + "\n" + "".join(f"{v!r}\n" if isinstance(v, float) else f"{v}\n" for v in values)


def _table(cols: dict) -> str:
    keys = list(cols)
    rows = zip(*(cols[k] for k in keys))
    return ",".join(keys) + "\n" + "".join(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n"
                                           for row in rows)


# -- urn ---------------------------------------------------------------------------------------------------

def urn_pmf(a):
    pmf = urn_exact_pmf(_spec(a), exact=a.rational)
    return Result({"b": a.b, "w": a.w, "l": a.l, "n": a.n, "rational": a.rational, **_pmf_payload(pmf, a.rational)},
                  pmf.to_csv())


def urn_pmf_check(a, res):
    pmf = urn_exact_pmf(_spec(a), exact=a.rational)
    out = [("normalized", abs(float(pmf.total()) - 1.0) < 1e-12, str(pmf.total()))]
    mean = rising_moment(_spec(a), 1, exact=a.rational)
    out.append(("mean matches closed form", abs(float(pmf.mean() - mean)) < 1e-9 * max(1.0, float(mean)),
                f"{float(pmf.mean())} vs {float(mean)}"))
    if a.n <= 16:
        brute = brute_force_pmf(_spec(a))
        gap = pmf.sup_distance(brute) if a.rational else float(pmf.as_float().sup_distance(brute.as_float()))
        out.append(("equals brute-force enumeration", gap == 0 if a.rational else gap < 1e-12, str(gap)))
    return out


def _urn_samples(a) -> np.ndarray:
    spec = _spec(a)
    return np.concatenate(map_blocks(lambda g, s: simulate_urn_batch(spec, s, g), a.size, a.seed))


def urn_sample(a):
    x = _urn_samples(a)
    return Result({"b": a.b, "w": a.w, "l": a.l, "n": a.n, "samples": [int(v) for v in x]}, _lines("value", x))


def urn_sample_check(a, res):
    pval = pmf_chi_square(np.asarray(res.payload["samples"]), urn_exact_pmf(_spec(a)))
    return [("chi-square against exact law, p > 0.01", pval > 0.01, f"p={pval:.4g}")]


def urn_moments(a):
    spec = _spec(a)
    rising_m = [rising_moment(spec, m, exact=a.rational) for m in range(1, a.m + 1)]
    raw = raw_moments(spec, a.m, exact=a.rational)
    payload = {"b": a.b, "w": a.w, "l": a.l, "n": a.n, "rising": [_num(v, a.rational) for v in rising_m],
               "raw": [_num(v, a.rational) for v in raw]}
    return Result(payload, _table({"m": list(range(1, a.m + 1)), "rising": payload["rising"], "raw": payload["raw"]}))


def urn_moments_check(a, res):
    spec = _spec(a)
    pmf = urn_exact_pmf(spec, exact=a.rational)
    out = []
    for m in range(1, a.m + 1):
        direct = pmf.expect(lambda x: rising(x if a.rational else np.asarray(x, dtype=float), m))
        closed = rising_moment(spec, m, exact=a.rational)
        ok = direct == closed if a.rational else abs(direct - closed) <= 1e-9 * abs(closed)
        out.append((f"rising moment {m} matches pmf", ok, f"{direct} vs {closed}"))
    for m, (direct, closed) in enumerate(zip(raw_moments_from_pmf(pmf, a.m), raw_moments(spec, a.m, a.rational)), 1):
        ok = direct == closed if a.rational else abs(direct - closed) <= 1e-9 * abs(closed)
        out.append((f"raw moment {m} matches pmf", ok, f"{direct} vs {closed}"))
    return out


IDENTITY_OPTS = (Opt("name", str, "lemma4.10", "identity", IDENTITIES), Opt("j", int, 1), Opt("l", int, 1),
                 Opt("n", int, 6), Opt("b", int, 1), Opt("w", int, 1), Opt("r", int, 1), Opt("i", int, 0),
                 Opt("float", bool, False, "floating-point instead of rational arithmetic"))


def _identity_params(a) -> dict:
    keys = ("b", "w", "l", "n", "r") if a.name == "lemma4.2" else ("j", "l", "n", "i") if a.name == "lemma4.8" \
        else ("j", "l", "n")
    return {k: getattr(a, k) for k in keys}


def urn_identity(a):
    params = _identity_params(a)
    gap = identity_discrepancy(a.name, exact=not a.float, **params)
    return Result({"name": a.name, **params, "rational": not a.float, "discrepancy": _num(gap, not a.float)})


def urn_identity_check(a, res):
    gap = Fraction(res.payload["discrepancy"]) if not a.float else res.payload["discrepancy"]
    ok = gap == 0 if not a.float else gap < 1e-12
    return [(f"{a.name} discrepancy is zero", ok, str(gap))]


# -- gg ---------------------------------------------------------------------------------------------------------

def _gg(a) -> GGParams:
    return GGParams(a.k, a.r)


def gg_pdf(a):
    y = [float(v) for v in np.atleast_1d(gg_density(_gg(a), np.asarray(a.x)))]
    return Result({"k": a.k, "r": a.r, "x": a.x, "pdf": y}, _table({"x": a.x, "pdf": y}))


def gg_pdf_check(a, res):
    p = _gg(a)
    total, _ = integrate.quad(lambda z: gg_density(p, z), 0.0, gg_upper_cutoff(p, 1e-16), epsabs=1e-13, limit=200)
    out = [("density integrates to 1", abs(total - 1.0) < 1e-9, f"{total!r}")]
    for x, y in zip(a.x, res.payload["pdf"]):
        st = 1e-5 * max(1.0, x)
        fd = (gg_cdf(p, x + st) - gg_cdf(p, x - st)) / (2 * st) if x > st else y
        out.append((f"pdf({x}) is the CDF derivative", abs(fd - y) < 1e-6 * max(1.0, y), f"{fd!r} vs {y!r}"))
    return out


def gg_cdf_cmd(a):
    y = [float(v) for v in np.atleast_1d(gg_cdf(_gg(a), np.asarray(a.x)))]
    return Result({"k": a.k, "r": a.r, "x": a.x, "cdf": y}, _table({"x": a.x, "cdf": y}))


def gg_cdf_check(a, res):
    p = _gg(a)
    out = []
    for x, y in zip(a.x, res.payload["cdf"]):
        ref = float(gammainc(p.shape, max(x, 0.0) ** p.r)) if x > 0 else 0.0
        out.append((f"cdf({x}) matches the incomplete gamma reference", abs(ref - y) < 1e-13, f"{y!r} vs {ref!r}"))
    return out


def gg_moment_cmd(a):
    return Result({"k": a.k, "r": a.r, "order": a.order, "moment": gg_moment(_gg(a), a.order)})


def gg_moment_check(a, res):
    p = _gg(a)
    q, _ = integrate.quad(lambda z: z**a.order * gg_density(p, z), 0.0, gg_upper_cutoff(p, 1e-16),
                          epsabs=1e-13, epsrel=1e-12, limit=400)
    m = res.payload["moment"]
    return [("moment matches quadrature", abs(q - m) <= 1e-8 * max(1.0, abs(m)), f"{m!r} vs {q!r}")]


def gg_sample_cmd(a):
    p = _gg(a)
    x = np.concatenate(map_blocks(lambda g, s: gg_sample(p, g, s), a.size, a.seed))
    return Result({"k": a.k, "r": a.r, "samples": [float(v) for v in x]}, _lines("value", [float(v) for v in x]))


def gg_sample_check(a, res):
    p = _gg(a)
    stat = ks_statistic(np.asarray(res.payload["samples"]), lambda t: gg_cdf(p, t))
    band = dkw_band(a.size)
    return [("Kolmogorov statistic inside the 99% DKW band", stat <= band, f"{stat:.5g} <= {band:.5g}")]


# -- tree --------------------------------------------------------------------------------------------------------

def tree_grow(a):
    batch = remy_grow_batch(a.n, a.size, make_rng(a.seed, 0))
    trees = [batch.tree(s) for s in range(a.size)]
    payload = {"n": a.n, "trees": [t.to_string() for t in trees]}
    if a.plane:
        payload["plane"] = [binary_to_plane(t).to_nested() for t in trees]
    return Result(payload, _lines("tree", payload["trees"]))


def tree_grow_check(a, res):
    out = []
    ok_valid, ok_round = True, True
    for text in res.payload["trees"]:
        t = DecoratedBinaryTree.from_string(text)
        try:
            t.validate()
        except ValueError:
            ok_valid = False
        labels = sorted(t.label[v] for v in t.leaves())
        ok_valid &= labels == list(range(1, a.n + 1)) and t.size() == 2 * a.n - 1
        ok_round &= plane_to_binary(binary_to_plane(t)) == t
    out.append(("trees are valid decorated binary trees", ok_valid, f"{len(res.payload['trees'])} trees"))
    out.append(("plane-tree bijection round-trips", ok_round, ""))
    return out


def tree_enumerate(a):
    items = enumerate_decorated(a.n)
    trees = [group[0].to_string() for group, _ in items]
    probs = sorted({str(p) for _, p in items})
    return Result({"n": a.n, "count": len(items), "probabilities": probs, "trees": trees}, _lines("tree", trees))


def tree_enumerate_check(a, res):
    want = decorated_count(a.n)
    probs = res.payload["probabilities"]
    return [("count is C(n-1) n!", res.payload["count"] == want == catalan(a.n - 1) * math.factorial(a.n),
             f"{res.payload['count']} vs {want}"),
            ("every tree has probability 1/(C(n-1) n!)", probs == [str(Fraction(1, want))], ",".join(probs))]


def _tree_law(a) -> ExactPmf:
    if a.stat == "Ub":
        return ub_law(a.n, a.k, exact=a.rational)
    if a.stat == "Vb":
        if a.k != 1:
            raise ValueError("V^b is defined for k = 1 only")
        return vb_law(a.n, exact=a.rational)
    return vp_law(a.n, a.k, convention="nodes", exact=a.rational)


def tree_stat(a):
    law = _tree_law(a)
    payload = {"stat": a.stat, "n": a.n, "k": a.k, **_pmf_payload(law, a.rational)}
    if a.size:
        x = tree_stat_samples(a.stat, a.n, a.k, a.size, make_rng(a.seed, 0))
        payload["sample_mean"] = float(np.mean(x))
    return Result(payload, law.to_csv())


def tree_stat_check(a, res):
    law = _tree_law(a)
    out = []
    if a.n <= 6:
        oracle = ExactPmf.from_dict(exact_tree_stat_law(a.stat, a.n, a.k))
        exact = law if law.exact else urn_law_exact(a)
        out.append(("urn law equals tree enumeration", exact.sup_distance(oracle) == 0, ""))
    size = max(a.size, 20_000)
    x = tree_stat_samples(a.stat, a.n, a.k, size, make_rng(a.seed, 1))
    pval = pmf_chi_square(x, law.as_float())
    out.append(("Remy samples match the urn law, p > 0.01", pval > 0.01, f"p={pval:.4g}"))
    return out


def urn_law_exact(a) -> ExactPmf:
    return _tree_law(SimpleNamespace(**{**vars(a), "rational": True}))


# -- walk -------------------------------------------------------------------------------------------------

def walk_map(a):
    if a.inverse:
        if a.path is None:
            raise ValueError("--inverse needs --path")
        p = LatticePath.from_ud(a.path)
        if a.kind == "excursion":
            return Result({"kind": a.kind, "path": a.path, "tree": excursion_to_tree(p).to_string()})
        if a.kind == "meander":
            return Result({"kind": a.kind, "path": a.path, "bridge": meander_to_bridge(p).to_ud()})
        raise ValueError("inverse maps exist for excursion and meander")
    if a.tree is None:
        raise ValueError("--tree is required")
    t = DecoratedBinaryTree.from_string(a.tree)
    if a.kind == "excursion":
        p = tree_to_excursion(t)
    elif a.kind == "bridge":
        p = tree_to_bridge(t, a.spine_label)
    elif a.kind == "meander":
        p = bridge_to_meander(tree_to_bridge(t, a.spine_label))
    else:
        if a.tree2 is None:
            raise ValueError("kind=walk needs --tree2")
        p = trees_to_walk(t, DecoratedBinaryTree.from_string(a.tree2), a.sign, a.spine_label, a.meander_label)
    return Result({"kind": a.kind, "tree": a.tree, "path": p.to_ud(), "steps": list(p.steps)})


def walk_map_check(a, res):
    if a.inverse:
        p = LatticePath.from_ud(a.path)
        if a.kind == "excursion":
            back = tree_to_excursion(DecoratedBinaryTree.from_string(res.payload["tree"]))
        else:
            back = bridge_to_meander(LatticePath.from_ud(res.payload["bridge"]))
        return [("inverse map round-trips", back == p, back.to_ud())]
    p = LatticePath.from_ud(res.payload["path"])
    out = [(f"path is a {a.kind}", a.kind in p.classes(), ",".join(sorted(p.classes())))]
    if a.kind == "excursion":
        back = excursion_to_tree(p)
        out.append(("excursion decodes to the same shape", back.shape_key() ==
                    DecoratedBinaryTree.from_string(a.tree).shape_key(), back.to_string()))
    if a.kind == "meander":
        bridge = tree_to_bridge(DecoratedBinaryTree.from_string(a.tree), a.spine_label)
        out.append(("meander decodes to its bridge", meander_to_bridge(p) == bridge, bridge.to_ud()))
    return out


def _path_count(cls: str, length: int) -> int:
    if cls == "walk":
        return 2**length
    if cls == "bridge":
        return math.comb(length, length // 2) if length % 2 == 0 else 0
    if cls == "excursion":
        return catalan(length // 2 - 1) if length % 2 == 0 and length > 0 else 0
    return math.comb(length - 1, (length - 1) // 2) if length > 0 else 1


def walk_enumerate(a):
    paths = enumerate_paths(a.cls, a.length)
    return Result({"class": a.cls, "length": a.length, "count": len(paths), "paths": [p.to_ud() for p in paths]},
                  _lines("path", [p.to_ud() for p in paths]))


def walk_enumerate_check(a, res):
    want = _path_count(a.cls, a.length)
    return [("count matches the closed form", res.payload["count"] == want, f"{res.payload['count']} vs {want}")]


WALK_STATS = {("walk", "L"), ("bridge", "L"), ("excursion", "height_uniform"), ("meander", "final")}


def _walk_law(a) -> ExactPmf:
    key = (a.cls, a.stat)
    if key not in WALK_STATS:
        raise ValueError(f"no urn embedding for {a.stat} on {a.cls}; choose from {sorted(WALK_STATS)}")
    if a.cls in ("bridge", "excursion") and (a.length % 2 or a.length < 2):
        raise ValueError("bridges and excursions need even positive length")
    if a.cls == "walk":
        return walk_local_time_law(a.length, exact=a.rational)
    if a.cls == "bridge":
        return bridge_local_time_law(a.length // 2, exact=a.rational)
    if a.cls == "excursion":
        return excursion_height_law(a.length // 2, exact=a.rational)
    return meander_final_law(a.length, exact=a.rational)


def walk_stat(a):
    law = _walk_law(a)
    return Result({"class": a.cls, "stat": a.stat, "length": a.length, **_pmf_payload(law, a.rational)}, law.to_csv())


def walk_stat_check(a, res):
    if a.length > 12:
        law = _walk_law(a)
        return [("law is normalized", abs(float(law.total()) - 1.0) < 1e-12, str(law.total()))]
    law = _walk_law(SimpleNamespace(**{**vars(a), "rational": True}))
    oracle = ExactPmf.from_dict(path_stat_law(a.cls, a.length, a.stat))
    return [("urn law equals path enumeration", law.sup_distance(oracle) == 0, "")]


# -- stein -------------------------------------------------------------------------------------------------

def _test_function(a):
    if a.h == "indicator":
        return Indicator(a.t)
    return Ramp(a.s, a.eps)


def stein_solve_cmd(a):
    sol = stein_solve(_gg(a), _test_function(a))
    x = np.asarray(a.x)
    f, fp, g = (np.atleast_1d(v).tolist() for v in (sol.f(x), sol.fprime(x), sol.g(x)))
    return Result({"k": a.k, "r": a.r, "h": repr(sol.h), "mean_h": sol.mean, "x": a.x, "f": f, "fprime": fp, "g": g},
                  _table({"x": a.x, "f": f, "fprime": fp, "g": g}))


def stein_solve_check(a, res):
    p = _gg(a)
    sol = stein_solve(p, _test_function(a))
    grid = np.linspace(1e-3, gg_upper_cutoff(p, 1e-10), 1000)
    res_max = sol.residual(grid)
    x = clean_grid(grid, sol.h.breakpoints)
    gap = float(np.max(np.abs(sol.g(x) - sol.g_derivative_form(x))))
    return [("Stein residual < 1e-8", res_max < 1e-8, f"{res_max:.3g}"),
            ("both forms of g agree within 1e-6", gap < 1e-6, f"{gap:.3g}")]


def stein_audit_cmd(a):
    return Result(bound_audit(a.k, a.r, points=a.points).to_dict())


def stein_audit_check(a, res):
    out = [(f"{name} ratio <= 1 + 1e-6", e["ok"], f"{e['max_ratio']:.6g}")
           for name, e in sorted(res.payload["inequalities"].items())]
    out.append(("residual < 1e-8", res.payload["max_residual"] < 1e-8, f"{res.payload['max_residual']:.3g}"))
    return out


def stein_bound_cmd(a):
    return Result({"k": a.k, "r": a.r, "beta": a.beta, "EW_r_minus_1": a.ew, "exceedance": a.exceedance,
                   "bound": thm5_bound(a.k, a.r, a.beta, a.ew, a.exceedance)})


def stein_bound_check(a, res):
    b = res.payload["bound"]
    up_beta = thm5_bound(a.k, a.r, min(1.0, a.beta * 1.5), a.ew, a.exceedance)
    up_exc = thm5_bound(a.k, a.r, a.beta, a.ew, min(1.0, a.exceedance + 0.01))
    return [("bound is non-negative", b >= 0, f"{b!r}"),
            ("monotone in beta", up_beta >= b, f"{up_beta!r}"),
            ("monotone in exceedance", up_exc >= b, f"{up_exc!r}")]


# -- transform -----------------------------------------------------------------------------------------

def _source_pmf(a) -> ExactPmf:
    if a.pmf is not None:
        try:
            return ExactPmf.from_json(a.pmf)
        except (ValueError, KeyError, TypeError) as err:
            raise ConfigError(f"--pmf: {err}") from None
    return urn_exact_pmf(_spec(a), exact=a.rational)


def transform_bias(a):
    biased = power_bias_pmf(_source_pmf(a), a.r)
    return Result({"r": a.r, **_pmf_payload(biased, biased.exact)}, biased.to_csv())


def transform_bias_check(a, res):
    base = _source_pmf(a)
    biased = power_bias_pmf(base, a.r)
    total = biased.total()
    out = [("biased law is normalized", abs(float(total) - 1.0) < 1e-12, str(total))]
    z = base.moment(a.r)
    worst = max((abs(float(biased.prob(x) - m * Fraction(x) ** a.r / z)) if biased.exact
                 else abs(biased.prob(x) - m * x**a.r / z) for x, m in base.items()), default=0.0)
    out.append(("mass proportional to x^r p(x)", worst < 1e-12, f"{worst:.3g}"))
    return out


def transform_equilibrium(a):
    e = EquilibriumLaw(_source_pmf(a), a.k, a.r)
    y = np.atleast_1d(e.cdf(np.asarray(a.x))).tolist()
    return Result({"k": a.k, "r": a.r, "x": a.x, "cdf": y, "mean": e.mean()}, _table({"x": a.x, "cdf": y}))


def transform_equilibrium_check(a, res):
    base = _source_pmf(a)
    e = EquilibriumLaw(base, a.k, a.r)
    top = float(e.biased.support.max())
    t = np.linspace(0.0, top, 2001)
    c = e.cdf(t)
    out = [("CDF is 0 at 0 and 1 at max support", c[0] == 0.0 and abs(c[-1] - 1.0) < 1e-12, f"{float(c[-1])!r}"),
           ("CDF is nondecreasing", bool(np.all(np.diff(c) >= -1e-15)), "")]
    if a.k == 1 and a.r == 1:
        f = base.as_float()
        want = f.moment(2) / (2.0 * f.mean())
        out.append(("mean equals E W^2 / (2 E W)", abs(e.mean() - want) < 1e-10 * max(1.0, want), f"{e.mean()!r}"))
    return out


def transform_couple(a):
    res = coupling_chain(a.j, a.l, a.n, beta=a.beta, sample_size=a.size, seed=a.seed)
    return Result({**res.record(), "j": a.j, "l": a.l, "mu_n": res.mu_n, "d_tv": res.d_tv, "max_gap": res.max_gap})


def transform_couple_check(a, res):
    r = coupling_chain(a.j, a.l, a.n, beta=a.beta, sample_size=a.size, seed=a.seed, keep_samples=True)
    w_law = urn_exact_pmf(UrnSpec(1, a.j, a.l, a.n))
    pval = pmf_chi_square(r.samples["W"], w_law)
    eq = EquilibriumLaw(w_law, a.j, a.l + 1)
    stat = ks_statistic(r.samples["W_star"], eq.cdf)
    band = dkw_band(a.size)
    return [("W matches its exact law, p > 0.01", pval > 0.01, f"p={pval:.4g}"),
            ("W* matches the equilibrium CDF within the DKW band", stat <= band, f"{stat:.4g} <= {band:.4g}")]


# -- rate and soundness -------------------------------------------------------------------------------------

def _ngrid(a) -> list[int]:
    if a.nmin < 1 or a.nmax < a.nmin:
        raise ValueError("need 1 <= nmin <= nmax")
    grid, n = [], a.nmin
    while n <= a.nmax:
        grid.append(n)
        n *= 2
    return grid


def rate_cmd(a):
    grid = _ngrid(a)
    report = urn_rate_report(a.j, a.l, grid) if a.statistic == "urn" else statistic_rate_report(a.statistic, grid)
    payload = {**report.to_dict(), "sandwich": sandwich(report)}
    return Result(payload, report.to_csv())


def rate_check(a, res):
    slope, theory = res.payload["slope"], res.payload["theory_slope"]
    ratio = res.payload["sandwich"]["ratio"]
    return [("slope within 0.15 of theory", abs(slope - theory) <= 0.15, f"{slope:.4f} vs {theory:.4f}"),
            ("sandwich min > 0", res.payload["sandwich"]["min"] > 0, f"{res.payload['sandwich']['min']:.4g}"),
            ("sandwich max/min < 10", ratio < 10, f"{ratio:.4g}")]


def soundness_cmd(a):
    rep = soundness_report(a.j, a.l, _ngrid(a), sample_size=a.size, seed=a.seed)
    d = rep.to_dict()
    cols = {key: [row[key] for row in d["rows"]] for key in ("n", "beta", "exceedance", "bound", "d_K")}
    return Result(d, _table(cols))


def soundness_check(a, res):
    return [(f"bound >= exact d_K at n={row['n']}", row["holds"], f"{row['bound']:.4g} >= {row['d_K']:.4g}")
            for row in res.payload["rows"]]


SOURCE = (Opt("pmf", str, None, "base law as JSON {offset, mass}; default is the urn law"),) + URN + (RATIONAL,)
GRID = (Opt("nmin", int, 32), Opt("nmax", int, 16384))

COMMANDS = (
    Command(("urn", "pmf"), "exact urn law", URN + (RATIONAL,), urn_pmf, urn_pmf_check),
    Command(("urn", "sample"), "simulate the urn", URN + (SIZE,), urn_sample, urn_sample_check),
    Command(("urn", "moments"), "rising-factorial and raw moments", URN + (Opt("m", int, 4), RATIONAL),
            urn_moments, urn_moments_check),
    Command(("urn", "identity"), "check a distributional identity", IDENTITY_OPTS, urn_identity, urn_identity_check),
    Command(("identity",), "alias of 'urn identity'", IDENTITY_OPTS, urn_identity, urn_identity_check),
    Command(("gg", "pdf"), "GG density", GG + (XS,), gg_pdf, gg_pdf_check),
    Command(("gg", "cdf"), "GG distribution function", GG + (XS,), gg_cdf_cmd, gg_cdf_check),
    Command(("gg", "moment"), "GG moment", GG + (Opt("order", float, 1.0),), gg_moment_cmd, gg_moment_check),
    Command(("gg", "sample"), "GG samples", GG + (SIZE,), gg_sample_cmd, gg_sample_check),
    Command(("tree", "grow"), "grow Remy trees", (Opt("n", int, 5), Opt("size", int, 1), Opt("plane", bool, False)),
            tree_grow, tree_grow_check),
    Command(("tree", "enumerate"), "all decorated trees with their Remy probabilities", (Opt("n", int, 3),),
            tree_enumerate, tree_enumerate_check),
    Command(("tree", "stat"), "law of a tree statistic through its urn embedding",
            (Opt("stat", str, "Ub", choices=("Ub", "Vb", "Vp")), Opt("n", int, 6), Opt("k", int, 1),
             Opt("size", int, 0, "also draw this many Remy samples"), RATIONAL), tree_stat, tree_stat_check),
    Command(("walk", "map"), "tree-to-path bijections",
            (Opt("kind", str, "excursion", choices=("excursion", "bridge", "meander", "walk")),
             Opt("tree", str, None, "decorated tree, e.g. '((1 2) 3)'"), Opt("tree2", str, None),
             Opt("sign", int, 1, choices=(1, -1)), Opt("spine-label", int, 1), Opt("meander-label", int, 0),
             Opt("inverse", bool, False), Opt("path", str, None, "U/D string for --inverse")),
            walk_map, walk_map_check),
    Command(("walk", "enumerate"), "all paths of a class",
            (Opt("cls", str, "bridge", choices=CLASSES), Opt("length", int, 6)), walk_enumerate, walk_enumerate_check),
    Command(("walk", "stat"), "law of a path statistic through its urn embedding",
            (Opt("cls", str, "bridge", choices=CLASSES), Opt("stat", str, "L", choices=("L", "final", "height_uniform")),
             Opt("length", int, 10), RATIONAL), walk_stat, walk_stat_check),
    Command(("stein", "solve"), "solve the Stein equation",
            GG + (Opt("h", str, "indicator", choices=("indicator", "ramp")), Opt("t", float, 1.0),
                  Opt("s", float, 1.0), Opt("eps", float, 0.1), XS), stein_solve_cmd, stein_solve_check),
    Command(("stein", "audit"), "numerical audit of the solution bounds", GG + (Opt("points", int, 2000),),
            stein_audit_cmd, stein_audit_check),
    Command(("stein", "bound"), "explicit Kolmogorov bound",
            GG + (Opt("beta", float, 0.1), Opt("ew", float, 1.0, "E W^(r-1)"), Opt("exceedance", float, 0.0)),
            stein_bound_cmd, stein_bound_check),
    Command(("transform", "bias"), "r-power bias", SOURCE + (Opt("r", int, 1),), transform_bias, transform_bias_check),
    Command(("transform", "equilibrium"), "equilibrium transform CDF",
            SOURCE + (Opt("k", int, 1), Opt("r", int, 1), XS), transform_equilibrium, transform_equilibrium_check),
    Command(("transform", "couple"), "coupling-chain exceedance",
            (Opt("j", int, 1), Opt("l", int, 1), Opt("n", int, 64), Opt("beta", float, None),
             Opt("size", int, 100_000)), transform_couple, transform_couple_check),
    Command(("rate",), "exact Kolmogorov distance along an n-grid with a log-log fit",
            (Opt("j", int, 1), Opt("l", int, 1), Opt("statistic", str, "urn", choices=("urn",) + STATISTICS)) + GRID,
            rate_cmd, rate_check, default_format="csv"),
    Command(("soundness",), "explicit bound from coupling exceedances against exact d_K",
            (Opt("j", int, 1), Opt("l", int, 1), Opt("size", int, 100_000)) + GRID, soundness_cmd, soundness_check),
)


# -- parsing and running --------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="urnflow", description="Urn, tree, walk and Stein-bound experiments.")
    parser.add_argument("--version", action="version", version=f"urnflow {__version__}")
    top = parser.add_subparsers(dest="group", metavar="COMMAND")
    top.required = True
    groups: dict[str, argparse._SubParsersAction] = {}
    run = top.add_parser("run", help="run the command named in a JSON config ('command': 'urn pmf')")
    run.add_argument("config")
    _add_options(run, COMMON)
    for cmd in COMMANDS:
        if len(cmd.path) == 1:
            sub = top.add_parser(cmd.path[0], help=cmd.help)
        else:
            if cmd.path[0] not in groups:
                g = top.add_parser(cmd.path[0], help=f"{cmd.path[0]} commands")
                groups[cmd.path[0]] = g.add_subparsers(dest="action", metavar="ACTION")
                groups[cmd.path[0]].required = True
            sub = groups[cmd.path[0]].add_parser(cmd.path[1], help=cmd.help)
        sub.set_defaults(_command=cmd)
        sub.add_argument("--config", default=argparse.SUPPRESS, help="JSON file of option values")
        _add_options(sub, cmd.opts + COMMON)
    return parser


def _add_options(sub: argparse.ArgumentParser, opts) -> None:
    for opt in opts:
        flag = "--" + opt.name
        if opt.kind is bool:
            sub.add_argument(flag, dest=opt.dest, action="store_true", default=argparse.SUPPRESS, help=opt.help)
        else:
            sub.add_argument(flag, dest=opt.dest, default=argparse.SUPPRESS, help=opt.help,
                             metavar=opt.name.upper().replace("-", "_"))


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config: {err}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return {key.replace("-", "_"): value for key, value in data.items()}


def resolve(cmd: Command, config: dict, flags: dict) -> SimpleNamespace:
    """Merge defaults, then config values, then command-line flags, validating each option."""
    opts = {opt.dest: opt for opt in cmd.opts + COMMON}
    unknown = sorted(set(config) - set(opts))
    if unknown:
        raise ConfigError(f"unknown config keys for '{' '.join(cmd.path)}': {unknown}")
    values = {dest: opt.default for dest, opt in opts.items()}
    values.update({k: opts[k].coerce(v) for k, v in config.items()})
    values.update({k: opts[k].coerce(v) for k, v in flags.items() if k in opts})
    if values["format"] is None:
        values["format"] = cmd.default_format
    if not 0 <= values["seed"] < MAX_SEED:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    return SimpleNamespace(**values)


def _find_command(path) -> Command:
    if isinstance(path, str):
        path = tuple(path.split())
    for cmd in COMMANDS:
        if cmd.path == tuple(path):
            return cmd
    raise ConfigError(f"unknown command {' '.join(path)!r}")


def render(cmd: Command, args: SimpleNamespace, result: Result) -> str:
    if args.format == "csv":
        if result.csv is None:
            raise ConfigError(f"'{' '.join(cmd.path)}' has no CSV output")
        return result.csv
    return json.dumps(result.payload, indent=2, sort_keys=True) + "\n"


def _versions() -> dict:
    return {"urnflow": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def execute(cmd: Command, args: SimpleNamespace, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    started = time.perf_counter()
    result = cmd.run(args)
    text = render(cmd, args, result)
    run_time = time.perf_counter() - started
    outputs = {}
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
        outputs[args.out] = hashlib.sha256(text.encode()).hexdigest()
    else:
        stdout.write(text)
    checks = []
    check_time = 0.0
    if args.check:
        t0 = time.perf_counter()
        checks = cmd.check(args, result)
        check_time = time.perf_counter() - t0
        for name, ok, detail in checks:
            stderr.write(f"{'PASS' if ok else 'FAIL'} {name}" + (f" ({detail})" if detail else "") + "\n")
    manifest = {
        "command": " ".join(cmd.path),
        "config": {k: v for k, v in sorted(vars(args).items())},
        "versions": _versions(),
        "outputs": outputs,
        "output_sha256": hashlib.sha256(text.encode()).hexdigest(),
        "checks": [{"name": n, "ok": bool(ok), "detail": d} for n, ok, d in checks],
        "durations": {"run_s": run_time, "check_s": check_time},
    }
    body = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    path = args.manifest or (args.out + ".manifest.json" if args.out else None)
    if path:
        with open(path, "w") as fh:
            fh.write(body)
    else:
        stderr.write(body)
    return EXIT_CHECK if any(not ok for _, ok, _ in checks) else EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        flags = dict(vars(ns))
        if ns.group == "run":
            config = _load_config(ns.config)
            cmd = _find_command(config.pop("command", ""))
        else:
            cmd = flags.pop("_command")
            config = _load_config(flags.pop("config")) if "config" in flags else {}
        for key in ("group", "action", "_command", "config"):
            flags.pop(key, None)
        args = resolve(cmd, config, flags)
        return execute(cmd, args)
    except ResourceLimitError as err:
        sys.stderr.write(f"urnflow: resource limit: {err}\n")
        return EXIT_RESOURCE
    except (ConfigError, ValueError) as err:
        sys.stderr.write(f"urnflow: invalid configuration: {err}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
