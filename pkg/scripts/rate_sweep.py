"""Exact Kolmogorov-distance rates for urn laws and tree/walk statistics, with log-log fits."""

from dataclasses import dataclass
from pathlib import Path

from _config import config_from_argv, write_json

from urnflow.experiments import sandwich, statistic_rate_report, urn_rate_report


@dataclass(frozen=True)
class RateSweepConfig:
    """Urn pairs (j, l) and statistic families along n = nmin, 2 nmin, ..., nmax."""

    pairs: tuple = ((1, 1), (2, 1), (1, 2), (1, 3))
    statistics: tuple = ("Ub1", "Ub2", "L", "Lb")
    nmin: int = 32
    nmax: int = 16384
    outdir: str = "results/rates"


def grid(cfg: RateSweepConfig) -> list[int]:
    out, n = [], cfg.nmin
    while n <= cfg.nmax:
        out.append(n)
        n *= 2
    return out


def main(cfg: RateSweepConfig) -> list[dict]:
    out = Path(cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)
    ns = grid(cfg)
    reports = [(f"urn_j{j}_l{l}", urn_rate_report(j, l, ns)) for j, l in cfg.pairs]
    reports += [(f"stat_{name}", statistic_rate_report(name, ns)) for name in cfg.statistics]
    summary = []
    for tag, rep in reports:
        (out / f"{tag}.csv").write_text(rep.to_csv())
        write_json(out / f"{tag}.json", rep.to_dict())
        band = sandwich(rep)
        row = {"label": rep.label, "slope": rep.slope, "theory": rep.theory_slope, "sandwich_ratio": band["ratio"]}
        summary.append(row)
        print(f"{rep.label:18s} slope {rep.slope:+.4f}  theory {rep.theory_slope:+.4f}  max/min {band['ratio']:.3f}")
    write_json(out / "summary.json", summary)
    return summary


if __name__ == "__main__":
    main(config_from_argv(RateSweepConfig))
