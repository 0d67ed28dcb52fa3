"""Numerical audit of the Stein-solution bounds over a (k, r) grid."""

from dataclasses import dataclass
from pathlib import Path

from _config import config_from_argv, write_json

from urnflow.stein import bound_audit


@dataclass(frozen=True)
class AuditConfig:
    ks: tuple = (1, 2, 3, 4, 5, 6)
    rs: tuple = (1, 2, 3, 4, 5, 6)
    extra_r: tuple = (1.5,)
    points: int = 2000
    outdir: str = "results/stein"


def main(cfg: AuditConfig) -> dict:
    out = Path(cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)
    worst: dict[str, float] = {}
    failures = []
    for k in cfg.ks:
        for r in tuple(cfg.rs) + tuple(cfg.extra_r):
            rep = bound_audit(k, r, points=cfg.points)
            write_json(out / f"audit_k{k}_r{r}.json", rep.to_dict())
            for name, e in rep.entries.items():
                worst[name] = max(worst.get(name, 0.0), e.max_ratio)
            worst["residual"] = max(worst.get("residual", 0.0), rep.max_residual)
            if not rep.ok:
                failures.append((k, r))
            print(f"k={k} r={r}: {'ok' if rep.ok else 'FAIL'}  residual {rep.max_residual:.2e}")
    summary = {"worst_ratio": worst, "failures": failures}
    write_json(out / "summary.json", summary)
    for name, v in sorted(worst.items()):
        print(f"{name:18s} {v:.6g}")
    return summary


if __name__ == "__main__":
    main(config_from_argv(AuditConfig))
