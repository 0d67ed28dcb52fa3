"""Exact urn laws of tree and path statistics against brute-force enumeration."""

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from _config import config_from_argv, write_json

from urnflow.laws import (bridge_local_time_law, excursion_height_law, meander_final_law, ub_law, vb_law, vp_law,
                          walk_local_time_law)
from urnflow.pmf import ExactPmf
from urnflow.trees import exact_tree_stat_law
from urnflow.walks import path_stat_law


@dataclass(frozen=True)
class EmbeddingConfig:
    max_leaves: int = 6
    max_length: int = 12
    outdir: str = "results/embeddings"


def _gap(law: ExactPmf, oracle: dict) -> Fraction:
    return law.sup_distance(ExactPmf.from_dict(oracle))


def tree_rows(cfg: EmbeddingConfig) -> list[dict]:
    rows = []
    for n in range(1, cfg.max_leaves + 1):
        for k in range(1, n + 1):
            rows.append({"stat": "Ub", "n": n, "k": k, "gap": _gap(ub_law(n, k), exact_tree_stat_law("Ub", n, k))})
            for conv in ("nodes", "edges"):
                rows.append({"stat": f"Vp[{conv}]", "n": n, "k": k,
                             "gap": _gap(vp_law(n, k, convention=conv), exact_tree_stat_law("Vp", n, k))})
        rows.append({"stat": "Vb", "n": n, "k": 1, "gap": _gap(vb_law(n), exact_tree_stat_law("Vb", n))})
    return rows


def path_rows(cfg: EmbeddingConfig) -> list[dict]:
    rows = []
    for length in range(1, cfg.max_length + 1):
        rows.append({"stat": "walk L", "length": length,
                     "gap": _gap(walk_local_time_law(length), path_stat_law("walk", length, "L"))})
        rows.append({"stat": "meander final", "length": length,
                     "gap": _gap(meander_final_law(length), path_stat_law("meander", length, "final"))})
        if length % 2 == 0:
            rows.append({"stat": "bridge L", "length": length,
                         "gap": _gap(bridge_local_time_law(length // 2), path_stat_law("bridge", length, "L"))})
            oracle = path_stat_law("excursion", length, "height_uniform")
            for conv in ("n-1", "n"):
                rows.append({"stat": f"excursion height[{conv}]", "length": length,
                             "gap": _gap(excursion_height_law(length // 2, conv), oracle)})
    return rows


def main(cfg: EmbeddingConfig) -> dict:
    out = Path(cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)
    rows = tree_rows(cfg) + path_rows(cfg)
    for row in rows:
        size = f"n={row['n']} k={row['k']}" if "n" in row else f"length={row['length']}"
        print(f"{row['stat']:26s} {size:12s} gap {row['gap']}")
    result = {"rows": [{**r, "gap": str(r["gap"])} for r in rows],
              "length4_excursion_height": {str(k): str(v) for k, v in
                                           sorted(path_stat_law("excursion", 4, "height_uniform").items())}}
    write_json(out / "embeddings.json", result)
    return result


if __name__ == "__main__":
    main(config_from_argv(EmbeddingConfig))
