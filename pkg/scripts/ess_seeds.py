"""Minimum ESS per sampler for the dim20 preset over several seeds, with medians."""
from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from l1sampling.harness.config import parse_config
from l1sampling.harness.experiments import run_experiment


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    p.add_argument("--out", default="runs/ess_seeds")
    args = p.parse_args()
    table: dict[str, list[float]] = {}
    for seed in args.seeds:
        rep = run_experiment(parse_config({"preset": "dim20", "seed": seed}), out_dir=Path(args.out) / f"seed{seed}")
        for name, v in rep.summary["results"]["min_ess"].items():
            table.setdefault(name, []).append(v)
        print(f"seed {seed}: " + ", ".join(f"{k} {v[-1]:.0f}" for k, v in table.items()))
    print("median: " + ", ".join(f"{k} {np.median(v):.0f}" for k, v in table.items()))


if __name__ == "__main__":
    main()
