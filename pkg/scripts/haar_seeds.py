"""Jump-localisation hits of the wavelet deconvolution preset across seeds."""
from __future__ import annotations

import argparse
from pathlib import Path

from l1sampling.harness.config import parse_config
from l1sampling.harness.experiments import run_experiment


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    p.add_argument("--out", default="runs/haar_seeds")
    args = p.parse_args()
    for seed in args.seeds:
        rep = run_experiment(parse_config({"preset": "haar_deconv", "seed": seed}), out_dir=Path(args.out) / f"seed{seed}")
        print(f"seed {seed}: top-10 gap hits {rep.summary['results']['top10_gap_hits']}")


if __name__ == "__main__":
    main()
