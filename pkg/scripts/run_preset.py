"""Run one or more presets and print the headline numbers of each.

    python scripts/run_preset.py dim20 haar_deconv --seed 3 --out runs
"""
from __future__ import annotations

import argparse
import json
from pathlib import Path

from l1sampling.harness.config import PRESET_NAMES, parse_config
from l1sampling.harness.experiments import run_experiment


def headline(summary: dict) -> dict:
    res = dict(summary["results"])
    res.pop("oracle", None)
    res["min_u_seen"] = min(
        (j["min_u_seen"] for j in summary["jobs"] if j.get("min_u_seen") is not None), default=None
    )
    res["failed_jobs"] = summary["n_failed"]
    res["wall_time_s"] = round(summary["wall_time"], 1)
    if summary["preset"] == "mixing_1d":
        res["mixing_r2"] = {j["sampler"]: j["mixing"]["fit"]["r2"] for j in summary["jobs"] if "mixing" in j}
    if summary["preset"] == "null_g0":
        res["max_ks"] = {k: max(v) for j in summary["jobs"] for k, v in j.get("ks", {}).items()}
    return res


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("presets", nargs="+", choices=PRESET_NAMES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="runs")
    args = p.parse_args()
    for name in args.presets:
        cfg = parse_config({"preset": name, "seed": args.seed, "workers": args.workers})
        rep = run_experiment(cfg, out_dir=Path(args.out) / f"{name}_seed{args.seed}")
        print(name, json.dumps(headline(rep.summary), sort_keys=True))


if __name__ == "__main__":
    main()
