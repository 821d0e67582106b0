"""Command-line entry point: ``sampler run|presets|validate``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import PRESETS, ConfigError, parse_config
from .experiments import run_experiment

EXIT_OK, EXIT_JOB_FAILED, EXIT_CONFIG = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sampler", description="Run l1-posterior sampling experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("--config", required=True, help="TOML config file")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--workers", type=int, default=None)
    run.add_argument("--out", default=None, help="output directory (overrides env and config)")
    run.add_argument("-v", "--verbose", action="store_true")
    sub.add_parser("presets", help="list presets and their defaults")
    val = sub.add_parser("validate", help="parse and validate a config without running it")
    val.add_argument("--config", required=True)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "presets":
        for name, defaults in PRESETS.items():
            print(name)
            for k in sorted(defaults):
                print(f"  {k} = {defaults[k]!r}")
        return EXIT_OK
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        overrides["workers"] = args.workers
    try:
        cfg = parse_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate":
        print(json.dumps(cfg.to_dict(), indent=1, sort_keys=True))
        return EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    report = run_experiment(cfg, out_dir=args.out)
    for f in report.files:
        print(f)
    if report.n_failed:
        print(f"{report.n_failed} job(s) failed; see {report.out_dir / 'summary.json'}", file=sys.stderr)
        return EXIT_JOB_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
