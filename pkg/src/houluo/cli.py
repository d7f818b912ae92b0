"""Command-line entry point: ``houluo <subcommand> [--config PATH] [--out DIR]``."""
from __future__ import annotations

import argparse
import sys

from .config import EXPERIMENTS


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="houluo",
                                 description="1D boundary-layer blow-up model: simulations and checks")
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "evolve one scenario and write series.csv",
        "verify-lemmas": "run the kernel inequality scans",
        "ode-compare": "integrate the I'' = C I^2 comparator",
        "sweep": "run a parameter grid and write summary.csv",
        "derive-kernel": "periodization and Green's-function checks",
    }
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", metavar="PATH", default=None,
                       required=name in ("simulate", "sweep"), help="YAML run configuration")
        p.add_argument("--out", metavar="DIR", default="out", help="output directory (default: out)")
        p.add_argument("--seed", type=int, default=None,
                       help="recorded in the manifest; nothing in the runs is random")
        p.add_argument("--threads", type=int, default=1, metavar="K",
                       help="compiled-kernel threads and sweep worker processes")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("config error: --threads: must be >= 1", file=sys.stderr)
        return 2
    from .runner import run_experiment
    return run_experiment(args.config, args.out, args.seed, args.threads, args.command)


if __name__ == "__main__":
    sys.exit(main())
