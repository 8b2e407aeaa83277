"""Command-line entry point.

    polycheck attack --config configs/attack_q17_c1_fixed.yaml --seed 7 --format table
"""

from __future__ import annotations

import argparse
import sys

from .config import FORMATS, MODES, ConfigError, load_config
from .experiments import run_experiment
from .report import emit_report, render

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BOUND = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polycheck", description="Verifiable polynomial evaluation experiments")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--config", required=True, help="YAML experiment config")
        p.add_argument("--seed", type=int, default=None, help="master seed (u64), overrides the config")
        p.add_argument("--out", default=None, help="output path (stdout when omitted)")
        p.add_argument("--format", choices=FORMATS, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--self-check", action="store_true",
                       help="exit 3 if any confidence interval lies wholly above its bound")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, mode=args.mode, seed=args.seed, output=args.out,
                          format=args.format, threads=args.threads)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    report = run_experiment(cfg)
    if cfg.output:
        try:
            emit_report(report, cfg.output, cfg.format)
        except OSError as exc:
            print(f"cannot write report: {exc}", file=sys.stderr)
            return 1
    else:
        sys.stdout.write(render(report, cfg.format))
    if args.self_check and report.bound_violated:
        print("self-check: empirical rate exceeds the theoretical bound", file=sys.stderr)
        return EXIT_BOUND
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
