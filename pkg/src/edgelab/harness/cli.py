"""``edgelab`` command line.

Exit codes: 0 success, 1 a threshold was violated, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from ..spectra import EigensolverError
from ..tracywidom import FredholmConvergenceError, PainleveBlowup
from .config import KINDS, ConfigError, default_config, load_config
from .experiments import run_experiment, write_report
from .runner import TooManyFailures

EXIT_OK, EXIT_THRESHOLD, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

NUMERICAL = (EigensolverError, PainleveBlowup, FredholmConvergenceError, TooManyFailures, ArithmeticError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgelab", description="Edge universality experiments for Wigner matrices.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        sp = sub.add_parser(kind)
        sp.add_argument("--config", help="INI file; defaults to the built-in settings for this experiment")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int)
        sp.add_argument("--trials", type=int)
        sp.add_argument("--sizes", type=lambda s: tuple(int(v) for v in s.split(",")), help="comma separated N")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--force", action="store_true", help="run ensembles that violate the tail criterion")
        sp.add_argument("--figures", action="store_true", help="also write PNG figures")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config) if args.config else default_config(args.command)
        if cfg.kind != args.command:
            raise ConfigError(f"config describes {cfg.kind!r} but the command is {args.command!r}")
        cfg = cfg.override(
            seed=args.seed,
            threads=args.threads,
            trials=args.trials,
            sizes=args.sizes,
            out=args.out,
            force=args.force or cfg.force,
        )
        rep = run_experiment(cfg)
        written = write_report(rep, cfg.out, figures=args.figures)
    except ConfigError as exc:
        print(f"edgelab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL as exc:
        print(f"edgelab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for path in written:
        print(path)
    for msg in rep.messages:
        print(f"threshold violated: {msg}", file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_THRESHOLD


if __name__ == "__main__":
    sys.exit(main())
