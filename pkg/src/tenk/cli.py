"""Command-line entry point: ``tenk <stage> --config config.json``.

Exit codes: 0 success, 2 config error, 3 missing upstream artifact,
4 data error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConfigError, DataError, MissingDependencyError
from .pipeline import STAGES, load_config, run_stage

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MISSING_DEPENDENCY = 3
EXIT_DATA = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tenk",
        description="10-K text to stock-direction datasets, baselines, and reports",
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="stage", required=True)
    for stage in STAGES:
        p = sub.add_parser(stage, help=f"run the {stage} stage")
        p.add_argument("--config", required=True, help="pipeline config JSON")
        p.add_argument("--fold", type=int, default=None, help="restrict to one fold")
        p.add_argument("--horizon", type=int, default=None, help="restrict to one horizon")
        p.add_argument("--seed", type=int, default=None, help="override the stage seed")
        p.add_argument("--predictions", default=None,
                       help="directory of external prediction files (evaluate)")
        p.add_argument("--out", default=None, help="override the stage's primary output")
        # Flag overrides apply one-for-one onto config keys.
        p.add_argument("--universe-path", dest="universe_path", default=None)
        p.add_argument("--cache-dir", dest="cache_dir", default=None)
        p.add_argument("--price-dir", dest="price_dir", default=None)
        p.add_argument("--artifacts-dir", dest="artifacts_dir", default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--mc-trials", dest="mc_trials", type=int, default=None)
        p.add_argument("--allow-protocol-override", dest="allow_protocol_override",
                       action="store_const", const=True, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    overrides = {
        key: getattr(args, key)
        for key in ("universe_path", "cache_dir", "price_dir", "artifacts_dir",
                    "trials", "mc_trials", "allow_protocol_override")
    }
    try:
        config = load_config(args.config, overrides=overrides)
        result = run_stage(
            args.stage, config,
            fold=args.fold, horizon=args.horizon, seed=args.seed,
            predictions=args.predictions, out=args.out,
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingDependencyError as exc:
        print(f"missing dependency: {exc}", file=sys.stderr)
        return EXIT_MISSING_DEPENDENCY
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(f"[{result.status}] {result.stage}: " + ", ".join(result.outputs))
    return EXIT_OK


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
