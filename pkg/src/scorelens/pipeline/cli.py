"""Command-line interface.

Verbs: ``preprocess`` (emit the processed dataset files), ``run`` (execute
one pairwise experiment end to end), ``explain`` (re-attribute stored
models for chosen instances), ``report`` (consolidated metric table).
Exit codes: 0 success, 2 config error, 3 data error, 4 convergence error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from ..errors import ConfigError, ConvergenceError, DataError
from .config import load_config
from .experiment import (consolidated_report, explain_instances, preprocess,
                         preprocess_command, run_experiment)


def _bool_flag(text):
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="scorelens",
        description="Interpretable score-level classification pipeline.")
    parser.add_argument("--verbose", action="store_true",
                        help="log progress to stderr")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("preprocess", help="apply the preprocessing chain "
                                          "and write the dataset files")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="processed.csv")

    p = sub.add_parser("run", help="run one pairwise experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--experiment", required=True,
                   choices=["low-medium", "high-medium", "low-high"])
    p.add_argument("--seed", type=int, default=None,
                   help="override the plan seed")
    p.add_argument("--balanced-test", type=_bool_flag, default=True,
                   help="primary test mode in reports (both modes are "
                        "always emitted)")
    p.add_argument("--jobs", type=int, default=1,
                   help="concurrent per-family grid searches")
    p.add_argument("--out", default="out")

    p = sub.add_parser("explain", help="attribute stored-model predictions "
                                       "for explicit row ids")
    p.add_argument("--config", required=True)
    p.add_argument("--experiment", required=True,
                   choices=["low-medium", "high-medium", "low-high"])
    p.add_argument("--instances", required=True,
                   help="comma-separated row ids")
    p.add_argument("--out", default="out")

    p = sub.add_parser("report", help="print the consolidated metric table")
    p.add_argument("--config", required=True)
    p.add_argument("--experiment", required=True,
                   choices=["low-medium", "high-medium", "low-high"])
    p.add_argument("--balanced-test", type=_bool_flag, default=True)
    p.add_argument("--out", default="out")
    return parser


def _plan_with_seed(config, name, seed):
    plan = config.experiment(name)
    if seed is not None:
        plan = dataclasses.replace(plan, seed=seed)
    return plan


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        if args.verb == "preprocess":
            config = load_config(args.config)
            paths = preprocess_command(config, args.out)
            for role, path in paths.items():
                print(f"{role}: {path}")
        elif args.verb == "run":
            config = load_config(args.config)
            plan = _plan_with_seed(config, args.experiment, args.seed)
            data, raw, _ = preprocess(config)
            manifest = run_experiment(
                plan, data, config, raw=raw, out_root=args.out,
                jobs=args.jobs, primary_balanced=args.balanced_test)
            print(f"selected: {manifest['selected_family']}")
            print(f"outputs: {args.out}/{plan.name}")
        elif args.verb == "explain":
            config = load_config(args.config)
            plan = _plan_with_seed(config, args.experiment, None)
            data, raw, _ = preprocess(config)
            row_ids = [int(t) for t in args.instances.split(",") if t.strip()]
            written = explain_instances(config, plan, data, raw, row_ids,
                                        out_root=args.out)
            for path in written:
                print(path)
        elif args.verb == "report":
            mode = "balanced" if args.balanced_test else "natural"
            print(consolidated_report(args.out, args.experiment, mode),
                  end="")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
