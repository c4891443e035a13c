"""``dpfed`` command line: run, verify, bounds, sweep."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from dpfedsim.cli.config import ConfigError, parse_config
from dpfedsim.cli.runner import (
    EXIT_CONFIG,
    EXIT_OK,
    bounds_from_trace,
    dump_json,
    run_plan,
    sweep,
)


def _overrides(args) -> dict:
    out = {}
    if args.seed is not None:
        out["seed"] = args.seed
    if args.out is not None:
        out["output"] = args.out
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dpfed", description="Differentially private "
                                     "federated optimization simulator")
    verbosity = argparse.ArgumentParser(add_help=False)
    verbosity.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", help="comma-separated master seeds (overrides the config)")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--threads", type=int, default=1, help="worker threads per round")

    p = sub.add_parser("run", parents=[verbosity], help="run an experiment plan")
    p.add_argument("config")
    common(p)
    p.add_argument("--figures", action="store_true", help="also render PNG figures")

    sub.add_parser("verify", parents=[verbosity], help="run the operator, noise, fact and lemma checks")

    p = sub.add_parser("bounds", parents=[verbosity], help="bound report for a saved theorem-mode trace")
    p.add_argument("config")
    p.add_argument("trace")

    p = sub.add_parser("sweep", parents=[verbosity], help="run a config over a parameter grid")
    p.add_argument("config")
    p.add_argument("grid")
    common(p)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "verify":
        from dpfedsim.cli.verify import run_checks

        return EXIT_OK if run_checks() else 1
    if args.command == "sweep":
        if args.threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return EXIT_CONFIG
        return sweep(args.config, args.grid, args.out, args.threads,
                     {"seed": args.seed} if args.seed is not None else None)
    try:
        plan = parse_config(args.config, _overrides(args) if args.command == "run" else None)
        if args.command == "bounds":
            sys.stdout.write(dump_json(bounds_from_trace(plan, args.trace)))
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: cannot read trace: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    code = run_plan(plan, args.threads, args.figures)
    if code == EXIT_OK:
        print(plan.output_directory / "summary.json")
    return code


if __name__ == "__main__":
    sys.exit(main())
