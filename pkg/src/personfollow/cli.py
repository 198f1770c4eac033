"""Command line driver.

    personfollow run --scenario <path|name> [--seed N] [--trace out.csv]
                     [--metrics out.json] [--quiet]
    personfollow validate --scenario <path|name>
    personfollow schema

Exit codes: 0 success, 1 configuration/I-O error, 2 acquisition timeout.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .config import BUILTIN_SCENARIOS, load_scenario, schema_lines
from .errors import AcquisitionTimeout, ConfigInvalid
from .pipeline import run_scenario
from .traceio import metrics_to_json, write_trace_csv

EXIT_OK, EXIT_CONFIG, EXIT_TIMEOUT = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="personfollow", description="Person-following robot simulator")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a scenario")
    run.add_argument("--scenario", required=True,
                     help=f"scenario JSON file, or one of: {', '.join(BUILTIN_SCENARIOS)}")
    run.add_argument("--seed", type=int, help="override the scenario seed")
    run.add_argument("--trace", help="write the per-step trace as CSV")
    run.add_argument("--metrics", help="write metrics JSON here instead of stdout")
    run.add_argument("--quiet", action="store_true", help="print nothing on success")

    val = sub.add_parser("validate", help="parse a scenario without running it")
    val.add_argument("--scenario", required=True)

    sub.add_parser("schema", help="print the scenario config reference")
    return p


def _load(path: str):
    try:
        return load_scenario(path)
    except FileNotFoundError:
        print(f"error: scenario file not found: {path}", file=sys.stderr)
    except OSError as e:
        print(f"error: cannot read {path}: {e}", file=sys.stderr)
    except ConfigInvalid as e:
        print(f"error: {path}: {e}", file=sys.stderr)
    return None


def main(argv=None) -> int:
    args = _parser().parse_args(argv)

    if args.command == "schema":
        print("\n".join(schema_lines()))
        return EXIT_OK

    cfg = _load(args.scenario)
    if cfg is None:
        return EXIT_CONFIG
    if args.command == "validate":
        print(f"{args.scenario}: ok ({cfg.n_steps} steps, {len(cfg.persons)} persons)")
        return EXIT_OK

    if args.seed is not None:
        if args.seed < 0:
            print("error: --seed must be non-negative", file=sys.stderr)
            return EXIT_CONFIG
        cfg = dataclasses.replace(cfg, seed=args.seed)
    try:
        trace, metrics = run_scenario(cfg)
    except AcquisitionTimeout as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_TIMEOUT

    try:
        if args.trace:
            write_trace_csv(trace, args.trace)
        if args.metrics:
            with open(args.metrics, "w", encoding="utf-8") as fh:
                fh.write(metrics_to_json(metrics))
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if not args.metrics and not args.quiet:
        sys.stdout.write(metrics_to_json(metrics))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
