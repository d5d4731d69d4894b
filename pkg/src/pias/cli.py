"""Command line entry point.

    pias run-suite --config grid.json [--seed N] [--jobs N] [--max-budget-factor N]
    pias build-portfolio --config grid.json
    pias select --config grid.json
    pias report --results DIR --out DIR

Exit codes: 0 success, 2 bad config or mismatched prior state,
3 missing upstream artifacts.
"""

import argparse
import json
import sys

from . import harness


def _add_config_args(p):
    p.add_argument("--config", required=True, help="path to a JSON grid config")
    p.add_argument("--seed", type=int, default=None,
                   help="override the master seed")
    p.add_argument("--jobs", type=int, default=None,
                   help="worker threads for trajectory runs")
    p.add_argument("--max-budget-factor", type=int, default=None,
                   help="cap the largest budget factor")


def _config_from(args) -> harness.GridConfig:
    overrides = {
        "master_seed": args.seed,
        "jobs": args.jobs,
        "max_budget_factor": args.max_budget_factor,
    }
    return harness.load_config(args.config, overrides)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pias",
        description="budget-aware per-instance algorithm selection harness")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_config_args(sub.add_parser(
        "run-suite", help="run trajectories, feature samples and the "
                          "performance table for every (suite, d)"))
    _add_config_args(sub.add_parser(
        "build-portfolio", help="pick complementarity-driven sub-portfolios"))
    _add_config_args(sub.add_parser(
        "select", help="evaluate every selection scenario"))

    rep = sub.add_parser("report", help="turn results into plot-ready CSVs")
    rep.add_argument("--results", required=True, help="results directory")
    rep.add_argument("--out", required=True, help="output directory")

    args = parser.parse_args(argv)
    try:
        if args.command == "run-suite":
            out = harness.cmd_run_suite(_config_from(args))
        elif args.command == "build-portfolio":
            out = harness.cmd_build_portfolio(_config_from(args))
        elif args.command == "select":
            out = harness.cmd_select(_config_from(args))
        else:
            out = harness.cmd_report(args.results, args.out)
    except harness.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except harness.MissingDependency as exc:
        print(f"missing artifacts: {exc}", file=sys.stderr)
        return 3
    print(json.dumps(out, indent=1))
    return 0


if __name__ == "__main__":
    sys.exit(main())
