"""Command-line interface: run, validate, report, paper-suite."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .presets import paper_suite_config
from .runner import (
    ConfigError,
    load_config_file,
    render_report,
    render_report_rows,
    replay_reports,
    run_experiment,
)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_SCENARIO_FAILURE = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conflictlab",
        description=(
            "Deterministic simulator for knowledge disagreement in "
            "collaborating agent teams"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a configuration file")
    run_p.add_argument("--config", required=True, help="experiment configuration file")
    run_p.add_argument("--seed", type=int, default=None, help="override base_seed")
    run_p.add_argument("--out", default=None, help="trace output directory")
    run_p.add_argument("--parallel", type=int, default=1, help="worker processes")

    val_p = sub.add_parser("validate", help="check a configuration file")
    val_p.add_argument("--config", required=True)

    rep_p = sub.add_parser("report", help="recompute reports from trace files")
    rep_p.add_argument("--traces", required=True, help="directory of *.jsonl traces")
    rep_p.add_argument("--format", choices=("table", "json"), default="table")

    suite_p = sub.add_parser("paper-suite", help="run the built-in sweep grid")
    suite_p.add_argument("--out", required=True)
    suite_p.add_argument("--seed", type=int, default=42)
    suite_p.add_argument("--parallel", type=int, default=1)
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        config = load_config_file(args.config)
    except FileNotFoundError:
        print(f"config file not found: {args.config}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    if args.seed is not None:
        config = replace(config, base_seed=args.seed)
    results = run_experiment(config, out_dir=args.out, parallel=args.parallel)
    print(render_report(results, "table"))
    if any(r.error is not None for r in results):
        return EXIT_SCENARIO_FAILURE
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    try:
        config = load_config_file(args.config)
    except FileNotFoundError:
        print(f"config file not found: {args.config}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    print(f"OK: {len(config.scenarios)} scenario(s), base_seed={config.base_seed}")
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    directory = Path(args.traces)
    if not directory.is_dir():
        print(f"trace directory not found: {directory}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    reports = replay_reports(directory)
    if not reports:
        print(f"no trace files under {directory}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    rows = [(sid, report, None) for sid, report in sorted(reports.items())]
    print(render_report_rows(rows, args.format))
    return EXIT_OK


def _cmd_paper_suite(args: argparse.Namespace) -> int:
    config = paper_suite_config(base_seed=args.seed)
    results = run_experiment(config, out_dir=args.out, parallel=args.parallel)
    print(render_report(results, "table"))
    if any(r.error is not None for r in results):
        return EXIT_SCENARIO_FAILURE
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "validate": _cmd_validate,
        "report": _cmd_report,
        "paper-suite": _cmd_paper_suite,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
