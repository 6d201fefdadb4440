"""Command line interface: single-scenario runs and parameter sweeps.

    dtnsim run scenario.cfg --seeds 10 --out reports/
    dtnsim sweep scenario.cfg --axis data_rate=6e6,24e6,54e6 --seeds 10

Both commands write runs.csv (one row per run) and aggregate.csv (mean
and 95% CI across seeds) into the output directory.
"""

from __future__ import annotations

import argparse
import itertools
import sys
from pathlib import Path

from .metrics import (
    AGGREGATE_COLUMNS,
    RUN_COLUMNS,
    aggregate_row,
    run_row,
    write_csv,
)
from .mobility import TraceParseError
from .runner import run_seeds
from .scenario import ScenarioError, load_scenario, with_seeds


def _parse_assignment(text: str, flag: str) -> tuple[str, str]:
    if "=" not in text:
        raise ScenarioError(f"{flag} expects KEY=VALUE, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()


def _parse_axis(text: str) -> tuple[str, list[str]]:
    key, values = _parse_assignment(text, "--axis")
    parts = [v.strip() for v in values.split(",") if v.strip()]
    if not parts:
        raise ScenarioError(f"--axis {key} has no values")
    return key, parts


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("scenario", help="scenario file path")
    parser.add_argument(
        "--seeds", type=int, metavar="N", help="run seeds 1..N (overrides the scenario)"
    )
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a scenario key (repeatable)",
    )
    parser.add_argument(
        "--out", default="reports", metavar="DIR", help="report directory"
    )


def _seed_tuple(args) -> tuple[int, ...] | None:
    if args.seeds is None:
        return None
    if args.seeds < 1:
        raise ScenarioError("--seeds must be at least 1")
    return tuple(range(1, args.seeds + 1))


def _cmd_run(args) -> int:
    overrides = dict(_parse_assignment(s, "--set") for s in args.overrides)
    scenario = load_scenario(args.scenario, overrides)
    seeds = _seed_tuple(args)
    if seeds is not None:
        scenario = with_seeds(scenario, seeds)
    reports = run_seeds(scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "runs.csv", RUN_COLUMNS, [run_row(r) for r in reports])
    write_csv(out / "aggregate.csv", AGGREGATE_COLUMNS, [aggregate_row(reports)])
    for report in reports:
        print(
            f"seed {report.seed}: generated={report.generated} "
            f"delivered={report.delivered} mdr={report.mdr}"
        )
    print(f"wrote {out / 'runs.csv'} and {out / 'aggregate.csv'}")
    return 0


def _cmd_sweep(args) -> int:
    overrides = dict(_parse_assignment(s, "--set") for s in args.overrides)
    axes = [_parse_axis(a) for a in args.axis]
    axis_keys = [key for key, _ in axes]
    seeds = _seed_tuple(args)

    run_rows: list[dict[str, str]] = []
    agg_rows: list[dict[str, str]] = []
    failures = []
    for combo in itertools.product(*(values for _, values in axes)):
        cell = dict(zip(axis_keys, combo))
        try:
            scenario = load_scenario(args.scenario, {**overrides, **cell})
            if seeds is not None:
                scenario = with_seeds(scenario, seeds)
            reports = run_seeds(scenario)
        except (ScenarioError, TraceParseError, ValueError) as exc:
            failures.append((cell, exc))
            print(f"cell {cell} failed: {exc}", file=sys.stderr)
            continue
        for report in reports:
            run_rows.append({**cell, **run_row(report)})
        agg_rows.append({**cell, **aggregate_row(reports)})

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "runs.csv", tuple(axis_keys) + RUN_COLUMNS, run_rows)
    write_csv(out / "aggregate.csv", tuple(axis_keys) + AGGREGATE_COLUMNS, agg_rows)
    print(f"wrote {out / 'runs.csv'} and {out / 'aggregate.csv'}")
    if failures:
        print(f"{len(failures)} sweep cell(s) failed", file=sys.stderr)
        return 1
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="dtnsim",
        description="Epidemic DTN routing simulator over an IP-style convergence layer",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="run one scenario over its seeds")
    _add_common(run_parser)

    sweep_parser = sub.add_parser("sweep", help="run a cartesian parameter sweep")
    _add_common(sweep_parser)
    sweep_parser.add_argument(
        "--axis",
        action="append",
        required=True,
        metavar="KEY=V1,V2,...",
        help="sweep axis over a scenario key (repeatable)",
    )

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_sweep(args)
    except (ScenarioError, TraceParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
