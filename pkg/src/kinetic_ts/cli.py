"""Command-line front end: run scenarios, sweep presets, summarize results.

Exit codes: 0 on success, 2 for configuration problems, 3 for runtime
failures.
"""

from __future__ import annotations

import argparse
import glob
import os
import sys

from .experiments import (
    ConfigError,
    PRESET_NAMES,
    emit_csv,
    load_scenario,
    preset_scenarios,
    read_csv,
    run_scenario,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _default_workers() -> int:
    return max(1, min(8, os.cpu_count() or 1))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bandit",
        description="Thompson-sampling bandit simulator with kinetic Langevin posterior sampling",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario from a TOML config file")
    run_p.add_argument("--config", required=True, help="path to the scenario TOML file")
    run_p.add_argument("--out", required=True, help="output directory for the CSV")
    run_p.add_argument("--workers", type=int, default=_default_workers())

    sweep_p = sub.add_parser("sweep", help="run a built-in experiment preset")
    sweep_p.add_argument("--preset", required=True, choices=PRESET_NAMES)
    sweep_p.add_argument("--out", required=True, help="output directory for CSVs")
    sweep_p.add_argument("--workers", type=int, default=_default_workers())
    sweep_p.add_argument(
        "--trajectories", type=int, default=None, help="override the trajectory count"
    )
    sweep_p.add_argument(
        "--horizon", type=int, default=None, help="override the round horizon"
    )
    sweep_p.add_argument(
        "--full", action="store_true",
        help="run the full-scale grid (500 trajectories, high dimensions)",
    )

    report_p = sub.add_parser("report", help="summarize CSVs produced by run/sweep")
    report_p.add_argument("--in", dest="in_dir", required=True, help="directory of CSVs")
    return parser


def _run_and_emit(scenarios, out_dir: str, workers: int) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for scenario in scenarios:
        curves = run_scenario(scenario, workers=workers)
        path = os.path.join(out_dir, f"{scenario.name}.csv")
        emit_csv(curves, path)
        print(f"wrote {path}")


def _report(in_dir: str) -> None:
    paths = sorted(glob.glob(os.path.join(in_dir, "*.csv")))
    if not paths:
        raise ConfigError(f"no CSV files found in {in_dir}")
    rows = []
    for path in paths:
        scenario = os.path.splitext(os.path.basename(path))[0]
        finals = {}
        for row in read_csv(path):
            prev = finals.get(row["sampler"])
            if prev is None or row["round"] > prev["round"]:
                finals[row["sampler"]] = row
        for sampler in sorted(finals):
            row = finals[sampler]
            rows.append(
                (scenario, sampler, row["mean_regret"], row["ci_low"], row["ci_high"])
            )
    widths = (
        max(len("scenario"), *(len(r[0]) for r in rows)),
        max(len("sampler"), *(len(r[1]) for r in rows)),
    )
    header = f"{'scenario':<{widths[0]}}  {'sampler':<{widths[1]}}  {'final_regret':>12}  95% CI"
    print(header)
    print("-" * len(header))
    for scenario, sampler, mean, low, high in rows:
        print(
            f"{scenario:<{widths[0]}}  {sampler:<{widths[1]}}  {mean:>12.3f}  [{low:.3f}, {high:.3f}]"
        )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            scenario = load_scenario(args.config)
            _run_and_emit([scenario], args.out, args.workers)
        elif args.command == "sweep":
            scenarios = preset_scenarios(
                args.preset,
                trajectories=args.trajectories,
                horizon=args.horizon,
                full=args.full,
            )
            _run_and_emit(scenarios, args.out, args.workers)
        else:
            _report(args.in_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
