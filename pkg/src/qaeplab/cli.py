"""Command-line harness: aep, compress, subrate and validate subcommands.

Exit codes: 0 success, 1 invariant failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import (
    ConfigError,
    InvariantError,
    load_config,
    run_aep,
    run_compress,
    run_subrate,
    write_report,
    write_series,
)
from .validation import run_all


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qaeplab",
        description="Typical-subspace and compression experiments for ergodic quantum sources",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("aep", "minimal high-probability log-dims and typical masses per (n, epsilon)"),
        ("compress", "achievable-rate schemes with a decreasing level schedule"),
        ("subrate", "sub-entropy-rate fidelity decay bounds"),
        ("validate", "run every invariant suite and report pass/fail"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", metavar="PATH", default=None,
                         help="JSON config file (defaults are built in)")
        cmd.add_argument("--out", metavar="DIR", default=None, help="output directory")
        cmd.add_argument("--seed", type=int, default=None, help="seed for randomized suites")
        cmd.add_argument("--dense-cap", type=int, default=None,
                         help="largest dense block dimension")
        cmd.add_argument("--format", choices=("csv", "json"), default=None,
                         help="report format (csv also writes a json mirror)")
        cmd.add_argument("--workers", type=int, default=None,
                         help="worker threads for sweep rows")
    return parser


def _summarize(rows, label: str) -> str:
    ok = sum(1 for r in rows if r.status == "ok")
    warn = sum(1 for r in rows if r.status == "warning")
    skipped = sum(1 for r in rows if r.status == "skipped")
    return f"{label}: {len(rows)} rows ({ok} ok, {warn} warnings, {skipped} skipped)"


def cmd_aep(config) -> int:
    rows = run_aep(config)
    paths = write_report(rows, config.out_dir, "aep", config.format)
    paths += write_series(rows, config.out_dir, "aep_min_log2dim",
                          x="n", y="min_log2dim_per_site", group_by="epsilon")
    paths += write_series(rows, config.out_dir, "aep_typical_mass",
                          x="n", y="typical_mass", group_by="epsilon")
    print(_summarize(rows, "aep"))
    for p in paths:
        print(f"  wrote {p}")
    return 0


def cmd_compress(config) -> int:
    rows = run_compress(config)
    paths = write_report(rows, config.out_dir, "compress", config.format)
    paths += write_series(rows, config.out_dir, "compress_fe", x="n", y="fe")
    paths += write_series(rows, config.out_dir, "compress_rate", x="n", y="rate")
    print(_summarize(rows, "compress"))
    for p in paths:
        print(f"  wrote {p}")
    return 0


def cmd_subrate(config) -> int:
    rows = run_subrate(config)
    paths = write_report(rows, config.out_dir, "subrate", config.format)
    paths += write_series(rows, config.out_dir, "subrate_six_ky_fan",
                          x="n", y="six_ky_fan", group_by="rate_target")
    print(_summarize(rows, "subrate"))
    for p in paths:
        print(f"  wrote {p}")
    return 0


def cmd_validate(config) -> int:
    results = run_all(config)
    width = max(len(r.name) for r in results)
    failed = False
    for r in results:
        slack = "" if r.skipped else f"  worst slack {r.worst_slack:+.3e}"
        detail = f"  ({r.detail})" if r.detail else ""
        print(f"{r.name:<{width}}  {r.status:<7} trials={r.trials:<5d}{slack}{detail}")
        failed = failed or (not r.passed and not r.skipped)
    print("validate: FAIL" if failed else "validate: pass")
    return 1 if failed else 0


_HANDLERS = {
    "aep": cmd_aep,
    "compress": cmd_compress,
    "subrate": cmd_subrate,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {
        "out_dir": args.out,
        "seed": args.seed,
        "dense_cap": args.dense_cap,
        "format": args.format,
        "workers": args.workers,
    }
    try:
        config = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return _HANDLERS[args.command](config)
    except InvariantError as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
