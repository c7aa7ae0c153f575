"""Command-line entry point: ``jacobi <command> --config run.toml``."""

from __future__ import annotations

import argparse
import sys

from .config import load_config
from .errors import ConfigError
from .report import COMMANDS, error_report, run_command

EXIT_FAIL = 1
EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jacobi", description="Jacobi structures, gauge transforms and integral chains.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="TOML run configuration")
    p.add_argument("--seed", type=int, help="override [numeric] seed")
    p.add_argument("--samples", type=int, help="override [numeric] samples")
    p.add_argument("--tol", type=float, help="override the pass tolerance")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--csv", help="write the flow trajectory here (flow only)")
    p.add_argument("--allow-constant-gauge", action="store_true",
                   help="run the recursion even when phi is constant")
    return p


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config).with_overrides(args.seed, args.samples, args.tol)
        report = run_command(args.command, cfg, args.allow_constant_gauge, args.csv)
    except ConfigError as e:
        print(f"jacobi: {e}", file=sys.stderr)
        _emit(error_report(args.command, e).to_json(), args.out)
        return EXIT_CONFIG
    _emit(report.to_json(), args.out)
    if report.error:
        print(f"jacobi: {report.error['type']}: {report.error['message']}", file=sys.stderr)
    return 0 if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
