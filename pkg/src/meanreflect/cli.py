"""Command-line entry point.

Subcommands:
    run <config>     solve, write CSV + report, print per-check lines
    verify <config>  solve and check, write the report only (no CSV)
    probe <config>   force gexp_probe mode (config must name a payoff)
    list             print the built-in registry names

Set MEANREFLECT_OUTPUT_DIR to redirect all output files into one directory.
"""

from __future__ import annotations

import argparse
import sys

from .config import config_from_dict, load_config
from .errors import ConfigError
from .registry import COEFFICIENTS, LOSSES, PAYOFFS
from .runner import EXIT_CONFIG_ERROR, run_experiment


def _print_checks(result) -> None:
    for check in result.report["checks"]:
        status = "PASS" if check["pass"] else "FAIL"
        print(f"{status} {check['name']}: measured={check['measured']!r} "
              f"threshold={check['threshold']!r}")
    if "solver_error" in result.report["diagnostics"]:
        print(f"solver error: {result.report['diagnostics']['solver_error']}")
    overall = "PASS" if result.overall_pass else "FAIL"
    where = f" (report: {result.report_path})" if result.report_path else ""
    print(f"overall: {overall}{where}")


def _cmd_run(args) -> int:
    config = load_config(args.config)
    result = run_experiment(config, output_dir=args.output_dir)
    _print_checks(result)
    return result.exit_code


def _cmd_verify(args) -> int:
    config = load_config(args.config)
    result = run_experiment(config, output_dir=args.output_dir, write_csv=False)
    _print_checks(result)
    return result.exit_code


def _cmd_probe(args) -> int:
    raw = load_config(args.config).to_dict()
    raw["mode"] = "gexp_probe"
    config = config_from_dict(raw)
    result = run_experiment(config, output_dir=args.output_dir)
    _print_checks(result)
    return result.exit_code


def _cmd_list(_args) -> int:
    print("coefficients:")
    for name in sorted(COEFFICIENTS):
        print(f"  {name}")
    print("losses:")
    for name in sorted(LOSSES):
        print(f"  {name}")
    print("payoffs:")
    for name in sorted(PAYOFFS):
        print(f"  {name}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meanreflect",
        description="Mean-reflection experiment harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, needs_config in (
        ("run", _cmd_run, True),
        ("verify", _cmd_verify, True),
        ("probe", _cmd_probe, True),
        ("list", _cmd_list, False),
    ):
        cmd = sub.add_parser(name)
        if needs_config:
            cmd.add_argument("config", help="path to a JSON experiment config")
            cmd.add_argument("--output-dir", default=None,
                             help="directory overriding configured output paths")
        cmd.set_defaults(handler=fn)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
