"""Command line entry point.

Exit codes: 0 when the analysis ran (whatever the verdicts), 2 for an
invalid config, 3 for a runtime failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .config import AtomProviderConfig, ConfigError, Task, parse_config
from .report import RunError, emit, run

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_RUNTIME = 3


def _load(path: str):
    config_path = Path(path)
    try:
        text = config_path.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read config {path}: {exc}", file=sys.stderr)
        return None, EXIT_INVALID
    try:
        return parse_config(text), EXIT_OK
    except ConfigError as exc:
        print(f"{path}: invalid config", file=sys.stderr)
        for where, msg in exc.errors:
            print(f"  {where}: {msg}", file=sys.stderr)
        return None, EXIT_INVALID


def _target(cli_value: str | None, config_value: str | None, config_path: str) -> Path | None:
    if cli_value:
        return Path(cli_value)
    if config_value:
        # relative paths in a config are relative to the config file
        return Path(config_path).resolve().parent / config_value
    return None


def _write(data: bytes, target: Path | None) -> None:
    if target is None:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(data)


def cmd_validate(args) -> int:
    config, code = _load(args.config)
    if config is None:
        return code
    print(f"{args.config}: valid ({len(config.tasks)} tasks)")
    return EXIT_OK


def cmd_analyze(args) -> int:
    config, code = _load(args.config)
    if config is None:
        return code
    try:
        report = run(config)
    except RunError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _write(emit(exc.report), _target(args.output, config.output.get("report"), args.config))
        return EXIT_RUNTIME
    _write(emit(report), _target(args.output, config.output.get("report"), args.config))
    if args.csv or "csv" in config.output:
        if any("series" in r for r in report.results):
            _write(emit(report, "csv-series"), _target(args.csv, config.output.get("csv"), args.config))
    return EXIT_OK


def cmd_sweep_g2(args) -> int:
    config, code = _load(args.config)
    if config is None:
        return code
    if not isinstance(config.provider, AtomProviderConfig):
        print(f"{args.config}: sweep-g2 needs an atom provider", file=sys.stderr)
        return EXIT_INVALID
    sweeps = [t for t in config.tasks if t.type == "g2_sweep"]
    task = sweeps[0] if sweeps else Task("g2_sweep", "g2", {"tau_start": 0.0, "tau_stop": 10.0, "num": 201})
    if args.tau_stop is not None or args.num is not None:
        params = dict(task.params)
        if args.tau_stop is not None:
            params["tau_stop"] = args.tau_stop
        if args.num is not None:
            params["num"] = args.num
        task = Task(task.type, task.name, params)
    try:
        report = run(type(config)(config.provider, (task,), config.tolerances, config.output))
    except RunError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    result = report.results[0]
    if result["status"] != "ok":
        print(f"error: {result['error']}", file=sys.stderr)
        return EXIT_RUNTIME
    _write(emit(report, "csv-series"), _target(args.output, config.output.get("csv"), args.config))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ncorr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ncorr {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="run all tasks and write a JSON report")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="report path (default: config output.report, else stdout)")
    p.add_argument("--csv", help="also write the first correlation sweep as CSV")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep-g2", help="atom g2 over a tau grid, as CSV")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="CSV path (default: config output.csv, else stdout)")
    p.add_argument("--tau-stop", type=float)
    p.add_argument("--num", type=int)
    p.set_defaults(func=cmd_sweep_g2)

    p = sub.add_parser("validate", help="check a config without running it")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
