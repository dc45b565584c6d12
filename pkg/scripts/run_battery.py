"""Run every config in a directory and print one verdict line per task.

    python scripts/run_battery.py [configs/] [--out reports/]
"""
import argparse
from pathlib import Path

from ncorr.config import ConfigError, parse_config
from ncorr.report import RunError, emit, run


def describe(result: dict) -> str:
    if result["status"] != "ok":
        return f"error: {result['error']}"
    if "series" in result:
        return f"{result['series']['quantity']} series, {len(result['series']['tau'])} points"
    if "summary" in result:
        return f"{result['summary']} (min eigenvalue {result['min_eigenvalue']:.4g})"
    rhs = "n/a" if result["rhs"] is None else f"{result['rhs']:.6g}"
    flags = f" [{'; '.join(result['flags'])}]" if result["flags"] else ""
    return f"{result['verdict']}: lhs {result['lhs']:.6g} {result['relation']} rhs {rhs}{flags}"


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("configs", nargs="?", default=Path(__file__).resolve().parents[1] / "configs", type=Path)
    parser.add_argument("--out", type=Path, help="directory for the JSON reports")
    args = parser.parse_args()

    for path in sorted(args.configs.glob("*.yaml")):
        print(f"== {path.name}")
        try:
            report = run(parse_config(path.read_text()))
        except ConfigError as exc:
            print(f"   invalid config:\n{exc}")
            continue
        except RunError as exc:
            print(f"   failed: {exc}")
            continue
        for result in report.results:
            print(f"   {result['name']:<24} {describe(result)}")
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            (args.out / f"{path.stem}.json").write_bytes(emit(report))


if __name__ == "__main__":
    main()
