"""hardy-lab command line: run one scenario file or a directory of them.

Exit codes: 0 all checks pass, 1 some check failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from .config import ScenarioConfig, apply_overrides, load_config
from .errors import ConfigError
from .reports import to_csv
from .runner import aggregate, run_many, run_scenario

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hardy-lab", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--eps-residual", type=float, help="override truncation.eps_residual")
    common.add_argument("--eps-rank", type=float, help="override truncation.eps_rank")
    common.add_argument("--degree", type=int, help="override truncation.degree")
    common.add_argument("--guard", type=int, help="override truncation.guard")
    common.add_argument("-q", "--quiet", action="store_true", help="only print the final verdict")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="run one scenario file")
    run.add_argument("config", type=Path)
    run.add_argument("--out", type=Path, help="write the JSON report here")
    run.add_argument("--csv", type=Path, help="write the flat residual table here")

    suite = sub.add_parser("suite", parents=[common], help="run every *.json scenario in a directory")
    suite.add_argument("directory", type=Path)
    suite.add_argument("--out", type=Path, help="write the aggregate JSON here")
    suite.add_argument("--csv", type=Path, help="write all residuals as one CSV table")
    suite.add_argument("--reports", type=Path, help="directory for per-scenario JSON reports")
    suite.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    return ap


def _load(path: Path, args) -> ScenarioConfig:
    cfg = load_config(path)
    try:
        return apply_overrides(cfg, args.degree, args.guard, args.eps_residual, args.eps_rank)
    except ValueError as exc:
        raise ConfigError(f"{path}: override rejected ({exc})") from exc


def _validate_overrides(args) -> None:
    for name in ("eps_residual", "eps_rank"):
        v = getattr(args, name)
        if v is not None and not v >= 0:
            raise ConfigError(f"--{name.replace('_', '-')}: must be non-negative", field=name)
    if args.degree is not None and args.degree < 2:
        raise ConfigError("--degree: must be at least 2", field="degree")
    if args.guard is not None and args.guard < 0:
        raise ConfigError("--guard: must be non-negative", field="guard")


def _print_report(rep, quiet: bool) -> None:
    if not quiet:
        for c in rep.checks:
            flag = "ok  " if c.passed else "FAIL"
            print(f"  {flag} {c.name}: {c.residual:.3e} (threshold {c.threshold:.1e})")
    print(f"{rep.scenario}: {'PASS' if rep.passed else 'FAIL'} ({len(rep.checks)} checks, {rep.wall_time:.2f}s)")


def _cmd_run(args) -> int:
    sc = _load(args.config, args)
    rep = run_scenario(sc)
    _print_report(rep, args.quiet)
    if args.out:
        args.out.write_text(rep.to_json() + "\n")
    if args.csv:
        args.csv.write_text(to_csv([rep]))
    return EXIT_OK if rep.passed else EXIT_FAIL


def _cmd_suite(args) -> int:
    if not args.directory.is_dir():
        raise ConfigError(f"{args.directory}: not a directory")
    paths = sorted(args.directory.glob("*.json"))
    # validate everything first: one bad file aborts the whole aggregation
    configs = [_load(p, args) for p in paths]
    reports = run_many(configs, jobs=args.jobs)
    for rep in reports:
        _print_report(rep, args.quiet or rep.passed)
    agg = aggregate(list(zip(configs, reports)))
    for tag, t in agg["tags"].items():
        worst = t["worst"]
        tail = f", worst {worst['name']} = {worst['residual']} in {worst['scenario']}" if worst else ""
        print(f"[{tag}] passed {t['passed']}, failed {t['failed']}{tail}")
    print(f"suite: {'PASS' if agg['pass'] else 'FAIL'} ({agg['totals']['passed']} passed, {agg['totals']['failed']} failed)")
    if args.out:
        args.out.write_text(json.dumps(agg, indent=2, sort_keys=True) + "\n")
    if args.csv:
        args.csv.write_text(to_csv(reports))
    if args.reports:
        args.reports.mkdir(parents=True, exist_ok=True)
        for rep in reports:
            (args.reports / f"{rep.scenario}.json").write_text(rep.to_json() + "\n")
    return EXIT_OK if agg["pass"] else EXIT_FAIL


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        _validate_overrides(args)
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_suite(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
