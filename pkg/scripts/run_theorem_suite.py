"""Run the bundled scenario suite and keep the aggregate plus per-scenario reports.

    python3 scripts/run_theorem_suite.py --out results/theorems --degree 128
"""

import argparse
import sys
from pathlib import Path

from hardy_lab.cli import main

ROOT = Path(__file__).resolve().parents[1]


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--suite", type=Path, default=ROOT / "scenarios" / "theorems")
    ap.add_argument("--out", type=Path, default=ROOT / "results" / "theorems")
    ap.add_argument("--degree", type=int)
    ap.add_argument("--jobs", type=int, default=1)
    return ap.parse_args()


if __name__ == "__main__":
    args = parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    argv = ["suite", str(args.suite), "--out", str(args.out / "aggregate.json"),
            "--csv", str(args.out / "residuals.csv"), "--reports", str(args.out / "reports"),
            "--jobs", str(args.jobs)]
    if args.degree is not None:
        argv += ["--degree", str(args.degree)]
    sys.exit(main(argv))
