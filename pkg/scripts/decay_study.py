"""How fast does T_z^*(I - P_F) drain mass at truncation N?

For random orthonormal F of size m with coefficients supported on degree <= support,
prints the spectral radius of the truncated operator and the worst ratio
||S^(N+1) g|| / ||g|| over random g. Nilpotency would give radius 0.

    python3 scripts/decay_study.py --degree 64 --support 3 8 64
"""

import argparse

import numpy as np

from hardy_lab.core import BlaschkeProduct, HardyFunction, TruncationConfig
from hardy_lab.operators import SarasonFlavor, assemble, c0_decay_profile, sarason_backward
from hardy_lab.scenarios import make_rng, random_orthonormal
from hardy_lab.symbols import Blaschke


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--degree", type=int, default=64)
    ap.add_argument("--support", type=int, nargs="+", default=[3, 8, 64])
    ap.add_argument("--m", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--g", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    return ap.parse_args()


def study(args):
    cfg = TruncationConfig(args.degree)
    N = cfg.degree
    rng = make_rng(args.seed)
    z = Blaschke(BlaschkeProduct((0j,)))
    print(f"{'support':>7} {'m':>2} {'radius':>9} {'worst ratio':>12}")
    for support in args.support:
        for m in args.m:
            radius, worst = 0.0, 0.0
            for _ in range(args.trials):
                fs = random_orthonormal(rng, N, m, support)
                S = assemble(sarason_backward(z, fs, SarasonFlavor.ADJOINT_FIRST, cfg), cfg)
                radius = max(radius, float(np.abs(np.linalg.eigvals(S.entries)).max()))
                for _ in range(args.g):
                    g = HardyFunction(rng.standard_normal(N + 1) + 1j * rng.standard_normal(N + 1))
                    p = c0_decay_profile(S, g, N + 1, cfg)
                    worst = max(worst, p.norms[-1] / p.norms[0])
            print(f"{support:>7} {m:>2} {radius:>9.3f} {worst:>12.2e}")


if __name__ == "__main__":
    study(parse_args())
