"""Tabulate r = dim(M minus M cap B H^2) against the number of zeros n of B.

M runs over model spaces and invariant subspaces of the kernel-function
perturbation of the backward shift; r never exceeds n.

    python3 scripts/lemma_sweep.py --pairs 400
"""

import argparse
from collections import Counter

from hardy_lab.core import BlaschkeProduct, TruncationConfig
from hardy_lab.nearly import kernel_perturbation, nearly_decompose
from hardy_lab.scenarios import invariant_subspace, make_rng, random_blaschke
from hardy_lab.subspaces import model_space


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--degree", type=int, default=64)
    ap.add_argument("--pairs", type=int, default=200)
    ap.add_argument("--max-zeros", type=int, default=6)
    ap.add_argument("--seed", type=int, default=0)
    return ap.parse_args()


def sweep(args):
    cfg = TruncationConfig(args.degree)
    rng = make_rng(args.seed)
    table = Counter()
    for i in range(args.pairs):
        B = random_blaschke(rng, int(rng.integers(1, args.max_zeros + 1)))
        if i % 2:
            theta = random_blaschke(rng, int(rng.integers(1, 9)), origin=bool(rng.integers(2)))
            M = model_space(BlaschkeProduct(theta.zeros), cfg)
        else:
            M = invariant_subspace(kernel_perturbation(B, cfg), rng, cfg, int(rng.integers(1, 9)))
        table[B.n, nearly_decompose(M, B, cfg, rng=rng, n_random=0).r] += 1
    print(" n | counts of r = 1..n")
    for n in range(1, args.max_zeros + 1):
        row = " ".join(f"{table[n, r]:4d}" for r in range(1, n + 1))
        over = sum(c for (nn, r), c in table.items() if nn == n and r > n)
        print(f"{n:2d} | {row}   (r > n: {over})")


if __name__ == "__main__":
    sweep(parse_args())
