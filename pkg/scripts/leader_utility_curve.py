"""Operator utility of one chain against its own block reward, other chains at the optimum."""
from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from fedchain import game


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--followers", type=int, default=100)
    ap.add_argument("--chains", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--points", type=int, default=101)
    args = ap.parse_args()
    budgets = np.random.default_rng(args.seed).uniform(50, 100, args.followers)
    r_star = game.leader_optimum(budgets, args.chains)
    others = (args.chains - 1) * r_star
    print(f"# R* = {r_star!r}", file=sys.stderr)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["reward", "utility", "marginal"])
    for r in np.linspace(0.1 * r_star, 3 * r_star, args.points):
        w.writerow([repr(float(r)), repr(game.leader_utility_vs_reward(budgets, r, others)),
                    repr(game.leader_marginal(budgets, r, others))])


if __name__ == "__main__":
    main()
