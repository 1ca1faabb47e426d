"""Common-prefix and chain-quality violation probabilities over the honest ratio."""
from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from fedchain import analytics


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kappa", type=int, nargs="+", default=[1, 2, 4, 7, 8])
    ap.add_argument("--l", type=int, default=100)
    ap.add_argument("--delta", type=float, default=0.5)
    ap.add_argument("--mc-trials", type=int, default=0, help="add a Monte-Carlo column per kappa")
    args = ap.parse_args()
    threshold = args.l // 2
    w = csv.writer(sys.stdout, lineterminator="\n")
    header = ["gamma"] + [f"pr_cp_k{k}" for k in args.kappa]
    if args.mc_trials:
        header += [f"mc_cp_k{k}" for k in args.kappa]
    header += ["pr_cq_bound", "pr_cq_exact"]
    w.writerow(header)
    for gamma in np.round(np.arange(0.51, 1.0, 0.01), 2):
        row = [gamma] + [analytics.pr_cp(gamma, k) for k in args.kappa]
        if args.mc_trials:
            row += [analytics.cp_race_oracle(gamma, k, args.mc_trials, seed=k) for k in args.kappa]
        row += [analytics.pr_cq_bound(gamma, args.l, args.delta),
                analytics.pr_cq_exact(gamma, args.l, threshold)]
        w.writerow([repr(float(x)) for x in row])


if __name__ == "__main__":
    main()
