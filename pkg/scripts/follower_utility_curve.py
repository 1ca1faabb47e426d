"""Follower 1's utility as its stake on chain 1 varies, with chain 2/3 split kept proportional.

Two followers, B=[100, 300], R=[10, 20, 30]; follower 2 plays its equilibrium
allocation.  The curve peaks at the equilibrium stake 50/3.
"""
from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from fedchain import game


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=101)
    args = ap.parse_args()
    g = game.GameInstance([100, 300], [10, 20, 30])
    s = game.follower_equilibrium(g)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["stake_chain1", "utility"])
    for x in np.linspace(0.0, g.budgets[0], args.points):
        rest = g.budgets[0] - x
        profile = s.copy()
        profile[0] = [x, rest * 2 / 5, rest * 3 / 5]
        w.writerow([repr(float(x)), repr(game.follower_utility(g, profile, 0))])


if __name__ == "__main__":
    main()
