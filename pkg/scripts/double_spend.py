"""Random-schedule double-spend attempts against a cross-chain transfer."""
from __future__ import annotations

import argparse

from fedchain import analytics, sim


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gamma", type=float, default=0.7)
    ap.add_argument("--kappa", type=int, default=3)
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = sim.double_spend_trials(args.gamma, args.kappa, args.trials, args.seed)
    p = analytics.pr_cp(args.gamma, args.kappa)
    print(f"successes {out.successes}/{out.trials} = {out.rate:.5f}; "
          f"closed form {p:.5f} +- {3 * analytics.binomial_se(p, out.trials):.5f} (3 sigma); "
          f"successes outside all-adversary windows or failures inside: {out.mismatches}")


if __name__ == "__main__":
    main()
