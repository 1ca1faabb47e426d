"""Measured fraction of transaction-free blocks under the empty-block attack, against the threshold."""
from __future__ import annotations

import argparse

from fedchain import analytics, sim


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ratios", type=float, nargs="+", default=[0.1, 0.2, 0.3, 0.4, 0.45])
    ap.add_argument("--slots", type=int, default=10_000)
    ap.add_argument("--l", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    print("ratio,measured_empty_fraction,threshold,windows_over_threshold,windows")
    for r in args.ratios:
        flags = sim.empty_block_trace(r, args.slots, seed=args.seed)
        theta = analytics.throughput_threshold(r, args.l)
        hits, windows = sim.window_exceedances(flags, args.l, theta)
        print(f"{r},{sum(flags) / len(flags)!r},{theta},{hits},{windows}")


if __name__ == "__main__":
    main()
