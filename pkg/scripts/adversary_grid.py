"""Run the weak/medium/strong x static/adaptive x reward-scheme grid and write one directory each."""
from __future__ import annotations

import argparse
import itertools
from concurrent.futures import ProcessPoolExecutor

from fedchain import cli, sim


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/grid")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()
    grid = itertools.product(("weak", "medium", "strong"), ("static", "adaptive"), ("static", "dynamic"))
    configs = [sim.preset_config(lv, adv, sch, rng_seed=args.seed) for lv, adv, sch in grid]
    dirs = [f"{args.out}/{c.name}" for c in configs]
    with ProcessPoolExecutor(max_workers=args.workers) as pool:
        for m in pool.map(cli.run_one, configs, ["adversary_grid.py"] * len(configs), dirs):
            print(open(f"{m.output_dir}/summary.txt").read())


if __name__ == "__main__":
    main()
