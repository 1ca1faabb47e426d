"""Confirmation depth and time per adversarial ratio (20 s slots)."""
from __future__ import annotations

import argparse

from fedchain.cli import DEFAULT_RATIOS, confirm_table


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--slot-seconds", default="20")
    args = ap.parse_args()
    print("ratio,kappa,seconds,minutes")
    for row in confirm_table(DEFAULT_RATIOS, args.slot_seconds):
        print(f"{row.ratio},{row.kappa},{row.seconds:g},{row.minutes:.1f}")


if __name__ == "__main__":
    main()
