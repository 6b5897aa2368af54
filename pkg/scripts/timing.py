"""Per-iteration wall-clock of TMCMC and RWM on the iid standard-normal target.

    python scripts/timing.py [--iters 1000000] [--reps 5] [--out DIR]
"""
import sys

from tmcmc.cli import main

if __name__ == "__main__":
    sys.exit(main(["timing", *sys.argv[1:]]))
