"""Sped-up TMCMC coordinate vs its Langevin limit for d in {5, 20, 200}.

    python scripts/limit_study.py [--replicates 10] [--out DIR]
"""
import sys

from tmcmc.cli import main

if __name__ == "__main__":
    sys.exit(main(["limit", *sys.argv[1:]]))
