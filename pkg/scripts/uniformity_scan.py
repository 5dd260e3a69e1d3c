"""Scan the abelian-bump family for local uniformity of its monodromy lattices.

The fiber over lam carries the lattice generated by c = lam. Its gap closes
as lam approaches 0, so a scan over a range containing 0 fails there.

Usage: python3 scripts/uniformity_scan.py [--lo A] [--hi B] [--grid N] [--threshold T]
"""

import argparse

from transalg import algebroid as alg
from transalg import holonomy as hol


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lo", type=float, default=0.0)
    ap.add_argument("--hi", type=float, default=1.0)
    ap.add_argument("--grid", type=int, default=21)
    ap.add_argument("--threshold", type=float, default=1e-3)
    ap.add_argument("--steps", type=int, default=100)
    args = ap.parse_args()
    v = hol.local_uniform_check(alg.abelian_bump, (args.lo, args.hi), args.grid, args.threshold, steps=args.steps)
    print(f"range [{args.lo}, {args.hi}] grid {args.grid}: {v.to_json()} after {v.evaluated} fibers")


if __name__ == "__main__":
    main()
