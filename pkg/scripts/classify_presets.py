"""Classify the preset presentations and print c together with its central status.

Usage: python3 scripts/classify_presets.py [--steps N]
"""

import argparse

import numpy as np

from transalg import algebroid as alg
from transalg import holonomy as hol
from transalg.groups import is_central


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=400)
    args = ap.parse_args()
    presets = {f"abelian-bump({lam})": alg.abelian_bump(lam) for lam in (0.0, 0.5, 1.0, 2.7)}
    presets["su2-clutch"] = alg.su2_clutch()
    presets["sl2-clutch"] = alg.sl2_clutch()
    print(f"{'preset':<22} {'backend':<14} central  c")
    for name, p in presets.items():
        c = hol.holonomy_sweep(p, args.steps).at(-1)
        print(f"{name:<22} {p.backend.name:<14} {str(is_central(c)):<8} {np.round(c.array, 9).tolist()}")


if __name__ == "__main__":
    main()
