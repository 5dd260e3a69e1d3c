"""Measure the convergence order of the transport integrator.

Each presentation is transported along a curved interior path. The error at
each resolution is taken against a run with eight times as many points.
Consecutive error ratios near 4 indicate second-order accuracy.

Usage: python3 scripts/convergence_study.py [--base N] [--levels K] [--seed S]
"""

import argparse

import numpy as np

from transalg import algebroid as alg
from transalg import holonomy as hol


def curve(u):
    u = np.asarray(u, float)
    return np.stack([0.15 + 0.7 * u, 0.5 + 0.3 * np.sin(2.5 * u)], axis=-1)


def transported(p, n):
    return hol.transport(p, hol.SampledPath(curve(np.linspace(0, 1, n + 1)))).array


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--base", type=int, default=25)
    ap.add_argument("--levels", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    cases = {
        "abelian-bump(1.0)": alg.abelian_bump(1.0),
        "su2-clutch": alg.su2_clutch(),
        "sl2-clutch": alg.sl2_clutch(),
        "random su2": alg.random_polynomial_presentation("su2", rng),
    }
    for name, p in cases.items():
        b = p.backend
        steps = [args.base * 2**k for k in range(args.levels)]
        ref = transported(p, steps[-1] * 8)
        errs = [float(b.dist(b.mul(b.inv(ref), transported(p, n)))) for n in steps]
        print(name)
        for i, (n, e) in enumerate(zip(steps, errs)):
            ratio = f"{errs[i - 1] / e:7.3f}" if i else "      -"
            print(f"  points={n:<6d} error={e:.3e} ratio={ratio}")
        print(f"  fitted order {-np.polyfit(np.log(steps), np.log(errs), 1)[0]:.3f}")


if __name__ == "__main__":
    main()
