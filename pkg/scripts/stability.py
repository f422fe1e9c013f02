"""Macroscopic stability and finite propagation frequencies for a model.

    python3 scripts/stability.py --model misanthrope_bond_disorder --trials 200
"""

import argparse
import json

from hydrolim import harness


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--model", default="misanthrope_bond_disorder")
    ap.add_argument("--scales", type=int, nargs="+", default=[125, 250, 500])
    ap.add_argument("--gamma", type=float, default=0.05)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--particles", type=int, default=100)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    stab = harness.macro_stability_test(args.model, tuple(args.scales), args.gamma, args.trials, args.particles,
                                        jobs=args.jobs)
    print(json.dumps(harness._jsonable(stab.summary), indent=2, sort_keys=True))
    prop = harness.finite_propagation_test(args.model, N=100, t=0.25, trials=args.trials, jobs=args.jobs)
    print(json.dumps(harness._jsonable(prop.summary), indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
