"""Delta^N(t) against the entropy solution for a Riemann plan, across scales.

    python3 scripts/riemann_convergence.py configs/riemann_tasep.json --jobs 1 --out riemann_delta.csv
"""

import argparse

from hydrolim import harness


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("plan")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="riemann_delta.csv")
    args = ap.parse_args()

    plan = harness.ExperimentPlan.load(args.plan)
    rep = harness.riemann_experiment(plan, jobs=args.jobs)
    rep.to_csv(args.out)
    for N, d in rep.medians("delta", plan.t_max).items():
        print(f"N={N:6d}  median Delta = {d:.5f}")
    if plan.speeds:
        cur = harness.current_lln_experiment(plan, rows=rep.rows)
        print(cur.to_json())
    print("checks:", rep.checks)


if __name__ == "__main__":
    main()
