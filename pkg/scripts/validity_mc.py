"""Empirical coverage of conservative and smoothed CRR, and of BRR, over a small grid.

Usage: python scripts/validity_mc.py [--seed S] [--trials T]
"""

import argparse

from conformal_ridge import GenerativeSpec, coverage_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=2026)
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--p", type=int, default=2)
    ap.add_argument("--a", type=float, default=1.0)
    args = ap.parse_args()
    print("epsilon,n,crr,smoothed,brr,binomial_se,passed")
    for eps in (0.05, 0.2):
        for n in (50, 200):
            r = coverage_experiment(GenerativeSpec(p=args.p, seed=args.seed, prior_a=args.a),
                                    n, args.a, eps, args.trials)
            s = r.summary
            print(f"{eps},{n},{s['crr_coverage']:.4f},{s['smoothed_coverage']:.4f},"
                  f"{s['brr_coverage']:.4f},{r.targets['binomial_se']:.4f},{r.passed}", flush=True)


if __name__ == "__main__":
    main()
