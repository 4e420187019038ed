"""Monte Carlo of sqrt(n)(B - C) for both object laws and a ladder of sample sizes.

Usage: python scripts/theorem1_mc.py [--seed S] [--trials T] [--n N ...]
"""

import argparse

from conformal_ridge import GenerativeSpec, ObjectLaw, endpoint_diff_experiment

LAWS = {"m=1": dict(p=1, object_law=ObjectLaw.CONSTANT_ONE),
        "m=0": dict(p=2, object_law=ObjectLaw.STANDARD_GAUSSIAN)}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=2026)
    ap.add_argument("--trials", type=int, default=4000)
    ap.add_argument("--epsilon", type=float, default=0.1)
    ap.add_argument("--a", type=float, default=1.0)
    ap.add_argument("--n", type=int, nargs="+", default=[250, 1000, 2000, 4000])
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    print("law,n,target_std,upper_mean,upper_std,upper_ks_p,lower_mean,lower_std,lower_ks_p,excluded,passed")
    for label, kw in LAWS.items():
        for n in args.n:
            r = endpoint_diff_experiment(GenerativeSpec(seed=args.seed, **kw), n, args.a,
                                         args.epsilon, args.trials, workers=args.workers)
            s = r.summary
            print(f"{label},{n},{r.targets['std']:.4f},{s['upper_mean']:.4f},{s['upper_std']:.4f},"
                  f"{s['upper_ks_p']:.3g},{s['lower_mean']:.4f},{s['lower_std']:.4f},"
                  f"{s['lower_ks_p']:.3g},{s['excluded']},{r.passed}", flush=True)


if __name__ == "__main__":
    main()
