"""Empirical ON/OPT on random instances for each wrapper combination of greedy-lp."""
import argparse
import math

import numpy as np

from predload.generators import GenConfig, random_instance
from predload.oracle import opt_assign
from predload.simulate import build_policy, run_online

VARIANTS = {"plain": {}, "doubling": {"doubling": True}, "blocking": {"blocking": True},
            "both": {"doubling": True, "blocking": True}}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--jobs", type=int, default=8)
    ap.add_argument("--machines", type=int, default=3)
    ap.add_argument("--norm", type=float, default=2.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    ratios = {k: [] for k in VARIANTS}
    for s in range(args.count):
        inst = random_instance(GenConfig(jobs=args.jobs, machines=args.machines, mu1=2.0, mu2=2.0, seed=args.seed + s))
        d = inst.params()
        opt = None
        for name, kw in VARIANTS.items():
            pol = build_policy("greedy-lp", inst.machines, args.norm, mu1=d.mu1, dtilde=d.Dtilde, mu=d.mu, **kw)
            on = run_online(pol, inst, args.norm).objective
            opt = opt or opt_assign(inst, args.norm, upper=on).value
            ratios[name].append(on / opt)
    print(f"{'variant':10s} {'mean':>8s} {'p95':>8s} {'max':>8s}")
    for name, r in ratios.items():
        r = np.array(r)
        print(f"{name:10s} {r.mean():8.4f} {np.quantile(r, 0.95):8.4f} {r.max():8.4f}")


if __name__ == "__main__":
    main()
