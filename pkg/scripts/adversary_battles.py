"""Run every adversary against every estimation-only policy and tabulate ON vs the reference."""
import argparse
import csv
import math
import sys

from predload.adversaries import appendix_a_adversary, appendix_a_hints, appendix_b_adversary, lemma41_adversary, \
    lemma42_adversary
from predload.errors import ScaleError
from predload.simulate import build_policy

POLICIES = ["greedy-lp", "naive", "round-robin", "linf-exp"]


def battles(m, mu, D, dtilde, p):
    yield "lemma41", lambda pol: lemma41_adversary(m, mu, p, pol), {"mu1": mu}
    yield "lemma42", lambda pol: lemma42_adversary(m, dtilde, p, pol, variant="corrected"), {"dtilde": dtilde}
    mu1, dt = appendix_a_hints(D, mu)
    yield "appendixA", lambda pol: appendix_a_adversary(m, D, mu, pol, p=p), {"mu1": mu1, "dtilde": dt}
    yield "appendixB", lambda pol: appendix_b_adversary(int(mu), pol), {"lam": 1.0}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--machines", type=int, default=8)
    ap.add_argument("--mu", type=float, default=4)
    ap.add_argument("--D", type=float, default=64)
    ap.add_argument("--dtilde", type=float, default=4.0**13)
    ap.add_argument("--norm", type=float, default=math.inf)
    args = ap.parse_args()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["adversary", "policy", "jobs", "on", "reference", "ratio", "on_lb", "opt_ub"])
    for adv, make, hints in battles(args.machines, args.mu, args.D, args.dtilde, args.norm):
        for name in POLICIES:
            m = int(args.mu) if adv == "appendixB" else args.machines
            pol = build_policy(name, m, args.norm, **hints)
            try:
                t = make(pol)
            except ScaleError as exc:
                w.writerow([adv, name, "", "", "", "", "", f"aborted: {exc}"])
                continue
            on, ref = t.realized_on(), t.reference_value()
            w.writerow([adv, name, len(t.instance.jobs), f"{on:.6g}", f"{ref:.6g}", f"{on / ref:.6g}",
                        f"{t.on_lb:.6g}", f"{t.opt_ub:.6g}"])


if __name__ == "__main__":
    main()
