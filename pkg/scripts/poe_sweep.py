"""Sweep j* and the 3 + j* + mu upper bound over a (D, mu) grid; prints CSV."""
import argparse
import csv
import sys

from predload.poe import evaluate_poe, j_star_bounds, poe_lower_instance, poe_upper_bound, time_points


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--exp-lo", type=int, default=3)
    ap.add_argument("--exp-hi", type=int, default=16)
    ap.add_argument("--mu", default="2,4,8,16,32,64")
    args = ap.parse_args()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["D", "mu", "j_star", "lower_ratio", "bracket_lo", "bracket_hi", "upper"])
    for e in range(args.exp_lo, args.exp_hi + 1):
        D = 2**e
        for mu in (float(x) for x in args.mu.split(",")):
            inst = poe_lower_instance(D, mu)
            lo, hi = j_star_bounds(D, mu) if D >= mu else ("", "")
            w.writerow([D, f"{mu:g}", time_points(D, mu).j_star, f"{evaluate_poe(inst, [0] * len(inst.jobs), mu, 1):g}",
                        lo if lo == "" else f"{lo:.4f}", hi if hi == "" else f"{hi:.4f}",
                        f"{poe_upper_bound(D, mu):g}"])


if __name__ == "__main__":
    main()
