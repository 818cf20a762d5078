"""Payoffs of the equilibrium profiles as decoherence grows.

Writes one CSV row per (gamma_t, profile, basis) with both players' payoffs.
"""

import argparse
import csv
import math
from pathlib import Path

import numpy as np

from qdilemma.game import COOPERATE, DEFECT, HALF_PI, QUANTUM, payoffs

PROFILES = {"QQ": (QUANTUM, QUANTUM), "QD": (QUANTUM, DEFECT),
            "CD": (COOPERATE, DEFECT), "DD": (DEFECT, DEFECT)}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gamma-t-max", type=float, default=3.0)
    ap.add_argument("--points", type=int, default=61)
    ap.add_argument("--out", default="results/payoff_curves.csv")
    args = ap.parse_args()

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["gamma_t", "mu", "profile", "delta", "payoff_a", "payoff_b"])
        for gt in np.linspace(0.0, args.gamma_t_max, args.points):
            mu = math.exp(-2 * gt)
            for name, (a, b) in PROFILES.items():
                for delta in (0.0, HALF_PI):
                    pa, pb = payoffs(a, b, mu, delta)
                    w.writerow([f"{gt:.6g}", f"{mu:.12g}", name, f"{delta:.6g}", f"{pa:.12g}", f"{pb:.12g}"])
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
