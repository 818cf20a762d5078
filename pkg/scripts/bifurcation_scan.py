"""Scan the pure NE set over mu and bisect the two threshold profiles."""

import argparse
import json
from pathlib import Path

import numpy as np

from qdilemma.equilibrium import enumerate_pure_ne, ne_set, ne_threshold
from qdilemma.game import DEFECT, HALF_PI, QUANTUM


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--delta", type=float, default=HALF_PI)
    ap.add_argument("--points", type=int, default=51)
    ap.add_argument("--out", default="results/bifurcation.json")
    args = ap.parse_args()

    scan = []
    prev = None
    for mu in np.linspace(0.0, 1.0, args.points):
        ne = sorted(a + b for a, b in ne_set(enumerate_pure_ne(mu, args.delta)))
        scan.append({"mu": float(mu), "ne": ne})
        if ne != prev:
            print(f"mu={mu:.3f}: {{{', '.join(ne)}}}")
            prev = ne

    thresholds = {}
    for name, prof in (("QQ", (QUANTUM, QUANTUM)), ("QD", (QUANTUM, DEFECT))):
        r = ne_threshold(prof, args.delta)
        thresholds[name] = {"mu_star": r.mu_star, "gamma_t": r.gamma_t, "flag": r.flag,
                            "direction": r.direction}
        print(f"{name}: {r.flag} mu*={r.mu_star:.9f} ({r.direction}), 1/7={1 / 7:.9f}")

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps({"delta": args.delta, "scan": scan, "thresholds": thresholds}, indent=2) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
