"""Four-point defects on the ball and the bidisk as sample points approach the boundary.

The ball is Gromov hyperbolic, so its defects stay bounded; the bidisk has a flat
boundary piece and its defects keep growing with depth.
"""
import argparse

from kobalab.domains import Ball, Polydisk
from kobalab.hyperbolicity import four_point_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=4000)
    ap.add_argument("--kmin", type=int, default=2)
    ap.add_argument("--kmax", type=int, default=12)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    levels = range(a.kmin, a.kmax + 1)
    for name, dom in (("ball", Ball([0, 0], 1)), ("bidisk", Polydisk([0, 0], [1, 1]))):
        rep = four_point_scan(dom, a.n, levels, a.seed)
        print(f"{name}: delta_lower = {rep.delta_lower:.4f}")
        for row in rep.per_scale:
            print(f"  k={row['k']:2d}  certified defect {row['delta_lower']:.4f}"
                  f"  estimate {row['delta_upper_estimate']:.4f}")


if __name__ == "__main__":
    main()
