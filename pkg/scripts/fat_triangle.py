"""Fat-triangle witnesses in the bidisk: the side length T needed for a defect above M."""
import argparse

import numpy as np

from kobalab.domains import Polydisk
from kobalab.hyperbolicity import fat_triangle_witness


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--M", type=float, nargs="+", default=[1, 2, 4, 8])
    a = ap.parse_args()
    dom = Polydisk([0, 0], [1, 1])
    o, x, y = np.zeros(2, complex), np.array([0, 1], complex), np.array([1, 1], complex)
    print("   M      T   defect_lower")
    for M in a.M:
        w = fat_triangle_witness(dom, o, x, y, M)
        print(f"{M:4g}  {w.T:5g}   {w.defect_lower:.4f}")


if __name__ == "__main__":
    main()
