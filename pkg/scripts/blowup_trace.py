"""Affine blow-up of the unit ball at e_0 converging to the quadric model."""
import argparse

import numpy as np

from kobalab.domains import Ball
from kobalab.rescaling import blowup_sequence, quadric_model


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-max", type=int, default=10)
    ap.add_argument("--dirs", type=int, default=4096)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    tr = blowup_sequence(Ball([0, 0], 1), [1, 0], a.n_max, target=quadric_model(), n_dirs=a.dirs, seed=a.seed)
    dh = tr.hausdorff()
    print(" n   tau_0        tau_1        hausdorff")
    for s, d in zip(tr.steps, dh):
        print(f"{s.n:2d}   {s.frame.tau[0]:.4e}   {s.frame.tau[1]:.4e}   {d:.4e}")
    n = np.arange(1, len(dh) + 1)
    print(f"log2 decay rate of the Hausdorff distance: {np.polyfit(n, np.log2(dh), 1)[0]:.3f}")


if __name__ == "__main__":
    main()
