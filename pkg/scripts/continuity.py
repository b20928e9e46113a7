"""Distance brackets along domains converging to the unit ball and to the bidisk."""
import argparse

from kobalab.domains import Ball, Polydisk
from kobalab.rescaling import distance_continuity_check


def report(title, rep):
    print(f"{title}: max terminal gap {rep.max_terminal_gap:.4g}")
    for r in rep.records:
        print(f"  probe {r['probe']}  n={r['n']:<4}  [{r['lower']:.5f}, {r['upper']:.5f}]"
              f"  limit [{r['limit_lower']:.5f}, {r['limit_upper']:.5f}]  gap {r['gap']:.2e}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ns", type=int, nargs="+", default=[1, 4, 16, 64])
    a = ap.parse_args()
    probes = [([0, 0], [0.5, 0]), ([0.2j, 0], [0, 0.3])]
    rep = distance_continuity_check([Ball([0, 0], 1 + 1 / n) for n in a.ns], Ball([0, 0], 1), probes, labels=a.ns)
    report("balls of radius 1 + 1/n", rep)
    rep = distance_continuity_check([Polydisk([1 / n, 0], [1, 1]) for n in a.ns], Polydisk([0, 0], [1, 1]),
                                    probes, labels=a.ns)
    report("bidisks shifted by 1/n", rep)


if __name__ == "__main__":
    main()
