"""Compare series energies of the two-particle model with the Galerkin oracle over a range of q."""

import argparse
from fractions import Fraction

from elliptic_cs import ModelParameters
from elliptic_cs.spectrum_recursion import solve_recursion
from elliptic_cs.verification import galerkin_oracle


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lambda", dest="lam", default="2")
    ap.add_argument("--L", type=int, default=6)
    ap.add_argument("--cutoff", type=int, default=40)
    args = ap.parse_args()
    lam = Fraction(args.lam)
    print(f"{'q':>6} {'n':>8} {'series':>18} {'galerkin':>18} {'diff':>10}")
    for n in ((0, 0), (1, 0), (2, 0), (1, 1), (3, 1)):
        K = sum(n)
        # within a momentum sector the levels are ordered by decreasing n_2
        level = K // 2 - n[1]
        sol = solve_recursion(ModelParameters(2, lam), n, args.L)
        for q in (0.05, 0.1, 0.15, 0.2, 0.25):
            ref = galerkin_oracle(ModelParameters(2, lam, q), cutoff=args.cutoff, total_momentum=K, levels=level + 1)[level]
            E = float(sol.energy(q))
            print(f"{q:6.2f} {str(n):>8} {E:18.12f} {ref:18.12f} {abs(E - ref):10.2e}")


if __name__ == "__main__":
    main()
