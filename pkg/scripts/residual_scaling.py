"""Eigen-residual of truncated eigenfunctions against q, with the fitted log-log slope per order."""

import argparse
from fractions import Fraction

from elliptic_cs import ModelParameters
from elliptic_cs.spectrum_recursion import ModeVector, solve_recursion
from elliptic_cs.verification import eigen_residual
from elliptic_cs.wavefunction import assemble_eigenfunction


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=2)
    ap.add_argument("--lambda", dest="lam", default="3/2")
    ap.add_argument("--n", default="1,0")
    ap.add_argument("--max-L", type=int, default=4)
    ap.add_argument("--samples", type=int, default=20)
    args = ap.parse_args()
    params = ModelParameters(args.N, Fraction(args.lam))
    n = ModeVector.parse(args.n).n
    qs = [0.05, 0.1, 0.15, 0.2]
    print("L  " + "  ".join(f"q={q:<5}" for q in qs) + "  slope  target")
    for L in range(1, args.max_L + 1):
        sol = solve_recursion(params, n, L)
        _, psi = assemble_eigenfunction(sol)
        rep = eigen_residual(psi, sol.energy_value, qs, samples=args.samples)
        cells = "  ".join(f"{r:.1e}" for r in rep.max_residual)
        print(f"{L}  {cells}  {rep.slope:5.2f}  {2 * (L + 1) - 0.5}")


if __name__ == "__main__":
    main()
