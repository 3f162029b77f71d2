"""Three-particle solves over a grid of rational couplings, reporting how each resonance was resolved."""

import argparse
from collections import Counter
from fractions import Fraction

from elliptic_cs import ModelParameters
from elliptic_cs.spectrum_recursion import solve_recursion


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--L", type=int, default=3)
    args = ap.parse_args()
    couplings = [Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(2), Fraction(5, 2), Fraction(3)]
    modes = [(0, 0, 0), (1, 0, 0), (1, 1, 0), (2, 1, 0)]
    for lam in couplings:
        for n in modes:
            sol = solve_recursion(ModelParameters(3, lam), n, args.L, on_obstruction="record")
            counts = Counter(r["status"] for r in sol.resonances)
            first = next((r for r in sol.resonances if r["status"] == "violated"), None)
            where = f" first obstruction l={first['l']} mu={first['mu']}" if first else ""
            print(f"lambda={str(lam):>4} n={n} complete={sol.complete!s:5} {dict(sorted(counts.items()))}{where}")


if __name__ == "__main__":
    main()
