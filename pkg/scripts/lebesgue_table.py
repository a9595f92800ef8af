"""Weighted Lebesgue constants of Gauss-Hermite and Szabados nodes, as CSV.

    python scripts/lebesgue_table.py [max_m] > lebesgue.csv
"""

import sys

import numpy as np

from sparsecoll.nodes import GaussHermite, Szabados, lebesgue_constant


def main() -> int:
    mmax = int(sys.argv[1]) if len(sys.argv) > 1 else 40
    print("m,gauss_hermite,szabados,ratio")
    gh, sz = GaussHermite(), Szabados()
    ms, lam = [], []
    for m in range(mmax + 1):
        a = lebesgue_constant(gh.sequence(m))
        b = lebesgue_constant(sz.sequence(m))
        print(f"{m},{a:.17g},{b:.17g},{b / a:.17g}")
        if m >= 8:
            ms.append(m)
            lam.append(a)
    if len(ms) > 1:
        slope = np.polyfit(np.log(ms), np.log(lam), 1)[0]
        print(f"# gauss-hermite log-log growth exponent over m>=8: {slope:.4f}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
