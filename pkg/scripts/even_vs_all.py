"""Grid sizes of Lambda(xi) against Lambda_ev(xi), and the equal-grid-budget
quadrature comparison from configs/even_gain_*.toml.

    python scripts/even_vs_all.py
"""

import sys
from pathlib import Path

from sparsecoll.indexset import build_Lambda, grid_of
from sparsecoll.model import CoefficientModel, rho_defaults
from sparsecoll.nodes import GaussHermite
from sparsecoll.study import load_config, run_study

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    spec, _, _ = rho_defaults(CoefficientModel(J=4))
    gh = GaussHermite()
    print("xi,grid_all,grid_even")
    for xi in (10, 30, 100, 300, 1000):
        a = len(grid_of(build_Lambda(xi, spec), gh))
        e = len(grid_of(build_Lambda(xi, spec, parity="even"), gh))
        print(f"{xi},{a},{e}")
    res = {p: run_study(load_config(ROOT / "configs" / f"even_gain_{p}.toml")) for p in ("even", "all")}
    print("n,error_even,error_all")
    for re, ra in zip(res["even"].rows, res["all"].rows):
        print(f"{re['n']},{re['error']:.6e},{ra['error']:.6e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
