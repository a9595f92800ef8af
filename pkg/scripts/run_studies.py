"""Run every study config in configs/ and print the fitted slopes.

    python scripts/run_studies.py [--out results] [--jobs 4] [names...]
"""

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

from sparsecoll.study import load_config, run_study

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("names", nargs="*", help="config stems (default: all)")
    ap.add_argument("--out", default=str(ROOT / "results"))
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    paths = sorted((ROOT / "configs").glob("*.toml"))
    if args.names:
        paths = [p for p in paths if p.stem in args.names]
    for path in paths:
        cfg = load_config(path)
        cfg = cfg.replace(run=replace(cfg.run, jobs=args.jobs))
        t0 = time.perf_counter()
        res = run_study(cfg)
        res.write(args.out)
        print(f"{cfg.name:24s} slope {res.slope:7.4f}  rate {res.rate:6.4f}  "
              f"envelope {res.envelope:6.4f}  final error {res.rows[-1]['error']:.3e}  "
              f"({time.perf_counter() - t0:.1f}s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
