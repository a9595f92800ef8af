"""Command-line entry point: ``sparsecoll {nodes,weights,indexset,exactness,study}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .fem import CoercivityError, SolverError
from .indexset import BudgetError, ClosureError, build_G, build_Lambda, plan_cost
from .model import PositivityError, rho_defaults
from .nodes import OrderingError, family_from_name
from .orthopoly import ConvergenceError
from .rules1d import unirule
from .study import ConfigError, ExperimentConfig, load_config, run_study

log = logging.getLogger("sparsecoll")

EXIT_CONFIG, EXIT_NUMERIC, EXIT_BUDGET = 2, 3, 4
NUMERIC_ERRORS = (ConvergenceError, SolverError, CoercivityError, PositivityError,
                  OrderingError, ClosureError, OverflowError, FloatingPointError, ArithmeticError)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _emit(text: str, out: str | None, filename: str) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    (path / filename).write_text(text)
    log.info("wrote %s", path / filename)


def _levels(args) -> range:
    if args.m is not None:
        return range(args.m, args.m + 1)
    return range(0, args.max_m + 1)


def cmd_nodes(args) -> int:
    family = family_from_name(args.family, args.jacobi_a)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["level", "k", "point"])
    for m in _levels(args):
        for k, y in enumerate(family.sequence(m).points):
            w.writerow([m, k, _fmt(float(y))])
    _emit(buf.getvalue(), args.out, f"nodes_{family.name}.csv")
    return 0


def cmd_weights(args) -> int:
    family = family_from_name(args.family, args.jacobi_a)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["level", "k", "point", "weight"])
    for m in _levels(args):
        rule = unirule(family, m)
        for k, (y, om) in enumerate(zip(rule.points, rule.weights)):
            w.writerow([m, k, _fmt(float(y)), _fmt(float(om))])
    _emit(buf.getvalue(), args.out, f"weights_{family.name}.csv")
    return 0


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    run = cfg.run
    if args.seed is not None:
        run = replace(run, seed=args.seed)
    if args.jobs is not None:
        run = replace(run, jobs=args.jobs)
    if args.profile is not None:
        run = replace(run, profile=args.profile)
    return cfg.replace(run=run)


def cmd_indexset(args) -> int:
    cfg = _config(args)
    p = cfg.plan
    regime = args.regime or p.regime
    parity = args.parity or p.parity
    family = cfg.family
    tau = family.tau if p.tau is None else p.tau
    spec1, spec2, _ = rho_defaults(cfg.model, nu=p.nu, tau=tau, scale=p.scale,
                                   margin=p.margin, q_margin=p.q_margin)
    if regime == "parametric":
        plan = build_Lambda(args.xi, spec1, parity=parity)
    else:
        plan = build_G(args.xi, p.alpha, spec1, spec2, regime=regime, parity=parity)
    doc = plan.to_json_dict()
    doc["stats"] = {
        "cardinality": plan.cardinality,
        "dyadic_dim": plan.dyadic_dim,
        "grid_points": plan_cost(plan, "grid_points", family),
        "max_level": plan.max_level,
        "max_dim": plan.max_dim,
        "visited": plan.visited,
    }
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out, "indexset.json")
    return 0


def cmd_exactness(args) -> int:
    from .checks import run_all

    failed = 0
    for r in run_all():
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
        failed += not r.passed
    return EXIT_NUMERIC if failed else 0


def cmd_study(args) -> int:
    cfg = _config(args)
    result = run_study(cfg)
    out = args.out or cfg.run.out
    for path in result.write(out):
        log.info("wrote %s", path)
    s = result.summary()
    print(f"{cfg.name}: fitted slope {s['fitted_slope']:.4f}, "
          f"theory rate {s['theory_rate']:.4f}, envelope {s['envelope']:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment TOML file")
    common.add_argument("--out", help="output directory (default: stdout for tables)")
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int)
    common.add_argument("--profile", choices=("verify", "fast"))
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="sparsecoll", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn, helptext in (("nodes", cmd_nodes, "node tables as CSV"),
                               ("weights", cmd_weights, "quadrature weight tables as CSV")):
        sp = sub.add_parser(name, parents=[common], help=helptext)
        sp.add_argument("--family", default="gauss-hermite")
        sp.add_argument("--jacobi-a", type=float, default=0.0)
        sp.add_argument("--m", type=int, help="single level")
        sp.add_argument("--max-m", type=int, default=8, help="levels 0..max-m when --m is absent")
        sp.set_defaults(func=fn)

    sp = sub.add_parser("indexset", parents=[common], help="build G(xi) or Lambda(xi) as JSON")
    sp.add_argument("--xi", type=float, required=True)
    sp.add_argument("--regime", choices=("expansion", "interpolation", "parametric"))
    sp.add_argument("--parity", choices=("all", "even"))
    sp.set_defaults(func=cmd_indexset)

    sp = sub.add_parser("exactness", parents=[common], help="run the invariant suite")
    sp.set_defaults(func=cmd_exactness)

    sp = sub.add_parser("study", parents=[common], help="run a convergence study")
    sp.set_defaults(func=cmd_study)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
