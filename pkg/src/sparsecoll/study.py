"""Convergence studies: configuration, execution and slope fitting."""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .fem import SpatialHierarchy, h1_error, mesh, norm_V, prolong
from .indexset import BudgetError, IndexPlan, build_G, build_Lambda, calibrate_xi, plan_cost
from .model import CoefficientModel, rho_defaults, solve_parametric
from .nodes import family_from_name
from .oracle import make_rng, tensor_rule
from .sparse import SparseEvaluator, check_plan, solution_sampler

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

__all__ = [
    "ConfigError",
    "PlanConfig",
    "ReferenceConfig",
    "RunConfig",
    "ExperimentConfig",
    "load_config",
    "theory_rate",
    "fit_slope",
    "run_study",
    "StudyResult",
    "sample_parameters",
]

TASKS = ("quadrature", "interpolation")
REGIMES = ("expansion", "interpolation", "parametric")
COSTS = ("cardinality", "dyadic_dim", "grid_points")


MAX_NODE_LEVEL = 128        # node tables beyond this lose accuracy


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending field."""


@dataclass(frozen=True)
class PlanConfig:
    family: str = "gauss-hermite"
    jacobi_a: float = 0.0
    regime: str = "interpolation"
    parity: str = "all"
    alpha: float = 1.0
    cost: str = "dyadic_dim"
    budgets: tuple[int, ...] = (16, 32, 64, 128, 256, 512, 1024)
    nu: int = 1
    tau: float | None = None
    scale: float = 2.0
    margin: float = 0.5
    q_margin: float = 0.05
    max_level: int = 20
    spatial_level: int = 8      # fixed mesh level for the parametric regime


@dataclass(frozen=True)
class ReferenceConfig:
    kind: str = "oracle"        # oracle | closed-form
    level_offset: int = 3
    order: int = 7              # tensor rule order for quadrature references
    samples: int = 64           # Monte Carlo samples for interpolation errors


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    jobs: int = 1
    profile: str = "verify"     # verify | fast
    out: str = "results"


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "study"
    task: str = "quadrature"
    model: CoefficientModel = field(default_factory=CoefficientModel)
    plan: PlanConfig = field(default_factory=PlanConfig)
    reference: ReferenceConfig = field(default_factory=ReferenceConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"task: expected one of {TASKS}, got {self.task!r}")
        p = self.plan
        if p.regime not in REGIMES:
            raise ConfigError(f"plan.regime: expected one of {REGIMES}, got {p.regime!r}")
        if p.parity not in ("all", "even"):
            raise ConfigError(f"plan.parity: expected 'all' or 'even', got {p.parity!r}")
        if p.cost not in COSTS:
            raise ConfigError(f"plan.cost: expected one of {COSTS}, got {p.cost!r}")
        b = list(p.budgets)
        if not b or any(x < 1 for x in b) or any(y <= x for x, y in zip(b, b[1:])):
            raise ConfigError("plan.budgets: must be positive and strictly increasing")
        if p.parity == "even" and self.task != "quadrature":
            raise ConfigError("plan.parity: even plans are only meaningful for quadrature")
        r = self.reference
        if r.kind not in ("oracle", "closed-form"):
            raise ConfigError(f"reference.kind: unknown {r.kind!r}")
        if r.kind == "closed-form" and not (
            self.model.psi == "constant-1term" and self.model.mode == "lognormal"
            and self.model.source == "sine"
        ):
            raise ConfigError("reference.kind: closed form needs a lognormal constant-1term model "
                              "with the sine source")
        if r.kind == "oracle" and self.task == "quadrature" and (r.order + 1) ** self.model.J > 10**7:
            raise ConfigError("reference.order: tensor reference exceeds 1e7 points")
        if self.run.profile not in ("verify", "fast"):
            raise ConfigError(f"run.profile: expected verify or fast, got {self.run.profile!r}")
        try:
            family_from_name(p.family, p.jacobi_a)
        except ValueError as exc:
            raise ConfigError(f"plan.family: {exc}") from None

    @property
    def family(self):
        return family_from_name(self.plan.family, self.plan.jacobi_a)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["plan"]["budgets"] = list(self.plan.budgets)
        return d

    def replace(self, **sections) -> "ExperimentConfig":
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(sections)
        return ExperimentConfig(**d)


def _build(cls, table: dict, where: str):
    if not isinstance(table, dict):
        raise ConfigError(f"{where}: expected a table")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(table) - known)
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {', '.join(unknown)}")
    kw = dict(table)
    if "budgets" in kw:
        kw["budgets"] = tuple(int(x) for x in kw["budgets"])
    try:
        return cls(**kw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def config_from_dict(d: dict) -> ExperimentConfig:
    d = dict(d)
    unknown = sorted(set(d) - {"name", "task", "model", "plan", "reference", "run"})
    if unknown:
        raise ConfigError(f"top level: unknown field(s) {', '.join(unknown)}")
    return ExperimentConfig(
        name=str(d.get("name", "study")),
        task=str(d.get("task", "quadrature")),
        model=_build(CoefficientModel, d.get("model", {}), "model"),
        plan=_build(PlanConfig, d.get("plan", {}), "plan"),
        reference=_build(ReferenceConfig, d.get("reference", {}), "reference"),
        run=_build(RunConfig, d.get("run", {}), "run"),
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return config_from_dict(data)


# --- rates ------------------------------------------------------------------


def theory_rate(task: str, alpha: float, q1: float, q2: float) -> float:
    """min(alpha, beta) for the given operator."""
    if task == "quadrature":
        head, delta = 2 / q1 - 0.5, 2 / q1 - 2 / q2
    elif task == "interpolation":
        head, delta = 1 / q1 - 0.5, 1 / q1 - 1 / q2
    elif task == "expansion":
        head, delta = 1 / q1, 1 / q1 - 1 / q2
    else:
        raise ValueError(f"unknown task {task!r}")
    return min(alpha, head * alpha / (alpha + delta))


def fit_slope(ns, errors) -> float:
    """Least-squares decay rate r in error ~ n^-r over the last half of the points."""
    ns, errors = np.asarray(ns, float), np.asarray(errors, float)
    start = len(ns) // 2
    x, y = np.log(ns[start:]), np.log(errors[start:])
    if len(x) < 2:
        return math.nan
    return float(-np.polyfit(x, y, 1)[0])


def sample_parameters(measure: str, a: float, rng: np.random.Generator, n: int, J: int) -> np.ndarray:
    if measure == "gaussian":
        return rng.standard_normal((n, J))
    # density proportional to (1 - y^2)^a on [-1, 1]
    return 2.0 * rng.beta(a + 1, a + 1, size=(n, J)) - 1.0


# --- execution --------------------------------------------------------------


@dataclass
class StudyResult:
    config: ExperimentConfig
    rows: list[dict]
    timings: list[dict]
    slope: float
    rate: float
    q1: float
    q2: float
    reference_level: int

    @property
    def envelope(self) -> float:
        return 0.5 * self.rate

    def summary(self) -> dict:
        return {
            "name": self.config.name,
            "task": self.config.task,
            "fitted_slope": self.slope,
            "theory_rate": self.rate,
            "envelope": self.envelope,
            "q1": self.q1,
            "q2": self.q2,
            "reference_level": self.reference_level,
            "seed": self.config.run.seed,
            "config": self.config.to_dict(),
        }

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / f"{self.config.name}.csv", out / f"{self.config.name}.json",
                 out / f"{self.config.name}.timings.csv"]
        _write_csv(paths[0], self.rows)
        paths[1].write_text(json.dumps(_fmt_json(self.summary()), indent=2, sort_keys=True) + "\n")
        _write_csv(paths[2], self.timings)
        return paths


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _fmt_json(obj):
    if isinstance(obj, float):
        return float(f"{obj:.17g}") if math.isfinite(obj) else str(obj)
    if isinstance(obj, dict):
        return {k: _fmt_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_fmt_json(v) for v in obj]
    return obj


def _write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        if not rows:
            return
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(rows[0]))
        for r in rows:
            w.writerow([_fmt(v) for v in r.values()])


def _closed_form(model: CoefficientModel):
    sig = model.sigma
    mean_du = lambda x: math.exp(sig**2 / 2) * np.pi * np.cos(np.pi * x)
    path_du = lambda y: (lambda x: math.exp(-sig * y[0]) * np.pi * np.cos(np.pi * x))
    return mean_du, path_du


def _plans(cfg: ExperimentConfig, spec1, spec2, family):
    p = cfg.plan

    def builder(xi):
        if p.regime == "parametric":
            plan = build_Lambda(xi, spec1, parity=p.parity)
        else:
            plan = build_G(xi, p.alpha, spec1, spec2, regime=p.regime, parity=p.parity)
        top = max((v for s in plan.multi_indices for _, v in s), default=0)
        if top > MAX_NODE_LEVEL:
            raise BudgetError(f"univariate level {top} exceeds {MAX_NODE_LEVEL}")
        return plan

    out = []
    for n in p.budgets:
        xi, plan = calibrate_xi(n, p.cost, builder, family)
        if not plan.entries:
            raise BudgetError(f"budget {n} admits no plan; raise the budget")
        if p.regime != "parametric" and plan.max_level > p.max_level:
            raise BudgetError(f"budget {n} needs spatial level {plan.max_level} > {p.max_level}")
        out.append((n, xi, plan))
    return out


def run_study(cfg: ExperimentConfig) -> StudyResult:
    model = cfg.model
    family = cfg.family
    p = cfg.plan
    tau = family.tau if p.tau is None else p.tau
    spec1, spec2, reports = rho_defaults(model, nu=p.nu, tau=tau, scale=p.scale,
                                         margin=p.margin, q_margin=p.q_margin)
    if cfg.run.profile == "verify":
        bad = [r.message for r in reports if not r.passed]
        if bad:
            raise ConfigError(f"model: rho hypothesis fails ({'; '.join(bad)})")
    hier = SpatialHierarchy(model.f)
    plans = _plans(cfg, spec1, spec2, family)
    parametric = p.regime == "parametric"
    if parametric:
        # Lambda plans at one fixed mesh: the error is purely parametric
        kref = p.spatial_level
        fixed = solution_sampler(model, hier)
        sampler = lambda lev, y: fixed(p.spatial_level, y)
    else:
        kref = max(plan.max_level for _, _, plan in plans) + cfg.reference.level_offset
        sampler = solution_sampler(model, hier)
    err_fn = _error_function(cfg, hier, family, kref)

    rows, timings = [], []
    for n, xi, plan in plans:
        t0 = time.perf_counter()
        if cfg.run.profile == "verify":
            check_plan(plan)
        ev = SparseEvaluator(plan, family, sampler, model.J, spatial=not parametric,
                             prolongate=None if parametric else prolong, jobs=cfg.run.jobs)
        err, se = err_fn(ev)
        runtime = time.perf_counter() - t0
        rows.append({
            "n": n,
            "xi": xi,
            "cardinality": plan.cardinality,
            "dyadic_dim": plan.dyadic_dim,
            "grid_points": plan_cost(plan, "grid_points", family),
            "max_level": p.spatial_level if parametric else plan.max_level,
            "solves": ev.stats["solves"],
            "error": err,
            "stderr": se,
        })
        timings.append({"n": n, "runtime_s": runtime})
    slope = fit_slope([r["n"] for r in rows], [r["error"] for r in rows])
    rate = theory_rate(cfg.task, p.alpha, spec1.q, spec2.q)
    return StudyResult(cfg, rows, timings, slope, rate, spec1.q, spec2.q, kref)


def _error_function(cfg: ExperimentConfig, hier: SpatialHierarchy, family, kref: int):
    """Returns ev -> (relative error, standard error)."""
    model = cfg.model
    ref = cfg.reference
    closed = ref.kind == "closed-form"
    if closed:
        mean_du, path_du = _closed_form(model)

    if cfg.task == "quadrature":
        if closed:
            scale = math.exp(model.sigma**2 / 2) * math.pi / math.sqrt(2)

            def err(ev):
                return h1_error(ev.quadrature(), mean_du) / scale, 0.0
            return err
        rule = tensor_rule(model.J, ref.order, family.measure, family.jacobi_a)
        target = rule.apply(lambda y: solve_parametric(model, hier, kref, y).values)
        scale = norm_V(target)

        def err(ev):
            q = ev.quadrature()
            return norm_V(prolong(q, kref) - target) / scale, 0.0
        return err

    ys = sample_parameters(family.measure, family.jacobi_a, make_rng(cfg.run.seed),
                           ref.samples, model.J)
    if closed:
        refs = None
        norms = np.array([math.exp(-model.sigma * y[0]) * math.pi / math.sqrt(2) for y in ys])
    else:
        refs = [solve_parametric(model, hier, kref, y).values for y in ys]
        norms = np.array([norm_V(r) for r in refs])
    denom = math.sqrt(float(np.mean(norms**2)))

    def err(ev):
        vals = ev.interpolate(ys)
        if closed:
            e = np.array([h1_error(v, path_du(y)) for v, y in zip(vals, ys)])
        else:
            e = np.array([norm_V(prolong(v, kref) - r) for v, r in zip(vals, refs)])
        sq = e**2
        est = math.sqrt(float(sq.mean()))
        se = float(sq.std(ddof=1) / math.sqrt(len(sq))) / (2 * est) if est > 0 and len(sq) > 1 else 0.0
        return est / denom, se / denom
    return err
