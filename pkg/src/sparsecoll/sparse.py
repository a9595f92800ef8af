"""Sparse (Smolyak) interpolation and quadrature in the parameter and the fully
discrete multilevel operators.

Everything goes through the combination form: a set of (spatial level k,
multi-index s) pairs is expanded into integer coefficients c[(l, t)] such that

    sum_{(k,s)} delta_k Delta_s  =  sum_{(l,t)} c[(l,t)] P_l (x) I_t,

with Delta_s = sum_{e in E_s} (-1)^|e| I_{s-e} and delta_k = P_k - P_{k-1}.
Telescoping in k cancels most spatial terms automatically, so a point of a
tensor grid I_t is only solved at the levels that survive.
"""

from __future__ import annotations

import json
import math
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .fem import SpatialHierarchy, prolong
from .indexset import (
    ClosureError,
    IndexPlan,
    MultiIndex,
    ZERO,
    _product,
    is_downward_closed,
    point_id,
)
from .model import CoefficientModel, coefficient_at
from .nodes import NodeFamily, lagrange_matrix
from .orthopoly import hermite_table
from .rules1d import unirule

__all__ = [
    "TensorDifference",
    "combination_coefficients",
    "tensor_delta_interp",
    "tensor_delta_quad",
    "sparse_interpolate",
    "sparse_quadrature",
    "combined_weights",
    "quadrature_terms",
    "plan_step",
    "SparseEvaluator",
    "solution_sampler",
    "fully_discrete_interpolate",
    "fully_discrete_quadrature",
    "functional_quadrature",
    "truncated_expansion",
    "check_plan",
]


# --- combination expansion --------------------------------------------------


@dataclass(frozen=True)
class TensorDifference:
    """Delta_s written as a signed sum of tensor operators I_{s - step*e}.

    step=2 gives the differences used on even-parity sets, where levels below
    zero drop out.
    """

    s: MultiIndex
    step: int = 1
    terms: tuple[tuple[int, MultiIndex], ...] = field(init=False)

    def __post_init__(self):
        terms = []
        for e in _product([(0, 1)] * len(self.s)):
            lev = [(j, v - self.step * ej) for (j, v), ej in zip(self.s.items, e)]
            if any(v < 0 for _, v in lev):
                continue
            terms.append(((-1) ** sum(e), MultiIndex(tuple((j, v) for j, v in lev if v))))
        object.__setattr__(self, "terms", tuple(terms))


def _as_pairs(indices) -> list[tuple[int, MultiIndex]]:
    if isinstance(indices, IndexPlan):
        return list(indices.entries)
    out = []
    for item in indices:
        out.append(item if isinstance(item, tuple) else (0, item))
    return out


def plan_step(indices) -> int:
    return 2 if getattr(indices, "parity", "all") == "even" else 1


def combination_coefficients(indices, spatial: bool = True,
                             step: int | None = None) -> dict[tuple[int, MultiIndex], int]:
    """c[(l, t)] for a plan or an iterable of s / (k, s).

    With ``spatial=False`` the levels are ignored (P_l is the identity), which
    is the purely parametric operator.  ``step`` defaults to 2 for
    even-parity plans and 1 otherwise.
    """
    step = plan_step(indices) if step is None else step
    coef: dict[tuple[int, MultiIndex], int] = defaultdict(int)
    for k, s in _as_pairs(indices):
        spatial_terms = [(1, k), (-1, k - 1)] if spatial else [(1, 0)]
        for sign_e, t in TensorDifference(s, step).terms:
            for sign_k, lev in spatial_terms:
                if lev >= 0:
                    coef[(lev, t)] += sign_e * sign_k
    return {key: c for key, c in sorted(coef.items()) if c}


def check_plan(plan, step: int | None = None) -> None:
    """Raise ClosureError unless each slice is downward closed and slices are nested."""
    pairs = _as_pairs(plan)
    step = plan_step(plan) if step is None else step
    slices: dict[int, set] = defaultdict(set)
    for k, s in pairs:
        slices[k].add(s)
    levels = sorted(slices)
    for k in levels:
        if not is_downward_closed(slices[k], step):
            raise ClosureError(f"slice k={k} is not downward closed (step {step})")
    for k0, k1 in zip(levels, levels[1:]):
        if k1 != k0 + 1 or not slices[k1] <= slices[k0]:
            raise ClosureError(f"slices {k0} and {k1} are not nested")
    if levels and levels[0] != 0:
        raise ClosureError("plan has no level-0 slice")


# --- tensor grids -----------------------------------------------------------


def _grid_of_level(t: MultiIndex, family: NodeFamily, J: int):
    """(shape, ids, coords) of the tensor grid of level t, C order over t's support."""
    seqs = [family.sequence(v) for _, v in t.items]
    shape = tuple(len(sq) for sq in seqs)
    ids, coords = [], []
    for m in _product([range(n) for n in shape]):
        ids.append(point_id(t, m, family))
        y = np.zeros(J)
        for (j, _), sq, mj in zip(t.items, seqs, m):
            y[j - 1] = sq.points[mj]
        coords.append(y)
    return shape, ids, coords


def _tensor_weights(t: MultiIndex, family: NodeFamily) -> np.ndarray:
    w = np.ones(1)
    for _, v in t.items:
        w = np.multiply.outer(w, unirule(family, v).weights).ravel()
    return w


def _contract(values: np.ndarray, shape: tuple, bases: list[np.ndarray]) -> np.ndarray:
    """sum_m values[m] prod_j bases[j][:, m_j] for every evaluation point."""
    vs = values.shape[1:]
    r = values.reshape(shape + vs)
    if not bases:
        return r[None, ...]
    r = np.tensordot(bases[0], r, axes=(1, 0))
    for b in bases[1:]:
        r = np.einsum("an,an...->a...", b, r)
    return r


def _required_dim(t_list, J):
    need = max((t.max_dim for t in t_list), default=0)
    if J is None:
        return need
    if need > J:
        raise ValueError(f"index set uses dimension {need} > J={J}")
    return J


# --- evaluator --------------------------------------------------------------


class SparseEvaluator:
    """Evaluates combination-form operators with a value store keyed by
    (spatial level, parametric point id).

    ``sampler(level, y)`` returns the value (scalar or array) at a dense
    parameter vector y.  ``prolongate(values, level)`` lifts stored values to a
    finer level; the default treats values as level-independent.
    """

    def __init__(self, plan, family: NodeFamily, sampler: Callable, J: int | None = None,
                 spatial: bool = True, prolongate: Callable | None = None, jobs: int = 1,
                 step: int | None = None):
        self.plan = plan
        self.family = family
        self.sampler = sampler
        self.spatial = spatial
        self.prolongate = prolongate or (lambda v, lev: v)
        self.jobs = max(1, int(jobs))
        self.step = plan_step(plan) if step is None else step
        self.coefficients = combination_coefficients(plan, spatial, self.step)
        self.J = _required_dim([t for _, t in self.coefficients], J)
        self.store: dict[tuple[int, tuple], np.ndarray] = {}
        self.coords: dict[tuple, np.ndarray] = {}
        self._grids: dict[MultiIndex, tuple] = {}
        self._weights: dict[int, dict[tuple, float]] | None = None
        self.stats = {"requests": 0, "solves": 0, "solve_seconds": 0.0}

    @property
    def top_level(self) -> int:
        return max((lev for lev, _ in self.coefficients), default=0)

    def grid(self, t: MultiIndex):
        if t not in self._grids:
            self._grids[t] = _grid_of_level(t, self.family, self.J)
            for pid, y in zip(self._grids[t][1], self._grids[t][2]):
                self.coords.setdefault(pid, y)
        return self._grids[t]

    def required(self) -> list[tuple[int, tuple]]:
        keys = set()
        for lev, t in self.coefficients:
            keys.update((lev, pid) for pid in self.grid(t)[1])
        return sorted(keys, key=repr)

    def prefetch(self) -> None:
        """Fill the store for every required (level, point), in a fixed order."""
        todo = [key for key in self.required() if key not in self.store]
        t0 = time.perf_counter()
        call = lambda key: np.asarray(self.sampler(key[0], self.coords[key[1]]), dtype=float)
        if self.jobs > 1 and len(todo) > 1:
            with ThreadPoolExecutor(self.jobs) as pool:
                results = list(pool.map(call, todo))
        else:
            results = [call(key) for key in todo]
        for key, val in zip(todo, results):
            self.store[key] = val
        self.stats["solves"] += len(todo)
        self.stats["solve_seconds"] += time.perf_counter() - t0

    def value(self, lev: int, pid: tuple) -> np.ndarray:
        self.stats["requests"] += 1
        key = (lev, pid)
        if key not in self.store:
            t0 = time.perf_counter()
            self.store[key] = np.asarray(self.sampler(lev, self.coords[pid]), dtype=float)
            self.stats["solves"] += 1
            self.stats["solve_seconds"] += time.perf_counter() - t0
        return self.store[key]

    def _values(self, lev: int, t: MultiIndex) -> np.ndarray:
        _, ids, _ = self.grid(t)
        return np.stack([self.value(lev, pid) for pid in ids])

    def interpolate(self, ys) -> np.ndarray:
        """Operator applied at parameter points ys, shape (N, J) or (J,)."""
        ys = np.asarray(ys, dtype=float)
        single = ys.ndim == 1
        ys = np.atleast_2d(ys)
        if ys.shape[1] < self.J:
            raise ValueError(f"parameter points need {self.J} coordinates")
        self.prefetch()
        bases: dict[tuple[int, int], np.ndarray] = {}
        per_level: dict[int, np.ndarray] = {}
        for (lev, t), c in self.coefficients.items():
            shape, _, _ = self.grid(t)
            bl = []
            for j, v in t.items:
                if (j, v) not in bases:
                    bases[(j, v)] = lagrange_matrix(self.family.sequence(v), ys[:, j - 1])
                bl.append(bases[(j, v)])
            term = c * _contract(self._values(lev, t), shape, bl)
            per_level[lev] = per_level[lev] + term if lev in per_level else term
        out = self._merge(per_level)
        if out is None:
            return None
        return out[0] if single else out

    def combined_weights(self) -> dict[int, dict[tuple, float]]:
        """Per level, one weight per grid point; assembled once."""
        if self._weights is None:
            acc: dict[int, dict[tuple, float]] = defaultdict(lambda: defaultdict(float))
            for (lev, t), c in self.coefficients.items():
                _, ids, _ = self.grid(t)
                for pid, w in zip(ids, _tensor_weights(t, self.family)):
                    acc[lev][pid] += c * w
            self._weights = {lev: dict(sorted(d.items(), key=lambda kv: repr(kv[0])))
                             for lev, d in sorted(acc.items())}
        return self._weights

    def quadrature(self):
        self.prefetch()
        per_level = {}
        for lev, wmap in self.combined_weights().items():
            total = None
            for pid, w in wmap.items():
                if w == 0.0:
                    continue
                term = w * self.value(lev, pid)
                total = term if total is None else total + term
            if total is not None:
                per_level[lev] = total
        out = self._merge(per_level)
        if out is None:
            return None
        return float(out) if np.ndim(out) == 0 else out

    def _merge(self, per_level: dict):
        if not per_level:
            return None
        top = max(per_level)
        total = None
        for lev in sorted(per_level):
            v = self.prolongate(per_level[lev], top)
            total = v if total is None else total + v
        return total

    def grid_size(self) -> int:
        return len({pid for lev, t in self.coefficients for pid in self.grid(t)[1]})

    def stats_json(self) -> str:
        d = dict(self.stats)
        d["solve_seconds"] = round(d["solve_seconds"], 6)
        d.update(
            stored_values=len(self.store),
            grid_points=self.grid_size(),
            combination_terms=len(self.coefficients),
            levels=sorted({lev for lev, _ in self.coefficients}),
        )
        return json.dumps(d, sort_keys=True)


# --- purely parametric operators ----------------------------------------------


def _scalar_sampler(f: Callable):
    return lambda lev, y: f(y)


def tensor_delta_interp(s: MultiIndex, family: NodeFamily, f: Callable, y, J: int | None = None):
    ev = SparseEvaluator([(0, s)], family, _scalar_sampler(f), J or _dim_of(y), spatial=False)
    return _scalar(ev.interpolate(np.asarray(y, dtype=float)))


def tensor_delta_quad(s: MultiIndex, family: NodeFamily, f: Callable, J: int | None = None):
    ev = SparseEvaluator([(0, s)], family, _scalar_sampler(f), J, spatial=False)
    return _scalar(ev.quadrature())


def _dim_of(y) -> int:
    return int(np.shape(y)[-1]) if np.ndim(y) else 1


def _scalar(v):
    if v is None:
        return 0.0
    return float(v) if np.ndim(v) == 0 else v


def _parametric_indices(plan, step: int | None) -> tuple[list[MultiIndex], int]:
    if isinstance(plan, IndexPlan):
        idx = plan.multi_indices
    else:
        idx = sorted({p[1] if isinstance(p, tuple) else p for p in plan})
    return idx, plan_step(plan) if step is None else step


def sparse_interpolate(plan, family: NodeFamily, f: Callable, y, J: int | None = None,
                       check: bool = True, step: int | None = None):
    """I_Lambda f at y (a point or an (N, J) batch)."""
    idx, step = _parametric_indices(plan, step)
    if check and not is_downward_closed(idx, step):
        raise ClosureError("index set is not downward closed")
    J = J or _dim_of(y)
    ev = SparseEvaluator(idx, family, _scalar_sampler(f), J, spatial=False, step=step)
    out = ev.interpolate(np.asarray(y, dtype=float))
    return _scalar(out) if np.ndim(y) <= 1 else out


def sparse_quadrature(plan, family: NodeFamily, f: Callable, J: int | None = None,
                      check: bool = True, step: int | None = None):
    """Q_Lambda f through combined per-point weights."""
    idx, step = _parametric_indices(plan, step)
    if check and not is_downward_closed(idx, step):
        raise ClosureError("index set is not downward closed")
    ev = SparseEvaluator(idx, family, _scalar_sampler(f), J, spatial=False, step=step)
    return _scalar(ev.quadrature())


def quadrature_terms(plan, family: NodeFamily, f: Callable, J: int | None = None,
                     step: int | None = None):
    """Q_Lambda f as the plain sum of Delta^Q_s f over s (no weight merging)."""
    idx, step = _parametric_indices(plan, step)
    total = 0.0
    for s in idx:
        ev = SparseEvaluator([(0, s)], family, _scalar_sampler(f), J, spatial=False, step=step)
        total = total + _scalar(ev.quadrature())
    return total


def combined_weights(plan, family: NodeFamily, J: int | None = None, step: int | None = None):
    """(ids, coords, weights) of the sparse rule for a parametric index set."""
    idx, step = _parametric_indices(plan, step)
    ev = SparseEvaluator(idx, family, _scalar_sampler(lambda y: 0.0), J, spatial=False, step=step)
    wmap = ev.combined_weights().get(0, {})
    ids = list(wmap)
    coords = np.array([ev.coords[p] for p in ids]).reshape(len(ids), ev.J)
    return ids, coords, np.array([wmap[p] for p in ids])


# --- fully discrete operators -------------------------------------------------


def solution_sampler(model: CoefficientModel, hierarchy: SpatialHierarchy) -> Callable:
    def sample(level, y):
        yy = np.zeros(model.J)
        n = min(len(y), model.J)
        yy[:n] = y[:n]
        return hierarchy.solve(level, coefficient_at(model, yy)).values
    return sample


def _fem_prolongate(values, level):
    return prolong(values, level)


def _fully_discrete_evaluator(plan, family, hierarchy, model, jobs, check):
    if check:
        check_plan(plan)
    sampler = solution_sampler(model, hierarchy)
    return SparseEvaluator(plan, family, sampler, model.J, spatial=True,
                           prolongate=_fem_prolongate, jobs=jobs)


def fully_discrete_interpolate(plan: IndexPlan, family: NodeFamily, hierarchy: SpatialHierarchy,
                               model: CoefficientModel, y, jobs: int = 1, check: bool = True,
                               evaluator: SparseEvaluator | None = None):
    """I_G u at y: finest-level nodal vector (or an (N, n) batch for an (N, J) y)."""
    ev = evaluator or _fully_discrete_evaluator(plan, family, hierarchy, model, jobs, check)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    yy = np.zeros(y.shape[:-1] + (ev.J,))
    n = min(y.shape[-1], ev.J)
    yy[..., :n] = y[..., :n]
    out = ev.interpolate(yy)
    if out is None:
        return np.zeros(2 ** (hierarchy_level(plan) + 1) - 1)
    return out


def hierarchy_level(plan) -> int:
    return max(0, max((k for k, _ in _as_pairs(plan)), default=0))


def fully_discrete_quadrature(plan: IndexPlan, family: NodeFamily, hierarchy: SpatialHierarchy,
                              model: CoefficientModel, jobs: int = 1, check: bool = True,
                              evaluator: SparseEvaluator | None = None) -> np.ndarray:
    """Q_G u = integral of I_G u: finest-level nodal vector."""
    if check and not family_symmetric(family):
        raise ValueError("quadrature needs a symmetric node family")
    ev = evaluator or _fully_discrete_evaluator(plan, family, hierarchy, model, jobs, check)
    out = ev.quadrature()
    if out is None:
        return np.zeros(2 ** (hierarchy_level(plan) + 1) - 1)
    return out


def family_symmetric(family: NodeFamily, levels: Iterable[int] = range(6)) -> bool:
    return all(family.sequence(m).is_symmetric() for m in levels)


def functional_quadrature(plan: IndexPlan, family: NodeFamily, hierarchy: SpatialHierarchy,
                          model: CoefficientModel, functional: str | Callable = "mean",
                          x: float = 0.5, other=None, **kw) -> float:
    """phi(Q_G u) for a bounded linear functional phi on V.

    Built-in functionals: "mean", "point" (value at x) and "h1" (H^1 inner
    product with the nodal vector ``other``).
    """
    field_ = fully_discrete_quadrature(plan, family, hierarchy, model, **kw)
    if callable(functional):
        return float(functional(field_))
    if functional == "mean":
        return SpatialHierarchy.mean(field_)
    if functional == "point":
        return SpatialHierarchy.point_value(field_, x)
    if functional == "h1":
        if other is None:
            raise ValueError("h1 functional needs the fixed field 'other'")
        return SpatialHierarchy.h1_inner(field_, other)
    raise ValueError(f"unknown functional {functional!r}")


# --- truncated Hermite expansion ------------------------------------------------


class TruncatedExpansion:
    """y -> sum_{(k,s)} delta_k(v_s) H_s(y) with precomputed coefficients."""

    def __init__(self, terms: dict[MultiIndex, np.ndarray], J: int, level: int | None):
        self.terms = terms
        self.J = J
        self.level = level

    def __call__(self, y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        total = None
        for s, v in self.terms.items():
            h = 1.0
            for j, sj in s:
                h *= hermite_table(sj, y[j - 1 : j])[sj, 0]
            total = h * v if total is None else total + h * v
        if total is None:
            return 0.0 if self.level is None else np.zeros(2 ** (self.level + 1) - 1)
        return float(total) if np.ndim(total) == 0 else total


def truncated_expansion(plan, model=None, hierarchy: SpatialHierarchy | None = None,
                        order: int = 12, J: int | None = None, f: Callable | None = None):
    """S_G v with coefficients from a tensor Gauss-Hermite rule of ``order``+1 points.

    Either a scalar function ``f`` (spatial operators are then the identity and
    levels are ignored) or a ``model`` with a ``hierarchy``.
    """
    from .oracle import tensor_rule

    pairs = _as_pairs(plan)
    if not pairs:
        return TruncatedExpansion({}, J or 0, None if f is not None else 0)
    if f is not None:
        J = J or max((s.max_dim for _, s in pairs), default=0)
        coef = defaultdict(int)
        for _, s in pairs:
            coef[(0, s)] = 1
        sampler = lambda lev, y: f(y)
        top = None
    else:
        J = model.J if J is None else J
        coef = defaultdict(int)
        for k, s in pairs:
            coef[(k, s)] += 1
            if k > 0:
                coef[(k - 1, s)] -= 1
        samp = solution_sampler(model, hierarchy)
        sampler = samp
        top = max(k for k, _ in pairs)
    coef = {key: c for key, c in sorted(coef.items()) if c}
    rule = tensor_rule(J, order) if J else None
    by_level: dict[int, list] = defaultdict(list)
    for (lev, s), c in coef.items():
        by_level[lev].append((s, c))
    terms: dict[MultiIndex, np.ndarray] = {}
    for lev, items in sorted(by_level.items()):
        if rule is None:
            vals = np.asarray(sampler(lev, np.zeros(0)), dtype=float)[None, ...]
            weights, pts = np.ones(1), np.zeros((1, 0))
        else:
            vals = np.stack([np.asarray(sampler(lev, y), dtype=float) for y in rule.points])
            weights, pts = rule.weights, rule.points
        maxdeg = max((v for s, _ in items for _, v in s), default=0)
        tables = [hermite_table(maxdeg, pts[:, j]) for j in range(pts.shape[1])]
        for s, c in items:
            h = np.ones(len(weights))
            for j, sj in s:
                h = h * tables[j - 1][sj]
            vs = np.tensordot(weights * h, vals, axes=(0, 0))
            if top is not None:
                vs = prolong(vs, top)
            terms[s] = c * vs if s not in terms else terms[s] + c * vs
    return TruncatedExpansion(terms, J, top)
