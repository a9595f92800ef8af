"""Brute-force references: full tensor Gauss rules, Hermite coefficients by
dense quadrature, exhaustive index-set scans and Monte Carlo Bochner norms.

Nothing here uses the sparse machinery; these are the independent checks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .indexset import BudgetError, MultiIndex
from .orthopoly import gauss_hermite_rule, gauss_jacobi_rule, hermite_table

__all__ = [
    "TensorRule",
    "tensor_rule",
    "tensor_quadrature",
    "hermite_coefficients",
    "mc_bochner_error",
    "box_scan_indexset",
    "gaussian_moment",
    "make_rng",
]

TENSOR_CAP = 10_000_000


@dataclass
class TensorRule:
    orders: tuple[int, ...]
    points: np.ndarray   # (N, J)
    weights: np.ndarray  # (N,)

    def apply(self, f: Callable, vectorized: bool = False):
        if vectorized:
            vals = np.asarray(f(self.points), dtype=float)
            return np.tensordot(self.weights, vals, axes=(0, 0))
        total = None
        for w, y in zip(self.weights, self.points):
            term = w * np.asarray(f(y), dtype=float)
            total = term if total is None else total + term
        return float(total) if np.ndim(total) == 0 else total


def _rule(measure: str, n: int, a: float):
    if measure == "gaussian":
        return gauss_hermite_rule(n)
    if measure == "jacobi":
        return gauss_jacobi_rule(n, a, a)
    raise ValueError(f"unknown measure {measure!r}")


def tensor_rule(J: int, order, measure: str = "gaussian", a: float = 0.0) -> TensorRule:
    """Tensor Gauss rule with order+1 points per dimension (exact to degree 2*order+1)."""
    orders = tuple(order) if np.iterable(order) else (int(order),) * J
    if len(orders) != J:
        raise ValueError("one order per dimension")
    size = math.prod(o + 1 for o in orders)
    if size > TENSOR_CAP:
        raise BudgetError(f"tensor rule with {size} points exceeds {TENSOR_CAP}")
    if J == 0:
        return TensorRule((), np.zeros((1, 0)), np.ones(1))
    rules = [_rule(measure, o + 1, a) for o in orders]
    pts = np.array(list(itertools.product(*[r[0] for r in rules])))
    wts = np.array([math.prod(c) for c in itertools.product(*[r[1] for r in rules])])
    return TensorRule(orders, pts, wts)


def tensor_quadrature(J: int, order, f: Callable, measure: str = "gaussian", a: float = 0.0,
                      vectorized: bool = False):
    return tensor_rule(J, order, measure, a).apply(f, vectorized)


def gaussian_moment(p: int) -> float:
    """E[Y^p] for Y ~ N(0, 1): 0 for odd p, (p-1)!! for even p."""
    if p % 2:
        return 0.0
    return float(math.prod(range(p - 1, 0, -2))) if p else 1.0


def hermite_coefficients(f: Callable, J: int, max_degree: int, order: int,
                         vectorized: bool = False) -> dict[MultiIndex, object]:
    """v_s = int f H_s dgamma for every s with max_j s_j <= max_degree."""
    rule = tensor_rule(J, order)
    if vectorized:
        vals = np.asarray(f(rule.points), dtype=float)
    else:
        vals = np.stack([np.asarray(f(y), dtype=float) for y in rule.points])
    tables = [hermite_table(max_degree, rule.points[:, j]) for j in range(J)]
    out = {}
    for s in itertools.product(range(max_degree + 1), repeat=J):
        h = np.ones(len(rule.weights))
        for j, sj in enumerate(s):
            h = h * tables[j][sj]
        coef = np.tensordot(rule.weights * h, vals, axes=(0, 0))
        out[MultiIndex.from_dense(s)] = float(coef) if np.ndim(coef) == 0 else coef
    return out


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based (Philox) generator; streams are reproducible from the seed."""
    return np.random.Generator(np.random.Philox(seed))


def mc_bochner_error(approximant: Callable, reference: Callable, J: int, p: int = 2,
                     samples: int = 256, seed: int = 0, norm: Callable | None = None,
                     batch: Callable | None = None) -> tuple[float, float]:
    """Monte Carlo estimate of (E ||approx(y) - ref(y)||^p)^(1/p) and its standard error.

    ``batch`` (optional) maps an (N, J) sample array to a list of approximant
    values, for approximants that evaluate faster in bulk.
    """
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    norm = norm or (lambda v: float(np.linalg.norm(np.atleast_1d(v))))
    ys = make_rng(seed).standard_normal((samples, J))
    approx_vals = batch(ys) if batch is not None else [approximant(y) for y in ys]
    errs = np.array([norm(np.asarray(a) - np.asarray(reference(y))) ** p
                     for a, y in zip(approx_vals, ys)])
    mean = float(errs.mean())
    se_mean = float(errs.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    est = mean ** (1.0 / p)
    # delta method for the p-th root
    se = se_mean if p == 1 else (se_mean / (2 * est) if est > 0 else 0.0)
    return est, se


def box_scan_indexset(bounds: Iterable[int], predicate: Callable[[tuple], bool],
                      cap: int = TENSOR_CAP) -> set[tuple]:
    """All integer tuples 0 <= t_i <= bounds[i] with predicate(t)."""
    bounds = tuple(bounds)
    volume = math.prod(b + 1 for b in bounds)
    if volume > cap:
        raise BudgetError(f"box volume {volume} exceeds {cap}")
    return {t for t in itertools.product(*[range(b + 1) for b in bounds]) if predicate(t)}
