"""Univariate node families Y_m and Lebesgue-constant estimates.

Every family produces, for each level m, m+1 strictly increasing points that
are mirror symmetric about 0 (so the middle point of an odd count is exactly
0 and Y_0 = [0]).  Points also carry a canonical *key*: two (level, index)
pairs share a key exactly when they denote the same point, which lets the
sparse grids deduplicate without comparing floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Hashable

import numpy as np
from scipy.optimize import minimize_scalar

from . import orthopoly
from .orthopoly import ConvergenceError

__all__ = [
    "NodeSequence",
    "NodeFamily",
    "GaussHermite",
    "Szabados",
    "GaussJacobi",
    "OrderingError",
    "family_from_name",
    "gauss_hermite_nodes",
    "szabados_nodes",
    "szabados_point",
    "gauss_jacobi_nodes",
    "barycentric_weights",
    "lagrange_matrix",
    "lebesgue_function",
    "lebesgue_constant",
    "LEBESGUE_GRID",
]

LEBESGUE_GRID = 20_000
ZERO_KEY: Hashable = ("zero",)


class OrderingError(ValueError):
    """Generated points are not strictly increasing."""


def barycentric_weights(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Barycentric weights w_k = 1 / prod_{j != k} (x_k - x_j) as (sign, log|w|).

    Kept in log-magnitude form so wide Hermite node sets cannot overflow.
    """
    n = x.size
    if n == 1:
        return np.ones(1), np.zeros(1)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    return np.prod(np.sign(diff), axis=1), -np.sum(np.log(np.abs(diff)), axis=1)


def lagrange_matrix(nodes: "NodeSequence", y) -> np.ndarray:
    """Matrix of l_k(y_i), shape (len(y), m+1).

    First (modified Lagrange) barycentric form l_k(y) = L(y) w_k / (y - x_k),
    accumulated in log-magnitudes; unlike the second form it stays accurate
    far outside the node hull, where the weighted Lebesgue function peaks.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    x = nodes.points
    d = y[:, None] - x[None, :]
    exact = d == 0.0
    d[exact] = 1.0
    logd = np.log(np.abs(d))
    sgn = np.sign(d)
    log_l = logd.sum(axis=1, keepdims=True) - logd + nodes.log_bary[None, :]
    sign_l = np.prod(sgn, axis=1, keepdims=True) * sgn * nodes.bary_sign[None, :]
    out = sign_l * np.exp(log_l)
    rows = exact.any(axis=1)
    out[rows] = exact[rows].astype(float)
    return out


@dataclass(eq=False)
class NodeSequence:
    level: int
    points: np.ndarray
    family: str
    keys: tuple = ()
    bary_sign: np.ndarray = field(init=False, repr=False)
    log_bary: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.points.setflags(write=False)
        if self.points.size != self.level + 1:
            raise ValueError(f"level {self.level} needs {self.level + 1} points")
        if np.any(np.diff(self.points) <= 0):
            raise OrderingError(f"{self.family} level {self.level}: points not increasing")
        if not self.keys:
            self.keys = tuple((self.family, self.level, k) for k in range(self.level + 1))
        self.bary_sign, self.log_bary = barycentric_weights(self.points)

    def __len__(self) -> int:
        return self.points.size

    def __iter__(self):
        return iter(self.points)

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.points + self.points[::-1]) <= tol))


class NodeFamily:
    """Generator m -> Y_m with the metadata the sparse operators need."""

    name: str = "abstract"
    measure: str = "gaussian"
    jacobi_a: float = 0.0
    # nominal Lebesgue growth exponent, lambda_m <= (C m + 1)^tau
    tau: float = 0.0

    def points(self, m: int) -> np.ndarray:
        raise NotImplementedError

    def key(self, m: int, k: int) -> Hashable:
        if m % 2 == 0 and k == m // 2:
            return ZERO_KEY
        return (self.name, m, k)

    def sequence(self, m: int) -> NodeSequence:
        return _cached_sequence(self, m)

    def __call__(self, m: int) -> NodeSequence:
        return self.sequence(m)

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


@lru_cache(maxsize=None)
def _cached_sequence(family: NodeFamily, m: int) -> NodeSequence:
    if m < 0:
        raise ValueError("level must be nonnegative")
    pts = family.points(m)
    keys = tuple(family.key(m, k) for k in range(m + 1))
    return NodeSequence(m, pts, family.name, keys)


@dataclass(frozen=True, repr=False)
class GaussHermite(NodeFamily):
    name = "gauss-hermite"
    measure = "gaussian"
    tau = 1.0 / 6.0 + 0.05

    def points(self, m):
        return orthopoly.hermite_roots(m)


@lru_cache(maxsize=None)
def szabados_point(m: int) -> float:
    """Positive global maximizer zeta of |H_{m-1}(y) sqrt(g(y))|, for m > 2.

    The maximum sits in the outermost lobe, beyond the last root of H_{m-1}.
    """
    if m <= 2:
        raise ValueError("added points are defined for m > 2")
    n = m - 1

    def neg(y):
        return -abs(float(orthopoly.hermite_value(n, y))) * math.sqrt(
            float(orthopoly.gaussian_density(y))
        )

    lo = float(orthopoly.hermite_roots(n - 1)[-1])
    hi = orthopoly.effective_support(n) + 4.0
    grid = np.linspace(lo, hi, 4001)
    vals = np.abs(orthopoly.hermite_value(n, grid)) * np.sqrt(orthopoly.gaussian_density(grid))
    i = int(np.argmax(vals))
    if i == 0 or i == grid.size - 1:
        raise ConvergenceError(f"maximizer of |H_{n} sqrt(g)| not bracketed")
    res = minimize_scalar(
        neg, bracket=(grid[i - 1], grid[i], grid[i + 1]), method="golden",
        tol=1e-10 / max(grid[i], 1.0),
    )
    zeta = float(res.x)
    if not zeta > lo:
        raise OrderingError(f"added point {zeta} does not exceed {lo}")
    return zeta


@dataclass(frozen=True, repr=False)
class Szabados(NodeFamily):
    """Y*_{m-2} with the two points +-zeta added, for m > 2."""

    name = "szabados"
    measure = "gaussian"
    tau = 0.05

    def points(self, m):
        if m <= 2:
            return orthopoly.hermite_roots(m)
        inner = orthopoly.hermite_roots(m - 2)
        zeta = szabados_point(m)
        if not zeta > inner[-1]:
            raise OrderingError(f"zeta={zeta} not beyond {inner[-1]}")
        return np.concatenate(([-zeta], inner, [zeta]))

    def key(self, m, k):
        if m <= 2:
            return GaussHermite().key(m, k)
        if 1 <= k <= m - 1:
            return GaussHermite().key(m - 2, k - 1)
        return (self.name, m, k)


@dataclass(frozen=True, repr=False)
class GaussJacobi(NodeFamily):
    """Roots of the degree-(m+1) Jacobi polynomial with parameters (a, a)."""

    a: float = 0.0
    name = "gauss-jacobi"
    measure = "jacobi"

    def __post_init__(self):
        if not self.a > -1.0:
            raise ValueError(f"Jacobi parameter must exceed -1, got {self.a}")

    @property
    def jacobi_a(self):  # type: ignore[override]
        return self.a

    def points(self, m):
        return orthopoly.jacobi_roots(m + 1, self.a, self.a)

    def key(self, m, k):
        if m % 2 == 0 and k == m // 2:
            return ZERO_KEY
        return (self.name, self.a, m, k)

    def __repr__(self):
        return f"GaussJacobi(a={self.a})"


def family_from_name(name: str, a: float = 0.0) -> NodeFamily:
    name = name.lower().replace("_", "-")
    if name in ("gauss-hermite", "gh", "hermite"):
        return GaussHermite()
    if name in ("szabados", "gauss-hermite-szabados"):
        return Szabados()
    if name in ("gauss-jacobi", "jacobi", "gj"):
        return GaussJacobi(a)
    raise ValueError(f"unknown node family {name!r}")


def gauss_hermite_nodes(m: int) -> NodeSequence:
    return GaussHermite().sequence(m)


def szabados_nodes(m: int) -> NodeSequence:
    return Szabados().sequence(m)


def gauss_jacobi_nodes(m: int, a: float) -> NodeSequence:
    return GaussJacobi(a).sequence(m)


def lebesgue_function(nodes: NodeSequence, y, weighted: bool = True) -> np.ndarray:
    """sqrt(g(y)) * sum_k |l_k(y)| / sqrt(g(y_k)); unweighted for Jacobi nodes."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    basis = np.abs(lagrange_matrix(nodes, y))
    if not weighted:
        return basis.sum(axis=1)
    # ratio sqrt(g(y)/g(y_k)) = exp((y_k^2 - y^2)/4)
    expo = (nodes.points[None, :] ** 2 - y[:, None] ** 2) / 4.0
    return np.sum(basis * np.exp(expo), axis=1)


def lebesgue_constant(nodes: NodeSequence, jacobi: bool | None = None) -> float:
    """Grid estimate of the weighted Lebesgue constant of the nodes.

    Gaussian families: max over 20,000 uniform points on |y| <= 2 sqrt(m+2) + 2.
    Jacobi families: unweighted max over [-1, 1].  The nodes themselves and 0
    are always sampled, so lambda_0 = 1 exactly.
    """
    if jacobi is None:
        jacobi = nodes.family == GaussJacobi.name
    m = nodes.level
    if jacobi:
        y = _with_nodes(np.linspace(-1.0, 1.0, LEBESGUE_GRID), nodes)
        return float(lebesgue_function(nodes, y, weighted=False).max())
    r = orthopoly.effective_support(m + 2) + 2.0
    y = _with_nodes(np.linspace(-r, r, LEBESGUE_GRID), nodes)
    return float(lebesgue_function(nodes, y).max())


def _with_nodes(grid: np.ndarray, nodes: NodeSequence) -> np.ndarray:
    return np.unique(np.concatenate((grid, nodes.points, [0.0])))
