"""Dyadic piecewise-linear FEM for -(a u')' = f on (0, 1), u(0) = u(1) = 0.

Level k uses the uniform mesh with h = 2^-(k+1), i.e. 2^(k+1) - 1 interior
nodes, so level-k nodes are a subset of level-(k+1) nodes and prolongation is
exact nodal embedding.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import LinAlgError, solveh_banded

__all__ = [
    "Mesh",
    "Field",
    "SpatialHierarchy",
    "CoercivityError",
    "SolverError",
    "mesh",
    "prolong",
    "level_of",
    "norm_V",
    "norm_W",
    "h1_error",
]

# reference Gauss points/weights on (0, 1)
_G2 = (np.array([0.5 - 0.5 / math.sqrt(3), 0.5 + 0.5 / math.sqrt(3)]), np.array([0.5, 0.5]))
_G4x, _G4w = np.polynomial.legendre.leggauss(4)
_G4 = (0.5 * (_G4x + 1.0), 0.5 * _G4w)


class CoercivityError(ValueError):
    """The sampled diffusion coefficient is not strictly positive."""


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class Mesh:
    level: int

    @property
    def h(self) -> float:
        return 2.0 ** -(self.level + 1)

    @property
    def n(self) -> int:
        """Number of interior nodes."""
        return 2 ** (self.level + 1) - 1

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(1, self.n + 1) * self.h

    @property
    def vertices(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n + 2)

    def quad_points(self, rule=_G2) -> tuple[np.ndarray, np.ndarray]:
        """Element quadrature points, shape (elements, npts), and weights."""
        left = self.vertices[:-1, None]
        return left + self.h * rule[0][None, :], self.h * rule[1]


def mesh(level: int) -> Mesh:
    if level < 0:
        raise ValueError("level must be nonnegative")
    return Mesh(level)


def level_of(values: np.ndarray) -> int:
    n = np.shape(values)[-1]
    k = int(round(math.log2(n + 1))) - 1
    if 2 ** (k + 1) - 1 != n:
        raise ValueError(f"{n} nodal values do not match any mesh level")
    return k


def prolong(values: np.ndarray, level: int) -> np.ndarray:
    """Embed nodal values into the finer mesh ``level`` by linear interpolation."""
    values = np.asarray(values, dtype=float)
    k = level_of(values)
    if level < k:
        raise ValueError(f"cannot prolong level {k} down to {level}")
    for _ in range(level - k):
        padded = np.concatenate((np.zeros(values.shape[:-1] + (1,)), values,
                                 np.zeros(values.shape[:-1] + (1,))), axis=-1)
        fine = np.empty(values.shape[:-1] + (2 * values.shape[-1] + 1,))
        fine[..., 1::2] = values
        fine[..., 0::2] = 0.5 * (padded[..., :-1] + padded[..., 1:])
        values = fine
    return values


@dataclass
class Field:
    level: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if level_of(self.values) != self.level:
            raise ValueError("values do not match level")

    def prolong(self, level: int) -> "Field":
        return Field(level, prolong(self.values, level))

    def __add__(self, other: "Field") -> "Field":
        lev = max(self.level, other.level)
        return Field(lev, self.prolong(lev).values + other.prolong(lev).values)

    def __sub__(self, other: "Field") -> "Field":
        lev = max(self.level, other.level)
        return Field(lev, self.prolong(lev).values - other.prolong(lev).values)

    def __mul__(self, c: float) -> "Field":
        return Field(self.level, c * self.values)

    __rmul__ = __mul__

    def norm_V(self) -> float:
        return norm_V(self.values)

    def to_csv(self, path) -> None:
        x = mesh(self.level).vertices
        vals = np.concatenate(([0.0], self.values, [0.0]))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "value"])
            for xi, vi in zip(x, vals):
                w.writerow([f"{xi:.17g}", f"{vi:.17g}"])


def norm_V(values) -> float:
    """H^1 seminorm of the piecewise-linear function with these nodal values."""
    if isinstance(values, Field):
        values = values.values
    values = np.asarray(values, dtype=float)
    h = mesh(level_of(values)).h
    full = np.concatenate(([0.0], values, [0.0]))
    return math.sqrt(np.sum(np.diff(full) ** 2) / h)


def norm_W(u=None, *, laplacian: Callable | None = None, npts: int = 4096) -> float:
    """||u''||_{L2(0,1)} for an analytic reference given through its second derivative.

    Piecewise-linear FEM fields have no L2 Laplacian, so passing one is an error.
    """
    if isinstance(u, (Field, np.ndarray)) or (u is not None and laplacian is None):
        raise TypeError("W-norm needs an analytic second derivative, not a FEM field")
    x, w = np.polynomial.legendre.leggauss(64)
    edges = np.linspace(0.0, 1.0, npts // 64 + 1)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        xx = 0.5 * (b - a) * (x + 1) + a
        total += 0.5 * (b - a) * np.sum(w * np.asarray(laplacian(xx)) ** 2)
    return math.sqrt(total)


def h1_error(values, du: Callable) -> float:
    """||u' - u_h'||_{L2} against an analytic derivative du."""
    values = np.asarray(values, dtype=float)
    m = mesh(level_of(values))
    full = np.concatenate(([0.0], values, [0.0]))
    slope = np.diff(full) / m.h
    xq, wq = m.quad_points(_G4)
    err = (du(xq) - slope[:, None]) ** 2
    return math.sqrt(float(np.sum(err * wq[None, :])))


class SpatialHierarchy:
    """Galerkin solves on the dyadic meshes for a fixed source f.

    ``coefficient`` arguments are callables x -> a(x) evaluated at the 2-point
    Gauss nodes of each element.
    """

    def __init__(self, source: Callable[[np.ndarray], np.ndarray], residual_tol: float = 1e-10):
        self.source = source
        self.residual_tol = residual_tol
        self._loads: dict[int, np.ndarray] = {}

    def mesh(self, k: int) -> Mesh:
        return mesh(k)

    def load(self, k: int) -> np.ndarray:
        if k not in self._loads:
            m = mesh(k)
            xq, wq = m.quad_points(_G4)
            fq = self.source(xq) * wq[None, :]
            t = (xq - m.vertices[:-1, None]) / m.h
            # element e contributes to node e (right hat half) and node e+1 (left half)
            right = np.sum(fq * t, axis=1)
            left = np.sum(fq * (1.0 - t), axis=1)
            self._loads[k] = left[1:] + right[:-1]
        return self._loads[k]

    def stiffness(self, k: int, coefficient: Callable) -> np.ndarray:
        """Upper banded stiffness (2, n) for solveh_banded."""
        m = mesh(k)
        xq, wq = m.quad_points(_G2)
        aq = np.asarray(coefficient(xq), dtype=float)
        if aq.shape != xq.shape:
            aq = np.broadcast_to(aq, xq.shape)
        if not np.all(aq > 0):
            raise CoercivityError(f"coefficient not positive at level {k} (min {aq.min():.3e})")
        ae = np.sum(aq * wq[None, :], axis=1) / m.h**2  # element integral of a / h^2
        band = np.zeros((2, m.n))
        band[1] = ae[:-1] + ae[1:]
        band[0, 1:] = -ae[1:-1]
        return band

    def solve(self, k: int, coefficient: Callable) -> Field:
        band = self.stiffness(k, coefficient)
        b = self.load(k)
        try:
            # scipy's tridiagonal path rejects 1x1 systems
            u = b / band[1] if band.shape[1] == 1 else solveh_banded(band, b)
        except LinAlgError as exc:
            raise SolverError(f"Cholesky failed at level {k}: {exc}") from exc
        # normwise backward error; a bare ||b|| scale fails on fine meshes (cond ~ h^-2)
        resid = np.max(np.abs(_banded_matvec(band, u) - b))
        scale = 2 * np.max(np.abs(band[1])) * np.max(np.abs(u)) + np.max(np.abs(b))
        if resid > self.residual_tol * max(scale, 1e-300):
            raise SolverError(f"residual check failed at level {k}")
        return Field(k, u)

    def delta(self, k: int, coefficient: Callable) -> Field:
        """delta_k = P_{2^k} - P_{2^{k-1}}, delta_0 = P_1, at level k."""
        fine = self.solve(k, coefficient)
        if k == 0:
            return fine
        return fine - self.solve(k - 1, coefficient)

    # bounded functionals on V
    @staticmethod
    def mean(values) -> float:
        """Integral over (0, 1) of the piecewise-linear function."""
        values = np.asarray(values, dtype=float)
        return float(np.sum(values) * mesh(level_of(values)).h)

    @staticmethod
    def point_value(values, x: float) -> float:
        values = np.asarray(values, dtype=float)
        m = mesh(level_of(values))
        return float(np.interp(x, m.vertices, np.concatenate(([0.0], values, [0.0]))))

    @staticmethod
    def h1_inner(values, other) -> float:
        values, other = np.asarray(values, float), np.asarray(other, float)
        lev = max(level_of(values), level_of(other))
        a = np.diff(np.concatenate(([0.0], prolong(values, lev), [0.0])))
        b = np.diff(np.concatenate(([0.0], prolong(other, lev), [0.0])))
        return float(np.dot(a, b) / mesh(lev).h)


def _banded_matvec(band: np.ndarray, u: np.ndarray) -> np.ndarray:
    out = band[1] * u
    out[:-1] += band[0, 1:] * u[1:]
    out[1:] += band[0, 1:] * u[:-1]
    return out
