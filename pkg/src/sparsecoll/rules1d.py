"""Univariate interpolation I_m, quadrature Q_m and their differences.

Values handed to these operators may be scalars or arrays (e.g. FEM
coefficient vectors); the leading axis always runs over the m+1 nodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import orthopoly
from .nodes import NodeFamily, NodeSequence, lagrange_matrix

__all__ = [
    "UniRule",
    "lagrange_basis",
    "interpolate",
    "quad_weights",
    "closed_form_hermite_weights",
    "unirule",
    "quadrature",
    "delta_interp",
    "delta_quad",
]


def lagrange_basis(nodes: NodeSequence, k: int, y):
    """l_{m;k}(y)."""
    if not 0 <= k < len(nodes):
        raise IndexError(f"basis index {k} out of range for level {nodes.level}")
    out = lagrange_matrix(nodes, y)[:, k]
    return out if np.ndim(y) else float(out[0])


def _as_values(values, n: int) -> np.ndarray:
    vals = np.asarray(values, dtype=float)
    if vals.shape[:1] != (n,):
        raise ValueError(f"expected {n} node values, got leading shape {vals.shape[:1]}")
    return vals


def interpolate(nodes: NodeSequence, values, y):
    """I_m(v)(y) = sum_k v(y_{m;k}) l_{m;k}(y) for scalar or vector values."""
    vals = _as_values(values, len(nodes))
    basis = lagrange_matrix(nodes, y)
    out = np.tensordot(basis, vals, axes=(1, 0))
    if np.ndim(y) == 0:
        out = out[0]
        return float(out) if out.ndim == 0 else out
    return out


def _reference_rule(measure: str, a: float, n: int):
    if measure == "gaussian":
        return orthopoly.gauss_hermite_rule(n)
    if measure == "jacobi":
        return orthopoly.gauss_jacobi_rule(n, a, a)
    raise ValueError(f"unknown measure {measure!r}")


def quad_weights(nodes: NodeSequence, measure: str = "gaussian", a: float = 0.0) -> np.ndarray:
    """omega_{m;k} = int l_{m;k} d(measure).

    Each l_{m;k} has degree m, so any Gauss rule of the same measure with at
    least ceil((m+2)/2) points is exact.  We take m+1 points: on Gauss nodes
    the Lagrange matrix is then the identity and the tiny outer weights keep
    full relative accuracy.  Symmetric nodes get mirrored weights.
    """
    m = nodes.level
    x, w = _reference_rule(measure, a, m + 1)
    omega = w @ lagrange_matrix(nodes, x)
    if nodes.is_symmetric():
        omega = 0.5 * (omega + omega[::-1])
    return omega


def closed_form_hermite_weights(m: int) -> np.ndarray:
    """1 / ((m+1) H_m(y*)^2) at the roots of H_{m+1}."""
    x = orthopoly.hermite_roots(m)
    return 1.0 / ((m + 1) * orthopoly.hermite_value(m, x) ** 2)


@dataclass(eq=False)
class UniRule:
    nodes: NodeSequence
    weights: np.ndarray

    @property
    def level(self) -> int:
        return self.nodes.level

    @property
    def points(self) -> np.ndarray:
        return self.nodes.points


@lru_cache(maxsize=None)
def unirule(family: NodeFamily, m: int) -> UniRule:
    seq = family.sequence(m)
    w = quad_weights(seq, family.measure, family.jacobi_a)
    w.setflags(write=False)
    return UniRule(seq, w)


def quadrature(rule: UniRule, values):
    """Q_m(v) = sum_k omega_{m;k} v(y_{m;k}), summed left to right."""
    vals = _as_values(values, len(rule.weights))
    out = np.zeros(vals.shape[1:])
    for w, v in zip(rule.weights, vals):
        out = out + w * v
    return float(out) if out.ndim == 0 else out


def _sample(v, points):
    return np.asarray([v(p) for p in points], dtype=float)


def delta_interp(family: NodeFamily, m: int, v, y):
    """(I_m - I_{m-1})(v)(y), with I_{-1} = 0."""
    seq = family.sequence(m)
    out = interpolate(seq, _sample(v, seq.points), y)
    if m == 0:
        return out
    prev = family.sequence(m - 1)
    return out - interpolate(prev, _sample(v, prev.points), y)


def delta_quad(family: NodeFamily, m: int, v):
    """(Q_m - Q_{m-1})(v), with Q_{-1} = 0."""
    rule = unirule(family, m)
    out = quadrature(rule, _sample(v, rule.points))
    if m == 0:
        return out
    prev = unirule(family, m - 1)
    return out - quadrature(prev, _sample(v, prev.points))
