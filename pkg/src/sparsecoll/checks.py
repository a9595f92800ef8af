"""Exactness and invariant checks run by ``sparsecoll exactness``."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .indexset import MultiIndex, WeightSpec, sigma, sigma_literal
from .nodes import GaussHermite, Szabados, lebesgue_constant
from .oracle import gaussian_moment, tensor_quadrature
from .orthopoly import gauss_hermite_rule, hermite_value
from .rules1d import closed_form_hermite_weights, unirule
from .sparse import quadrature_terms, sparse_interpolate, sparse_quadrature, tensor_delta_interp, tensor_delta_quad


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _hermite_product(s: tuple[int, ...]) -> Callable:
    return lambda y: math.prod(float(hermite_value(k, y[j])) for j, k in enumerate(s))


def gauss_moments(mmax: int = 20) -> CheckResult:
    worst = 0.0
    for m in range(mmax + 1):
        x, w = gauss_hermite_rule(m + 1)
        for p in range(2 * m + 2):
            exact = gaussian_moment(p)
            got = float(np.dot(w, x**p))
            # odd moments vanish; measure them against E|Y|^p
            scale = abs(exact) if exact else float(np.dot(w, np.abs(x) ** p))
            err = abs(got - exact) / scale if scale else abs(got)
            worst = max(worst, err)
    return CheckResult("gauss-hermite moments", worst < 1e-10, f"max rel err {worst:.2e}")


def closed_form_weights(mmax: int = 20) -> CheckResult:
    worst = 0.0
    for m in range(mmax + 1):
        w = unirule(GaussHermite(), m).weights
        worst = max(worst, float(np.max(np.abs(w - closed_form_hermite_weights(m)))))
    return CheckResult("closed-form weights", worst < 1e-11, f"max abs err {worst:.2e}")


def annihilation(order: int = 4) -> CheckResult:
    gh = GaussHermite()
    box = list(itertools.product(range(order + 1), repeat=2))
    y = np.array([0.37, -1.21])
    worst = 0.0
    for s in box:
        for sp in box:
            f = _hermite_product(sp)
            ms = MultiIndex.from_dense(s)
            if not all(a <= b for a, b in zip(s, sp)):
                worst = max(worst, abs(tensor_delta_interp(ms, gh, f, y, J=2)))
            if any(v % 2 for v in sp):
                worst = max(worst, abs(tensor_delta_quad(ms, gh, f, J=2)))
    return CheckResult("annihilation identities", worst < 1e-9, f"max abs {worst:.2e}")


def telescoping(order: int = 3) -> CheckResult:
    gh = GaussHermite()
    f = lambda y: math.exp(0.3 * y[0] - 0.2 * y[1]) / (1 + 0.1 * y[0] ** 2)
    box = [MultiIndex.from_dense(s) for s in itertools.product(range(order + 1), repeat=2)]
    q = sparse_quadrature(box, gh, f, J=2)
    ref = tensor_quadrature(2, order, f)
    worst = abs(q - ref)
    y = np.array([0.4, -0.9])
    nodes = gh.sequence(order).points
    tens = sum(f(np.array([a, b])) * _lag(nodes, i, y[0]) * _lag(nodes, j, y[1])
               for i, a in enumerate(nodes) for j, b in enumerate(nodes))
    worst = max(worst, abs(sparse_interpolate(box, gh, f, y) - tens))
    return CheckResult("telescoping on boxes", bool(worst < 1e-9), f"max abs {worst:.2e}")


def _lag(nodes, i, y):
    return math.prod((y - nodes[k]) / (nodes[i] - nodes[k]) for k in range(len(nodes)) if k != i)


def combination_consistency() -> CheckResult:
    gh = GaussHermite()
    idx = [MultiIndex.from_dense(s) for s in [(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (0, 2), (3, 0)]]
    f = lambda y: math.cos(y[0]) * math.exp(0.5 * y[1])
    a = sparse_quadrature(idx, gh, f, J=2)
    b = quadrature_terms(idx, gh, f, J=2)
    return CheckResult("combination weights", abs(a - b) < 1e-11, f"diff {abs(a - b):.2e}")


def sigma_product() -> CheckResult:
    spec = WeightSpec(scale=1.5, kappa=1.0, eta=3, q=1.0, dims=3)
    worst = 0.0
    for s in itertools.product(range(7), repeat=3):
        ms = MultiIndex.from_dense(s)
        a, b = sigma(ms, spec), sigma_literal(ms, spec)
        worst = max(worst, abs(a - b) / b)
    return CheckResult("sigma product form", worst < 1e-12, f"max rel err {worst:.2e}")


def lebesgue_zero() -> CheckResult:
    vals = [lebesgue_constant(f.sequence(0)) for f in (GaussHermite(), Szabados())]
    return CheckResult("lambda_0 = 1", all(v == 1.0 for v in vals), f"{vals}")


ALL_CHECKS = (gauss_moments, closed_form_weights, annihilation, telescoping,
              combination_consistency, sigma_product, lebesgue_zero)


def run_all() -> list[CheckResult]:
    return [check() for check in ALL_CHECKS]
