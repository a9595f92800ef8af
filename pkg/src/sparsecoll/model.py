"""Parametric diffusion coefficients and the parametric solution map.

lognormal:  a(y, x) = exp(sum_j y_j psi_j(x)),   y ~ N(0, I_J)
affine:     a(y, x) = abar + sum_j y_j psi_j(x),  y in [-1, 1]^J

The infinite-dimensional setting is truncated at J terms; references used to
measure errors are always computed at the same J.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fem import Field, SpatialHierarchy
from .indexset import WeightSpec, eta_for, theta_for

__all__ = [
    "CoefficientModel",
    "PositivityError",
    "RhoReport",
    "coefficient_at",
    "solve_parametric",
    "rho_defaults",
    "check_rho",
    "default_source",
    "SOURCES",
]

PSI_FAMILIES = ("power-sine", "disjoint-bump", "constant-1term")


def default_source(x):
    return np.pi**2 * np.sin(np.pi * x)


SOURCES: dict[str, Callable] = {
    "sine": default_source,
    "one": lambda x: np.ones_like(x),
}


class PositivityError(ValueError):
    """Affine coefficient is not positive at the requested parameter."""


@dataclass(frozen=True)
class CoefficientModel:
    mode: str = "lognormal"
    psi: str = "power-sine"
    J: int = 4
    c: float = 1.0
    kappa: float = 3.0
    sigma: float = 0.5
    abar: float = 1.0
    source: str = "sine"

    def __post_init__(self):
        if self.mode not in ("lognormal", "affine"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.psi not in PSI_FAMILIES:
            raise ValueError(f"unknown psi family {self.psi!r}")
        if self.psi == "constant-1term" and self.J != 1:
            object.__setattr__(self, "J", 1)
        if self.J < 0:
            raise ValueError("J must be nonnegative")
        if self.mode == "affine":
            self._check_affine()

    @property
    def f(self) -> Callable:
        return SOURCES[self.source]

    # -- psi_j and derivatives, j counted from 1 --
    def psi_j(self, j: int, x, deriv: int = 0):
        x = np.asarray(x, dtype=float)
        if self.psi == "constant-1term":
            if j != 1:
                return np.zeros_like(x)
            return np.full_like(x, self.sigma) if deriv == 0 else np.zeros_like(x)
        amp = self.c * j ** (-self.kappa)
        if self.psi == "power-sine":
            if deriv == 0:
                return amp * np.sin(j * np.pi * x)
            return amp * j * np.pi * np.cos(j * np.pi * x)
        # disjoint sin^2 bumps on [1/(j+1), 1/j]
        left, width = 1.0 / (j + 1), 1.0 / j - 1.0 / (j + 1)
        t = (x - left) / width
        inside = (t >= 0) & (t <= 1)
        if deriv == 0:
            return np.where(inside, amp * np.sin(np.pi * t) ** 2, 0.0)
        return np.where(inside, amp * np.pi / width * np.sin(2 * np.pi * t), 0.0)

    def exponent(self, y, x):
        """b(y, x) = sum_j y_j psi_j(x)."""
        y = np.asarray(y, dtype=float)
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for j in range(1, self.J + 1):
            yj = y[j - 1] if j - 1 < y.size else 0.0
            if yj:
                out = out + yj * self.psi_j(j, x)
        return out

    def _check_affine(self, npts: int = 10_000):
        x = np.linspace(0.0, 1.0, npts)
        total = sum(np.abs(self.psi_j(j, x)) for j in range(1, self.J + 1))
        if not np.max(np.asarray(total) / self.abar) < 1.0:
            raise PositivityError("sum_j |psi_j| / abar must stay below 1 on [0, 1]")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("mode", "psi", "J", "c", "kappa", "sigma", "abar", "source")}


def coefficient_at(model: CoefficientModel, y, x=None):
    """a(y, .) as a callable, or sampled at x when x is given."""
    y = np.atleast_1d(np.asarray(y, dtype=float))

    def a(xx):
        b = model.exponent(y, xx)
        if model.mode == "lognormal":
            return np.exp(b)
        val = model.abar + b
        if not np.all(val > 0):
            raise PositivityError(f"affine coefficient not positive at y={y}")
        return val

    return a if x is None else a(np.asarray(x, dtype=float))


def solve_parametric(model: CoefficientModel, hierarchy: SpatialHierarchy, k: int, y) -> Field:
    return hierarchy.solve(k, coefficient_at(model, y))


# --- rho sequences ------------------------------------------------------------


@dataclass
class RhoReport:
    passed: bool
    slope: float
    sums: list[float] = field(default_factory=list)
    message: str = ""


def _sup_grid(model: CoefficientModel, jmax: int, npts: int) -> np.ndarray:
    x = np.linspace(0.0, 1.0, npts)
    if model.psi != "disjoint-bump":
        return x
    j = np.arange(1, jmax + 1, dtype=float)
    left, width = 1 / (j + 1), 1 / j - 1 / (j + 1)
    extra = np.concatenate([left + width * t for t in (0.25, 0.5, 0.75)])
    return np.unique(np.concatenate((x, extra)))


def check_rho(model: CoefficientModel, spec: WeightSpec, r: int, npts: int = 10_000,
              jlist=(16, 32, 64, 128, 256, 512, 1024)) -> RhoReport:
    """Numerically check sup_x sum_j rho_{r;j} |D^{r-1} psi_j(x)| < infinity.

    The truncated sums S(J') are evaluated for growing J' with the psi family
    continued past the model truncation; the hypothesis passes when the
    increments S(J'_{i+1}) - S(J'_i) decay (fitted log-log slope < 0).
    """
    if model.psi == "constant-1term":
        return RhoReport(True, -math.inf, [abs(model.sigma) * spec.rho(1)], "single term")
    free = WeightSpec(spec.scale, spec.kappa, spec.eta, spec.q, spec.mode, spec.a, None, spec.values)
    sums = []
    for jm in jlist:
        x = _sup_grid(model, jm, npts)
        total = np.zeros_like(x)
        for j in range(1, jm + 1):
            rho = free.rho(j)
            if math.isinf(rho):
                break
            total += rho * np.abs(model.psi_j(j, x, deriv=r - 1))
        sums.append(float(total.max()))
    inc = np.diff(sums)
    if np.all(inc <= 1e-12 * max(sums)):
        return RhoReport(True, -math.inf, sums, "sums saturate")
    pos = inc > 0
    slope = float(np.polyfit(np.log(np.asarray(jlist[1:])[pos]), np.log(inc[pos]), 1)[0])
    passed = slope < -0.05
    msg = "increments decay" if passed else f"increments grow like J^{slope:.2f}: hypothesis violated"
    return RhoReport(passed, slope, sums, msg)


def rho_defaults(model: CoefficientModel, nu: int = 1, tau: float = 1 / 6 + 0.05,
                 scale: float = 2.0, margin: float = 0.5, q_margin: float = 0.05):
    """(spec1, spec2, reports) with rho_{r;j} = scale * j^{kappa_r} for the model.

    kappa_1, kappa_2 sit ``margin`` below the largest growth the psi family
    admits for r = 1, 2; q_r = (1 + q_margin) / kappa_r is just above the
    l_q threshold; eta is the smallest integer above 2 nu (theta + 1) / q_r.
    """
    mode = "affine" if model.mode == "affine" else "lognormal"
    theta = theta_for(tau)
    if model.psi == "constant-1term":
        q1 = q2 = 1.0
        specs = [WeightSpec(scale=scale, kappa=0.0, eta=eta_for(nu, theta, q), q=q, mode=mode, dims=1)
                 for q in (q1, q2)]
    else:
        if model.psi == "power-sine":
            kap = (model.kappa - 1 - margin, model.kappa - 2 - margin)
        else:
            kap = (model.kappa - margin, model.kappa - 2 - margin)
        if min(kap) <= 0:
            raise ValueError(f"psi decay kappa={model.kappa} too slow for summable rho")
        qs = [(1 + q_margin) / k for k in kap]
        specs = [WeightSpec(scale=scale, kappa=k, eta=eta_for(nu, theta, q), q=q, mode=mode, dims=model.J)
                 for k, q in zip(kap, qs)]
    reports = [check_rho(model, s, r) for r, s in ((1, specs[0]), (2, specs[1]))]
    return specs[0], specs[1], reports
