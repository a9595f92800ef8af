import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sparsecoll.fem import SpatialHierarchy, h1_error
from sparsecoll.indexset import WeightSpec
from sparsecoll.model import (
    CoefficientModel,
    PositivityError,
    check_rho,
    coefficient_at,
    default_source,
    rho_defaults,
    solve_parametric,
)


def test_constant_one_term_coefficient():
    m = CoefficientModel(psi="constant-1term", J=7, sigma=0.5)
    assert m.J == 1
    a = coefficient_at(m, [2.0], x=np.array([0.1, 0.9]))
    np.testing.assert_allclose(a, math.e)


def test_power_sine_coefficient():
    m = CoefficientModel(psi="power-sine", J=2, c=1.0, kappa=2.0)
    got = coefficient_at(m, [1.0, -1.0], x=np.array([0.25]))[0]
    expected = math.exp(math.sin(math.pi / 4) - 0.25 * math.sin(math.pi / 2))
    assert got == pytest.approx(expected)


def test_zero_parameter_gives_unit_coefficient():
    m = CoefficientModel(J=4)
    np.testing.assert_allclose(coefficient_at(m, np.zeros(4), x=np.linspace(0, 1, 5)), 1.0)


def test_disjoint_bumps_have_disjoint_support():
    m = CoefficientModel(psi="disjoint-bump", J=5)
    x = np.linspace(0, 1, 2001)
    active = np.stack([m.psi_j(j, x) > 0 for j in range(1, 6)])
    assert active.sum(axis=0).max() <= 1


@pytest.mark.parametrize("y", [-1.5, 0.0, 0.7])
def test_closed_form_solution(y):
    m = CoefficientModel(psi="constant-1term", sigma=0.5)
    hier = SpatialHierarchy(default_source)
    u = solve_parametric(m, hier, 10, [y])
    du = lambda x: math.exp(-0.5 * y) * np.pi * np.cos(np.pi * x)
    # P1 error at level 10 is O(h); compare nodal values against the exact solution instead
    nodal = math.exp(-0.5 * y) * np.sin(np.pi * hier.mesh(10).nodes)
    assert np.max(np.abs(u.values - nodal)) < 1e-8 + 1e-6 * math.exp(-0.5 * y)
    assert h1_error(u.values, du) / (math.exp(-0.5 * y) * np.pi / math.sqrt(2)) < 1e-3


def test_affine_positivity():
    with pytest.raises(PositivityError):
        CoefficientModel(mode="affine", psi="power-sine", J=4, c=2.0, kappa=1.0, abar=1.0)
    m = CoefficientModel(mode="affine", psi="power-sine", J=2, c=0.2, kappa=2.0, abar=1.0)
    assert coefficient_at(m, [1.0, 1.0], x=np.array([0.5]))[0] > 0
    with pytest.raises(PositivityError):
        coefficient_at(m, [-10.0, 0.0], x=np.array([0.5]))


def test_rho_defaults_pass_for_power_sine():
    m = CoefficientModel(psi="power-sine", J=4, kappa=3.0)
    s1, s2, reports = rho_defaults(m, nu=1)
    assert all(r.passed for r in reports)
    assert s1.q <= s2.q
    assert s1.q == pytest.approx(0.7) and s2.q == pytest.approx(2.1)


def test_rho_check_detects_violation():
    m = CoefficientModel(psi="power-sine", J=4, kappa=2.0)
    # rho_j = 2 j^2 against psi_j ~ j^-2 does not sum
    report = check_rho(m, WeightSpec(scale=2.0, kappa=2.0, eta=3, q=1.0), r=1, npts=2000)
    assert not report.passed and "violated" in report.message


def test_rho_defaults_reject_slow_decay():
    with pytest.raises(ValueError):
        rho_defaults(CoefficientModel(psi="power-sine", kappa=2.0))


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_solution_continuity(y1, y2):
    m = CoefficientModel(J=2)
    hier = SpatialHierarchy(default_source)
    u = solve_parametric(m, hier, 4, [y1, y2]).values
    v = solve_parametric(m, hier, 4, [y1 + 1e-6, y2]).values
    assert np.max(np.abs(u - v)) < 1e-3


def test_model_validation():
    with pytest.raises(ValueError):
        CoefficientModel(psi="legendre")
    with pytest.raises(ValueError):
        CoefficientModel(mode="gamma")
