import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sparsecoll.fem import SpatialHierarchy, prolong
from sparsecoll.indexset import (
    ClosureError,
    IndexPlan,
    MultiIndex,
    WeightSpec,
    build_G,
    build_Lambda,
)
from sparsecoll.model import CoefficientModel, default_source, solve_parametric
from sparsecoll.nodes import GaussHermite, Szabados
from sparsecoll.oracle import tensor_quadrature, tensor_rule
from sparsecoll.orthopoly import hermite_value
from sparsecoll.sparse import (
    SparseEvaluator,
    TensorDifference,
    check_plan,
    combination_coefficients,
    combined_weights,
    fully_discrete_interpolate,
    fully_discrete_quadrature,
    functional_quadrature,
    quadrature_terms,
    sparse_interpolate,
    sparse_quadrature,
    tensor_delta_interp,
    tensor_delta_quad,
    truncated_expansion,
)

GH = GaussHermite()
M = MultiIndex.from_dense


def smooth(y):
    return math.exp(0.3 * y[0] - 0.2 * y[1 % len(y)]) / (1 + 0.1 * y[-1] ** 2)


def hermite_product(s):
    return lambda y: math.prod(float(hermite_value(k, y[j])) for j, k in enumerate(s))


def box(order, J):
    return [M(s) for s in itertools.product(range(order + 1), repeat=J)]


def tensor_interp(f, order, J, y):
    nodes = GH.sequence(order).points
    lag = lambda i, t: math.prod((t - nodes[k]) / (nodes[i] - nodes[k])
                                 for k in range(len(nodes)) if k != i)
    total = 0.0
    for m in itertools.product(range(order + 1), repeat=J):
        w = math.prod(lag(mj, y[j]) for j, mj in enumerate(m))
        total += w * f(np.array([nodes[mj] for mj in m]))
    return total


def test_tensor_difference_terms():
    td = TensorDifference(M([1, 2]))
    assert sorted((c, t.dense(2)) for c, t in td.terms) == sorted(
        [(1, (1, 2)), (-1, (0, 2)), (-1, (1, 1)), (1, (0, 1))])
    ev = TensorDifference(M([2, 0, 4]), step=2)
    assert len(ev.terms) == 4
    assert TensorDifference(M([])).terms == ((1, M([])),)


@pytest.mark.parametrize("J, order", [(1, 6), (2, 4), (3, 2)])
def test_telescoping_on_boxes(J, order):
    idx = box(order, J)
    q = sparse_quadrature(idx, GH, smooth, J=J)
    assert q == pytest.approx(tensor_quadrature(J, order, smooth), abs=1e-9)
    y = np.array([0.4, -0.9, 1.3][:J])
    assert sparse_interpolate(idx, GH, smooth, y) == pytest.approx(
        tensor_interp(smooth, order, J, y), abs=1e-9)


def test_annihilation():
    y = np.array([0.37, -1.21])
    for s, sp in itertools.product(box(4, 2), repeat=2):
        f = hermite_product(sp.dense(2))
        if not s.leq(sp):
            assert abs(tensor_delta_interp(s, GH, f, y, J=2)) < 1e-9
        if not sp.is_even():
            assert abs(tensor_delta_quad(s, GH, f, J=2)) < 1e-9


def test_combination_consistency_and_weights():
    plan = build_Lambda(40.0, WeightSpec(scale=1.5, eta=2, q=1.0, dims=3))
    f = lambda y: math.cos(y[0]) * math.exp(0.5 * y[1]) + y[2] ** 2
    a = sparse_quadrature(plan, GH, f, J=3)
    b = quadrature_terms(plan, GH, f, J=3)
    assert a == pytest.approx(b, abs=1e-11)
    _, coords, w = combined_weights(plan, GH, J=3)
    assert np.dot(w, [f(y) for y in coords]) == pytest.approx(a, abs=1e-11)
    assert w.sum() == pytest.approx(1.0, abs=1e-12)


def test_quadrature_is_integral_of_interpolant():
    plan = build_Lambda(25.0, WeightSpec(scale=1.5, eta=2, q=1.0, dims=3))
    f = lambda y: math.exp(0.2 * y[0] + 0.1 * y[1] * y[2])
    rule = tensor_rule(3, 12)
    interp = sparse_interpolate(plan, GH, f, rule.points, J=3)
    assert sparse_quadrature(plan, GH, f, J=3) == pytest.approx(
        float(np.dot(rule.weights, interp)), abs=1e-8)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(a, b):
    idx = box(2, 2)
    f = lambda y: math.sin(y[0]) * y[1]
    g = lambda y: math.exp(0.2 * y[0])
    lhs = sparse_quadrature(idx, GH, lambda y: a * f(y) + b * g(y), J=2)
    rhs = a * sparse_quadrature(idx, GH, f, J=2) + b * sparse_quadrature(idx, GH, g, J=2)
    assert lhs == pytest.approx(rhs, abs=1e-10)


def test_polynomial_exactness_on_downward_closed_sets():
    plan = build_Lambda(30.0, WeightSpec(scale=1.5, eta=2, q=1.0, dims=2))
    y = np.array([0.3, -1.1])
    for s in plan.multi_indices:
        f = hermite_product(s.dense(2))
        assert sparse_interpolate(plan, GH, f, y) == pytest.approx(f(y), abs=1e-9)
        expected = 1.0 if not s else 0.0
        assert sparse_quadrature(plan, GH, f, J=2) == pytest.approx(expected, abs=1e-10)


def test_even_quadrature_ignores_odd_parts():
    spec = WeightSpec(scale=1.5, eta=2, q=1.0, dims=2)
    plan = build_Lambda(60.0, spec, parity="even")
    even = lambda y: math.exp(0.2 * y[0] ** 2 - 0.1 * y[1] ** 2)
    odd = lambda y: y[0] * math.cos(y[1]) + y[1] ** 3
    a = sparse_quadrature(plan, GH, even, J=2)
    b = sparse_quadrature(plan, GH, lambda y: even(y) + odd(y), J=2)
    assert a == pytest.approx(b, abs=1e-12)
    for s in plan.multi_indices:
        f = hermite_product(s.dense(2))
        assert sparse_quadrature(plan, GH, f, J=2) == pytest.approx(1.0 if not s else 0.0, abs=1e-10)


def test_closure_check():
    with pytest.raises(ClosureError):
        sparse_quadrature([M([0]), M([2])], GH, smooth, J=1)
    bad = IndexPlan(((0, M([])), (2, M([]))), 1.0, "expansion")
    with pytest.raises(ClosureError):
        check_plan(bad)


def test_value_cache_and_parallel():
    plan = build_Lambda(30.0, WeightSpec(scale=1.5, eta=2, q=1.0, dims=3))
    calls = []
    sampler = lambda lev, y: calls.append(1) or float(np.sum(y**2))
    ev = SparseEvaluator(plan, GH, sampler, J=3, spatial=False)
    q1 = ev.quadrature()
    q2 = ev.quadrature()
    assert q1 == q2 and len(calls) == ev.grid_size() == ev.stats["solves"]
    ev2 = SparseEvaluator(plan, GH, lambda lev, y: float(np.sum(y**2)), J=3, spatial=False, jobs=4)
    assert ev2.quadrature() == q1
    assert q1 == pytest.approx(3.0, abs=1e-12)


def test_szabados_keys_share_values():
    plan = build_Lambda(30.0, WeightSpec(scale=1.5, eta=2, q=1.0, dims=2))
    ev = SparseEvaluator(plan, Szabados(), lambda lev, y: 1.0, J=2, spatial=False)
    assert ev.quadrature() == pytest.approx(1.0, abs=1e-12)


def test_combination_coefficients_spatial():
    coef = combination_coefficients([(0, M([])), (1, M([]))])
    assert coef == {(1, M([])): 1}
    coef = combination_coefficients([(0, M([])), (0, M([1]))], spatial=False)
    assert coef == {(0, M([1])): 1}


@pytest.fixture(scope="module")
def setup():
    model = CoefficientModel(J=2)
    return model, SpatialHierarchy(default_source)


def test_fully_discrete_single_entry(setup):
    model, hier = setup
    plan = IndexPlan(((0, M([])),), 1.0, "interpolation")
    u0 = solve_parametric(model, hier, 0, [0.0, 0.0]).values
    np.testing.assert_allclose(fully_discrete_quadrature(plan, GH, hier, model), u0)
    np.testing.assert_allclose(fully_discrete_interpolate(plan, GH, hier, model, [1.0, 2.0]), u0)


def test_fully_discrete_box_matches_tensor(setup):
    model, hier = setup
    entries = tuple((k, s) for k in range(4) for s in box(2, 2))
    plan = IndexPlan(entries, 1.0, "interpolation")
    rule = tensor_rule(2, 2)
    ref = sum(w * solve_parametric(model, hier, 3, y).values for w, y in zip(rule.weights, rule.points))
    np.testing.assert_allclose(fully_discrete_quadrature(plan, GH, hier, model), ref, atol=1e-12)
    y = np.array([0.5, -0.25])
    got = fully_discrete_interpolate(plan, GH, hier, model, y)
    want = np.array([tensor_interp(lambda z, i=i: solve_parametric(model, hier, 3, z).values[i], 2, 2, y)
                     for i in range(15)])
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_functionals(setup):
    model, hier = setup
    spec = WeightSpec(scale=2.0, eta=2, q=1.0, dims=2)
    plan = build_G(20.0, 1.0, spec, spec, regime="interpolation")
    field = fully_discrete_quadrature(plan, GH, hier, model)
    assert functional_quadrature(plan, GH, hier, model, "mean") == pytest.approx(
        SpatialHierarchy.mean(field))
    assert functional_quadrature(plan, GH, hier, model, "point", x=0.5) == pytest.approx(
        SpatialHierarchy.point_value(field, 0.5))
    assert functional_quadrature(plan, GH, hier, model, "h1", other=field) == pytest.approx(
        SpatialHierarchy.h1_inner(field, field))
    assert functional_quadrature(plan, GH, hier, model, lambda v: v[0]) == pytest.approx(field[0])
    with pytest.raises(ValueError):
        functional_quadrature(plan, GH, hier, model, "h1")


def test_truncated_expansion_exponential():
    c = 0.6
    f = lambda y: math.exp(c * y[0])
    for n in (2, 5, 9):
        plan = [M([k]) for k in range(n + 1)]
        s = truncated_expansion(plan, f=f, order=30, J=1)
        y = 0.8
        partial = sum(math.exp(c * c / 2) * c**k / math.sqrt(math.factorial(k)) * hermite_value(k, y)
                      for k in range(n + 1))
        assert s(np.array([y])) == pytest.approx(partial, abs=1e-12)


def test_truncated_expansion_edge_cases(setup):
    assert truncated_expansion([], f=smooth, J=2)(np.zeros(2)) == 0.0
    s = truncated_expansion([M([2])], f=hermite_product((2,)), order=6, J=1)
    assert s(np.array([1.3])) == pytest.approx(hermite_value(2, 1.3), abs=1e-12)
    model, hier = setup
    plan = IndexPlan(((0, M([])), (1, M([]))), 1.0, "expansion")
    mean = truncated_expansion(plan, model, hier, order=10)
    assert mean(np.zeros(2)).shape == (3,)
    rule = tensor_rule(2, 10)
    ref = sum(w * solve_parametric(model, hier, 1, y).values for w, y in zip(rule.weights, rule.points))
    np.testing.assert_allclose(mean(np.array([0.7, -0.3])), ref, atol=1e-12)
    np.testing.assert_allclose(prolong(ref, 1), ref)
