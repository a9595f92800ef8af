import math

import pytest
from hypothesis import given, strategies as st

from _helpers import G_CONFIGS, LAMBDA_CONFIGS, scan_G, scan_Lambda
from sparsecoll.indexset import (
    ZERO,
    BudgetError,
    IndexPlan,
    MultiIndex,
    WeightSpec,
    beta_affine,
    build_G,
    build_Lambda,
    calibrate_xi,
    eta_for,
    grid_of,
    is_downward_closed,
    p_weight,
    plan_cost,
    restrict_even,
    sigma,
    sigma_literal,
    summability_check,
    theta_for,
)
from sparsecoll.nodes import GaussHermite

GH = GaussHermite()
multi = st.lists(st.integers(0, 6), min_size=1, max_size=3).map(MultiIndex.from_dense)


def test_multiindex_basics():
    s = MultiIndex.from_dense([2, 0, 1])
    assert s[1] == 2 and s[2] == 0 and s[3] == 1
    assert s.support == (1, 3) and s.max_dim == 3 and s.order == 3
    assert s.dense(4) == (2, 0, 1, 0)
    assert s.shift(2) == MultiIndex.from_dense([2, 1, 1])
    assert MultiIndex.unit(2, 3) == MultiIndex.from_dict({2: 3})
    assert not ZERO and ZERO.is_even()
    assert MultiIndex.from_dense([2, 4]).is_even() and not s.is_even()
    assert ZERO.leq(s) and not s.leq(ZERO)


def test_sigma_examples():
    spec = WeightSpec(values=(2.0,), eta=1)
    assert sigma(MultiIndex.unit(1), spec) == pytest.approx(math.sqrt(5))
    spec2 = WeightSpec(values=(2.0, 3.0), eta=1)
    assert sigma(MultiIndex.from_dense([2, 1]), spec2) == pytest.approx(math.sqrt(90))
    assert sigma(ZERO, spec2) == 1.0


def test_beta_example():
    spec = WeightSpec(values=(2.0,), mode="affine", a=0.0)
    assert beta_affine(MultiIndex.unit(1), spec) == pytest.approx(2 * math.sqrt(3))


def test_p_weight_examples():
    assert p_weight(ZERO, 1, 2) == 1.0
    assert p_weight(MultiIndex.unit(1, 2), 1, 2) == 5.0
    assert p_weight(MultiIndex.from_dense([1, 1]), 1, 2) == 9.0


@given(multi, st.integers(1, 4), st.floats(1.1, 4.0))
def test_sigma_product_form(s, eta, scale):
    spec = WeightSpec(scale=scale, kappa=1.0, eta=eta, dims=3)
    assert sigma(s, spec) == pytest.approx(sigma_literal(s, spec), rel=1e-12)


@given(multi, multi)
def test_sigma_monotone(s, t):
    spec = WeightSpec(scale=2.0, eta=2, dims=3)
    if s.leq(t):
        assert sigma(s, spec) <= sigma(t, spec)


def test_weight_spec_validation():
    with pytest.raises(ValueError):
        WeightSpec(values=(0.5,))
    with pytest.raises(ValueError):
        WeightSpec(eta=0)
    with pytest.raises(ValueError):
        WeightSpec(mode="affine", a=-2)
    assert math.isinf(WeightSpec(dims=2).rho(3))


def test_theta_and_eta():
    assert theta_for(0.0, 0.0) == 1.25
    theta = theta_for(0.2)
    eta = eta_for(1, theta, 1.0)
    assert eta > 2 * (theta + 1) and eta - 1 <= 2 * (theta + 1)


def test_summability_single_dimension_brute_force():
    spec = WeightSpec(values=(2.0,), eta=1, q=1.0)
    cert = summability_check(spec, nu=1, theta=0.0, lam=0.0, q=4.0)
    brute = sum((1 + 4 * n) ** (-4.0 / 2) for n in range(0, 100_000))
    assert cert.value == pytest.approx(brute, rel=1e-6)


def test_summability_warning_and_trivial_limit():
    spec = WeightSpec(scale=2.0, kappa=2.0, eta=1, q=1.0)
    cert = summability_check(spec, nu=1, theta=1.0, lam=2.0)
    assert cert.warning is not None and not cert.converged
    huge = WeightSpec(values=(1e150,), eta=1, q=1.0)
    assert summability_check(huge, 1, 0.0, 0.0).value == pytest.approx(1.0)


def test_summability_converges_for_admissible_eta():
    theta = theta_for(0.2)
    q = 0.7
    spec = WeightSpec(scale=2.0, kappa=3.0, eta=eta_for(1, theta, q), q=q)
    cert = summability_check(spec, 1, theta, 2.0)
    assert cert.converged and math.isfinite(cert.upper_bound)


@pytest.mark.parametrize("cfg", G_CONFIGS, ids=lambda c: f"{c[0]}-{c[1]}-a{c[2]}-xi{c[5]}")
def test_build_G_matches_box_scan(cfg):
    regime, parity, alpha, s1, s2, xi = cfg
    plan = build_G(xi, alpha, s1, s2, regime=regime, parity=parity)
    dims = min(s1.max_dim, s2.max_dim)
    assert set(plan.entries) == scan_G(xi, alpha, s1, s2, regime, parity, dims)
    step = 2 if parity == "even" else 1
    slices = plan.slices()
    for k in slices:
        assert is_downward_closed(slices[k], step)
        if k + 1 in slices:
            assert set(slices[k + 1]) <= set(slices[k])


@pytest.mark.parametrize("spec, parity, xi", LAMBDA_CONFIGS)
def test_build_Lambda_matches_box_scan(spec, parity, xi):
    plan = build_Lambda(xi, spec, parity=parity)
    assert set(plan.multi_indices) == scan_Lambda(xi, spec, parity, 3)


def test_build_G_small_xi():
    spec = WeightSpec(values=(2.0,), eta=1)
    assert build_G(0.5, 1.0, spec, spec).cardinality == 0
    assert build_Lambda(1.0, spec).multi_indices == [ZERO]
    with pytest.raises(ValueError):
        build_Lambda(0.0, spec)


def test_even_subset_and_restrict():
    spec = WeightSpec(scale=2.0, eta=2, q=1.0, dims=3)
    full = build_Lambda(300.0, spec)
    even = build_Lambda(300.0, spec, parity="even")
    assert set(even.multi_indices) < set(full.multi_indices)
    assert set(restrict_even(full).entries) == set(even.entries)
    only_zero = IndexPlan(((0, ZERO),), 1.0)
    assert restrict_even(only_zero).entries == only_zero.entries


def test_budget_cap():
    spec = WeightSpec(scale=1.5, eta=1, q=1.0, dims=4)
    with pytest.raises(BudgetError):
        build_Lambda(1e6, spec, cap=100)


def test_grid_examples():
    assert len(grid_of([ZERO], GH)) == 1
    g = grid_of([ZERO, MultiIndex.unit(1)], GH, J=3)
    assert len(g) == 3
    assert sorted(g.coords[:, 0].tolist()) == pytest.approx([-1.0, 0.0, 1.0])
    assert not g.coords[:, 1:].any()


def test_grid_bound_by_p_weights():
    spec = WeightSpec(scale=1.5, eta=2, q=1.0, dims=4)
    for xi in (5.0, 50.0, 500.0):
        idx = build_Lambda(xi, spec).multi_indices
        assert len(grid_of(idx, GH)) <= sum(p_weight(s, 1, 2) for s in idx)


def test_plan_json_roundtrip():
    spec = WeightSpec(scale=2.0, eta=2, q=1.0, dims=3)
    plan = build_G(50.0, 1.0, spec, spec, regime="interpolation")
    back = IndexPlan.from_json(plan.to_json())
    assert back == plan and back.regime == "interpolation"


def test_visited_grows_with_xi():
    spec = WeightSpec(scale=2.0, eta=2, q=1.0, dims=4)
    v = [build_Lambda(xi, spec).visited for xi in (10.0, 100.0, 1000.0)]
    assert v == sorted(v)


def test_calibrate_maximal_and_monotone():
    spec1 = WeightSpec(scale=2.0, eta=2, q=0.8, dims=3)
    spec2 = WeightSpec(scale=2.0, eta=2, q=1.5, dims=3)
    builder = lambda xi: build_G(xi, 1.0, spec1, spec2)
    last = 0.0
    for n in (16, 64, 256, 1024):
        xi, plan = calibrate_xi(n, "dyadic_dim", builder)
        assert plan.dyadic_dim <= n
        assert builder(xi * 1.05).dyadic_dim > n
        assert xi >= last
        last = xi


def test_calibrate_single_dimension():
    spec = WeightSpec(values=(2.0,), eta=1, q=1.0)
    builder = lambda xi: build_Lambda(xi, spec)
    xi, plan = calibrate_xi(4, "cardinality", builder)
    # sigma_n = sqrt(1 + 4n), so |Lambda(xi)| = #{n : 1 + 4n <= xi^2}
    assert plan.cardinality == 4
    assert [s[1] for s in plan.multi_indices] == [0, 1, 2, 3]
    assert plan_cost(plan, "grid_points", GH) == len(grid_of(plan, GH))
    with pytest.raises(ValueError):
        calibrate_xi(0, "cardinality", builder)
