import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sparsecoll.nodes import (
    ZERO_KEY,
    GaussHermite,
    GaussJacobi,
    NodeSequence,
    OrderingError,
    Szabados,
    family_from_name,
    lebesgue_constant,
    lebesgue_function,
    szabados_point,
)
from sparsecoll.orthopoly import gaussian_density, hermite_value

GH = GaussHermite()
SZ = Szabados()


def test_gauss_hermite_examples():
    np.testing.assert_allclose(GH.sequence(0).points, [0.0])
    np.testing.assert_allclose(GH.sequence(1).points, [-1.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(GH.sequence(2).points, [-math.sqrt(3), 0.0, math.sqrt(3)], atol=1e-14)


def test_jacobi_zero_is_legendre():
    pts = GaussJacobi(0.0).sequence(1).points
    np.testing.assert_allclose(pts, [-1 / math.sqrt(3), 1 / math.sqrt(3)], atol=1e-14)
    leg = np.polynomial.legendre.leggauss(6)[0]
    np.testing.assert_allclose(GaussJacobi(0.0).sequence(5).points, leg, atol=1e-13)


def test_szabados_example():
    zeta = szabados_point(4)
    expected = [-zeta, -math.sqrt(3), 0.0, math.sqrt(3), zeta]
    np.testing.assert_allclose(SZ.sequence(4).points, expected, atol=1e-14)
    assert zeta > math.sqrt(3)


def test_szabados_point_maximizes():
    for m in (3, 6, 11):
        z = szabados_point(m)
        f = lambda y: abs(hermite_value(m - 1, y)) * math.sqrt(gaussian_density(y))
        ys = np.linspace(-3 * math.sqrt(m) - 4, 3 * math.sqrt(m) + 4, 20001)
        grid_max = max(f(y) for y in ys)
        assert f(z) >= grid_max - 1e-9


def test_szabados_low_levels_match_gauss_hermite():
    for m in range(3):
        np.testing.assert_array_equal(SZ.sequence(m).points, GH.sequence(m).points)
    with pytest.raises(ValueError):
        szabados_point(2)


@given(st.integers(min_value=0, max_value=40), st.sampled_from(["gh", "sz", "gj"]))
def test_sequence_invariants(m, fam):
    family = {"gh": GH, "sz": SZ, "gj": GaussJacobi(0.5)}[fam]
    seq = family.sequence(m)
    assert len(seq) == m + 1
    assert np.all(np.diff(seq.points) > 0)
    assert seq.is_symmetric(1e-12)
    if m % 2 == 0:
        assert seq.keys[m // 2] == ZERO_KEY


def test_szabados_keys_share_interior_nodes():
    seq = SZ.sequence(6)
    inner = GH.sequence(4)
    assert seq.keys[1:-1] == inner.keys


def test_ordering_error():
    with pytest.raises(OrderingError):
        NodeSequence(1, np.array([1.0, -1.0]), "custom")


def test_family_from_name():
    assert isinstance(family_from_name("gauss-hermite"), GaussHermite)
    assert isinstance(family_from_name("szabados"), Szabados)
    assert family_from_name("jacobi", 1.5).a == 1.5
    with pytest.raises(ValueError):
        family_from_name("chebyshev")


def test_lebesgue_zero_and_lower_bound():
    assert lebesgue_constant(GH.sequence(0)) == 1.0
    assert lebesgue_constant(SZ.sequence(0)) == 1.0
    for m in range(1, 15):
        assert lebesgue_constant(GH.sequence(m)) >= 1.0
        assert lebesgue_constant(GaussJacobi(0.0).sequence(m)) >= 1.0


def test_lebesgue_function_is_one_at_nodes():
    seq = GH.sequence(7)
    np.testing.assert_allclose(lebesgue_function(seq, seq.points), 1.0, atol=1e-12)
