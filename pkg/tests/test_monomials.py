import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from polyvem.monomials import (MonomialBasis, basis_dim, edge_gram, exponents, index,
                               interval_moments)

from conftest import UNIT_SQUARE

SQ = MonomialBasis([0.5, 0.5], np.sqrt(2), 4)


@pytest.mark.parametrize("d, k, n", [(2, 1, 3), (2, 4, 15), (1, 3, 4), (2, 0, 1), (2, -1, 0)])
def test_basis_dim(d, k, n):
    assert basis_dim(d, k) == n


def test_basis_dim_rejects_3d():
    with pytest.raises(ValueError):
        basis_dim(3, 1)


def test_graded_order():
    assert exponents(2).tolist() == [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]
    for a, (px, py) in enumerate(exponents(4)):
        assert index(px, py) == a


def test_eval_examples():
    b = MonomialBasis([0.5, 0.5], np.sqrt(2), 2)
    np.testing.assert_allclose(b.eval([0.5, 0.5]), [1, 0, 0, 0, 0, 0])
    v = b.eval([1.0, 1.0])
    np.testing.assert_allclose(v[:3], [1, 0.5 / np.sqrt(2), 0.5 / np.sqrt(2)])
    assert v[index(1, 1)] == pytest.approx(0.125)
    assert b.eval(np.zeros((7, 2))).shape == (7, 6)


def test_grad_coeffs_examples():
    h = 0.7
    dx, dy = MonomialBasis([0, 0], h, 1).grad_coeffs()
    np.testing.assert_allclose(dx @ [3.0, 5.0, 7.0], [5.0 / h])
    np.testing.assert_allclose(dy @ [3.0, 5.0, 7.0], [7.0 / h])
    dx, _ = MonomialBasis([0, 0], h, 2).grad_coeffs()
    assert dx[index(1, 0), index(2, 0)] == pytest.approx(2 / h)
    c = np.zeros(6)
    c[0] = 4.0
    assert not np.any(dx @ c)


def test_grad_coeffs_against_symbolic_oracle():
    x, y = sp.symbols("x y")
    xc, yc, h = sp.Rational(1, 3), sp.Rational(-1, 5), sp.Rational(7, 4)
    k = 4
    b = MonomialBasis([float(xc), float(yc)], float(h), k)
    dx, dy = b.grad_coeffs()
    low = MonomialBasis(b.center, b.scale, k - 1)
    pts = np.array([[0.3, 0.9], [-1.2, 0.4], [2.0, -0.7]])
    for a, (px, py) in enumerate(exponents(k)):
        m = ((x - xc) / h) ** px * ((y - yc) / h) ** py
        fx, fy = sp.lambdify((x, y), sp.diff(m, x)), sp.lambdify((x, y), sp.diff(m, y))
        for p in pts:
            assert low.eval(p) @ dx[:, a] == pytest.approx(float(fx(*p)), abs=1e-12)
            assert low.eval(p) @ dy[:, a] == pytest.approx(float(fy(*p)), abs=1e-12)


@given(st.floats(-1, 1), st.floats(-1, 1), st.lists(st.floats(-1, 1), min_size=15, max_size=15))
@settings(max_examples=40, deadline=None)
def test_grad_matches_finite_differences(px, py, coeffs):
    b = MonomialBasis([0.1, -0.2], 0.8, 4)
    c = np.array(coeffs)
    dx, dy = b.grad_coeffs()
    low = MonomialBasis(b.center, b.scale, 3)
    step = 1e-7 * b.scale
    p = np.array([px, py])
    for d, e in ((dx, [step, 0]), (dy, [0, step])):
        fd = (b.eval_poly(c, p + e) - b.eval_poly(c, p - e)) / (2 * step)
        exact = low.eval_poly(d @ c, p)
        assert abs(fd - exact) <= 1e-6 * max(1.0, abs(exact), np.abs(c).sum() / b.scale)


def test_edge_restriction_examples():
    b = MonomialBasis([0.5, 0.5], np.sqrt(2), 3)
    R = b.edge_restriction([0, 0], [1, 0])
    np.testing.assert_allclose(R[0], [1, 0, 0, 0])
    # X = (x - 1/2)/h along xi in [-1/2, 1/2]: slope |s|/h per unit xi
    np.testing.assert_allclose(R[1], [0, 1 / np.sqrt(2), 0, 0], atol=1e-15)
    assert R.shape == (10, 4)


@given(st.lists(st.floats(-1, 1), min_size=10, max_size=10),
       st.tuples(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2)),
       st.floats(-0.5, 0.5))
@settings(max_examples=60, deadline=None)
def test_edge_restriction_is_exact(coeffs, ends, xi):
    a, b_ = np.array(ends[:2]), np.array(ends[2:])
    if np.linalg.norm(b_ - a) < 1e-3:
        return
    basis = MonomialBasis([0.2, 0.1], 1.3, 3)
    c = np.array(coeffs)
    R = basis.edge_restriction(a, b_)
    point = 0.5 * (a + b_) + xi * (b_ - a)
    direct = basis.eval_poly(c, point)
    restricted = (c @ R) @ xi ** np.arange(4)
    assert restricted == pytest.approx(direct, rel=1e-13, abs=1e-13 * np.abs(c).sum())


def test_interval_moments_and_gram():
    np.testing.assert_allclose(interval_moments(4), [1, 0, 1 / 12, 0, 1 / 80])
    G = edge_gram(3)
    assert G.shape == (3, 3)
    assert G[1, 1] == pytest.approx(1 / 12)
    np.testing.assert_allclose(G, G.T)


def test_basis_validation():
    with pytest.raises(ValueError):
        MonomialBasis([0, 0], 0.0, 1)
    with pytest.raises(ValueError):
        MonomialBasis([0, 0], 1.0, 0).grad_coeffs()
    assert len(MonomialBasis(UNIT_SQUARE.mean(0), 1.0, 3)) == 10
