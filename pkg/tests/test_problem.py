import numpy as np
import pytest
import sympy as sp

from polyvem.problem import (benchmark_problem, constant_coefficients, get_problem,
                             polynomial_patch_problem)

rng = np.random.default_rng(12)
POINTS = rng.uniform(0.02, 0.98, size=(20, 2))
STEP = 1e-7


def fd_gradient(f, x, y):
    return ((f(x + STEP, y) - f(x - STEP, y)) / (2 * STEP),
            (f(x, y + STEP) - f(x, y - STEP)) / (2 * STEP))


def fd_residual(problem, x, y):
    """-div(K grad u) + b . grad u + gamma u with finite differences of grad u."""
    c = problem.coefficients
    h = 1e-5

    def flux(x, y):
        ux, uy = problem.exact_grad_u(x, y)
        kxx, kxy, kyy = c.diffusion(x, y)
        return kxx * ux + kxy * uy, kxy * ux + kyy * uy

    div = ((flux(x + h, y)[0] - flux(x - h, y)[0]) + (flux(x, y + h)[1] - flux(x, y - h)[1])) / (2 * h)
    ux, uy = problem.exact_grad_u(x, y)
    bx, by = c.convection(x, y)
    return -div + bx * ux + by * uy + c.reaction(x, y) * problem.exact_u(x, y)


PROBLEMS = [benchmark_problem(), polynomial_patch_problem(2, constant_coefficients(b=(1, 2), gamma=1)),
            polynomial_patch_problem(4), get_problem("patch-m3")]


@pytest.mark.parametrize("problem", PROBLEMS, ids=lambda p: p.name)
def test_gradient_matches_finite_differences(problem):
    x, y = POINTS.T
    fx, fy = fd_gradient(problem.exact_u, x, y)
    gx, gy = problem.exact_grad_u(x, y)
    scale = np.max(np.abs(np.concatenate([gx, gy])))
    np.testing.assert_allclose(fx, gx, rtol=1e-6, atol=1e-6 * scale)
    np.testing.assert_allclose(fy, gy, rtol=1e-6, atol=1e-6 * scale)


@pytest.mark.parametrize("problem", PROBLEMS, ids=lambda p: p.name)
def test_forcing_residual(problem):
    x, y = POINTS.T
    f = problem.forcing(x, y)
    r = fd_residual(problem, x, y)
    np.testing.assert_allclose(r, f, rtol=1e-4, atol=1e-4 * np.max(np.abs(f)))


def test_benchmark_forcing_against_symbolic_oracle():
    x, y = sp.symbols("x y")
    s = sp.sin(2 * sp.pi * x) * sp.sin(2 * sp.pi * y)
    K = sp.Matrix([[1 + y**2, -x * y * s], [-x * y * s, 1 + x**2]])
    b = sp.Matrix([-2 * (x + 2 * y**2 - 1), 3 * (3 * x**2 - 2 * y + 3)])
    gamma = x**2 + y**3 + 1
    u = s + x**5 + y**5
    grad = sp.Matrix([sp.diff(u, x), sp.diff(u, y)])
    flux = K * grad
    f = -(sp.diff(flux[0], x) + sp.diff(flux[1], y)) + (b.T * grad)[0] + gamma * u
    f_num = sp.lambdify((x, y), f, "numpy")
    div_b = sp.simplify(sp.diff(b[0], x) + sp.diff(b[1], y))
    assert div_b == -8
    p = benchmark_problem()
    xs, ys = rng.uniform(0, 1, size=(2, 200))
    np.testing.assert_allclose(p.forcing(xs, ys), f_num(xs, ys), rtol=1e-12, atol=1e-11)
    np.testing.assert_allclose(p.coefficients.div_convection(xs, ys), -8.0)


def test_benchmark_examples():
    p = benchmark_problem()
    assert p.exact_u(np.array(0.5), np.array(0.5)) == pytest.approx(0.0625, abs=1e-15)
    xs, ys = rng.uniform(0, 1, size=(2, 50))
    np.testing.assert_allclose(p.coefficients.reaction_sym(xs, ys), xs**2 + ys**3 + 5)
    p.coefficients.check(np.column_stack([xs, ys]))
    # Dirichlet data is the exact solution
    np.testing.assert_array_equal(p.dirichlet(xs, ys), p.exact_u(xs, ys))


@pytest.mark.parametrize("m, coeffs, expected", [
    (1, {}, lambda x, y: 0 * x),
    (2, dict(b=(1, 2), gamma=1), lambda x, y: -4 + 2 * x + 4 * y + x**2 + y**2),
    (4, {}, lambda x, y: -12 * x**2 - 12 * y**2),
])
def test_patch_forcing_examples(m, coeffs, expected):
    p = polynomial_patch_problem(m, constant_coefficients(**coeffs))
    x, y = POINTS.T
    np.testing.assert_allclose(p.forcing(x, y), expected(x, y), atol=1e-13)
    np.testing.assert_allclose(p.exact_u(x, y), x**m + y**m)


def test_coefficient_checks():
    with pytest.raises(ValueError):
        constant_coefficients(K=((1, 0.5), (0, 1)))
    bad = constant_coefficients(K=((1, 2), (2, 1)))
    with pytest.raises(ValueError):
        bad.check(POINTS)
    with pytest.raises(ValueError):
        constant_coefficients(gamma=-1.0).check(POINTS)
    with pytest.raises(ValueError):
        get_problem("nope")
