import numpy as np
import pytest
import scipy.sparse as sp

from polyvem.assembly import assemble, build_dof_map, build_operators, interpolate
from polyvem.local import METHODS
from polyvem.problem import constant_coefficients, polynomial_patch_problem
from polyvem.solver import SolverError, solve

from conftest import cached_mesh


def test_identity():
    b = np.array([3.0, -1.0, 2.5])
    x, rep = solve((sp.identity(3), b))
    np.testing.assert_array_equal(x, b)
    assert rep.residual_norm == 0.0 and rep.n == 3


def test_two_by_two():
    x, rep = solve((sp.csr_matrix([[2.0, 1.0], [1.0, 2.0]]), np.array([3.0, 3.0])))
    np.testing.assert_allclose(x, [1.0, 1.0], rtol=1e-15)
    assert rep.residual_norm <= 1e-15


def test_singular_names_dof():
    A = sp.csr_matrix(np.array([[1.0, 0, 0], [0, 0, 0], [0, 0, 2.0]]))
    with pytest.raises(SolverError, match="dof 1"):
        solve((A, np.ones(3)))


def test_dependent_rows():
    A = sp.csr_matrix(np.array([[1.0, 2, 0], [2.0, 4, 0], [0, 1, 1]]))
    with pytest.raises(SolverError, match="singular"):
        solve((A, np.ones(3)))


def test_shape_mismatch():
    with pytest.raises(SolverError):
        solve((sp.identity(3), np.ones(2)))


def test_residual_check_enforced():
    rng = np.random.default_rng(0)
    A = sp.csr_matrix(rng.standard_normal((40, 40)))
    b = rng.standard_normal(40)
    solve((A, b))
    with pytest.raises(SolverError, match="residual"):
        solve((A, b), tol=0.0)


@pytest.mark.parametrize("method", METHODS)
def test_patch_solution_matches_interpolant(method):
    mesh = cached_mesh("m1", 2)
    p = polynomial_patch_problem(2, constant_coefficients(K=((2, 0.3), (0.3, 1)), gamma=1))
    dm = build_dof_map(mesh, method, 2)
    ops = build_operators(mesh, dm)
    x, rep = solve(assemble(mesh, dm, p, operators=ops))
    u = interpolate(mesh, dm, p.exact_u, ops)
    np.testing.assert_allclose(x, u, atol=1e-10)
    assert rep.residual_norm <= 1e-10
    assert rep.nnz_factors >= rep.nnz
