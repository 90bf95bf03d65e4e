"""Sparse direct solve with a mandatory residual check."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

RESIDUAL_TOL = 1e-10
# dense fallback used only to locate the offending dof of a singular matrix
_DENSE_DIAGNOSIS_LIMIT = 4000


class SolverError(RuntimeError):
    """Raised for singular systems or when the residual check fails."""


@dataclass(frozen=True)
class SolveReport:
    residual_norm: float
    method: str
    n: int
    nnz: int
    nnz_factors: int
    seconds: float


def _singular_dof(A) -> int | None:
    A = sp.csr_matrix(A)
    empty_rows = np.flatnonzero(np.diff(A.indptr) == 0)
    empty_cols = np.flatnonzero(np.bincount(A.indices, minlength=A.shape[1]) == 0)
    empty = np.concatenate([empty_rows, empty_cols])
    if empty.size:
        return int(empty.min())
    if A.shape[0] > _DENSE_DIAGNOSIS_LIMIT:
        return None
    # column pivoting would hide the dependency; use partial pivoting on A^T
    _, _, U = la.lu(A.toarray().T)
    d = np.abs(np.diag(U))
    small = np.flatnonzero(d <= 1e-14 * max(d.max(), 1.0))
    return int(small[0]) if small.size else None


def solve(system, tol: float = RESIDUAL_TOL):
    """Solve ``system.matrix x = system.rhs`` by sparse LU.

    Accepts a :class:`~polyvem.assembly.LinearSystem` or a ``(matrix, rhs)``
    pair.

    Returns
    -------
    x : ndarray
    report : SolveReport

    Raises
    ------
    SolverError
        If the matrix is singular (naming a dof when it can be located)
        or the relative residual ``|Ax - b| / |b|`` exceeds ``tol``.
    """
    if isinstance(system, tuple):
        A, b = system
    else:
        A, b = system.matrix, system.rhs
    A = sp.csc_matrix(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
        raise SolverError(f"incompatible system shapes {A.shape} and {b.shape}")
    t0 = time.perf_counter()
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        dof = _singular_dof(A)
        where = f" (first zero pivot at dof {dof})" if dof is not None else ""
        raise SolverError(f"matrix is singular{where}") from exc
    x = lu.solve(b)
    seconds = time.perf_counter() - t0
    bnorm = np.linalg.norm(b)
    r = np.linalg.norm(A @ x - b)
    res = r / bnorm if bnorm > 0 else r
    if not np.isfinite(res) or res > tol:
        raise SolverError(f"relative residual {res:.3e} exceeds {tol:.1e}")
    report = SolveReport(float(res), "superlu", A.shape[0], A.nnz,
                         lu.L.nnz + lu.U.nnz, seconds)
    return x, report
