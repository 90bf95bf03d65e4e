"""Error measurement, convergence rates and the study drivers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assembly import GlobalDofMap, assemble, build_dof_map, build_operators
from .local import NONCONFORMING
from .mesh import PolyMesh, mesh_family
from .problem import ManufacturedProblem, constant_coefficients, get_problem, polynomial_patch_problem
from .quadrature import DEFAULT_MARGIN, required_consistency_degree
from .solver import SolverError, solve


@dataclass(frozen=True)
class ErrorRecord:
    """Relative errors of one discrete solution.

    ``rel_l2`` compares ``Pi0_k u_h`` with ``u``; ``rel_h1`` compares the
    projected gradient ``Pi0_{k-1} grad u_h`` with ``grad u`` in the
    broken seminorm.
    """

    h: float
    rel_l2: float
    rel_h1: float
    dofs: int
    method: str
    k: int
    family: str = ""
    level: int = 0


def error_degree(k: int, margin: int = DEFAULT_MARGIN) -> int:
    """Quadrature degree for error integrals: consistency degree plus 2."""
    return required_consistency_degree(k, margin) + 2


def compute_errors(mesh: PolyMesh, dofmap: GlobalDofMap, solution, problem: ManufacturedProblem,
                   k: int | None = None, operators=None, degree: int | None = None,
                   family: str = "", level: int = 0) -> ErrorRecord:
    """Relative L2 and broken H1 errors of the projected discrete solution.

    When the exact solution has zero norm the absolute error is reported.
    """
    k = dofmap.k if k is None else k
    if k != dofmap.k:
        raise ValueError("k does not match the dof map")
    solution = np.asarray(solution, dtype=float)
    if solution.shape != (dofmap.total_dofs,):
        raise ValueError(f"solution has length {solution.size}, expected {dofmap.total_dofs}")
    if operators is None:
        operators = build_operators(mesh, dofmap)
    degree = error_degree(k) if degree is None else degree
    err0 = err1 = nrm0 = nrm1 = 0.0
    for ops, idx in zip(operators, dofmap.local_to_global):
        u_loc = solution[idx]
        rule = ops.rule(degree)
        x, y = rule.points[:, 0], rule.points[:, 1]
        w = rule.weights
        V = ops.basis.eval(rule.points)
        nk1 = ops.ex.shape[0]
        uh = V @ (ops.f64("pi0") @ u_loc)
        gx = V[:, :nk1] @ (ops.f64("ex") @ u_loc)
        gy = V[:, :nk1] @ (ops.f64("ey") @ u_loc)
        u = problem.exact_u(x, y)
        ux, uy = problem.exact_grad_u(x, y)
        err0 += w @ (u - uh) ** 2
        nrm0 += w @ u**2
        err1 += w @ ((ux - gx) ** 2 + (uy - gy) ** 2)
        nrm1 += w @ (ux**2 + uy**2)
    rel_l2 = np.sqrt(err0 / nrm0) if nrm0 > 0 else np.sqrt(err0)
    rel_h1 = np.sqrt(err1 / nrm1) if nrm1 > 0 else np.sqrt(err1)
    return ErrorRecord(mesh.h, float(rel_l2), float(rel_h1), dofmap.total_dofs,
                       dofmap.method, k, family, level)


@dataclass(frozen=True)
class ConvergenceReport:
    """Errors over a refinement sequence and the observed rates.

    ``pair_*`` hold ``log(e_i / e_{i+1}) / log(h_i / h_{i+1})`` for
    consecutive levels; ``slope_*`` is the least-squares slope of
    ``log e`` against ``log h`` over the last three levels (all of them
    when fewer are available).
    """

    records: tuple
    pair_l2: np.ndarray = field(repr=False)
    pair_h1: np.ndarray = field(repr=False)
    slope_l2: float = float("nan")
    slope_h1: float = float("nan")

    @property
    def h(self) -> np.ndarray:
        return np.array([r.h for r in self.records])


LS_LEVELS = 3


def _ls_slope(h, e) -> float:
    with np.errstate(divide="ignore"):
        return float(np.polyfit(np.log(h), np.log(e), 1)[0])


def eoc(records) -> ConvergenceReport:
    """Pairwise and least-squares convergence rates.

    >>> r = [ErrorRecord(0.1, 0.1, 0.1, 0, "conforming", 1),
    ...      ErrorRecord(0.05, 0.025, 0.05, 0, "conforming", 1)]
    >>> float(eoc(r).pair_l2[0])
    2.0
    """
    records = tuple(records)
    if len(records) < 2:
        raise ValueError("need at least two records")
    h = np.array([r.h for r in records])
    if np.any(np.diff(h) >= 0):
        raise ValueError("mesh sizes must be strictly decreasing")
    out = {}
    for name in ("l2", "h1"):
        e = np.array([getattr(r, f"rel_{name}") for r in records])
        with np.errstate(divide="ignore", invalid="ignore"):
            out[f"pair_{name}"] = np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])
        tail = slice(-min(LS_LEVELS, len(records)), None)
        out[f"slope_{name}"] = _ls_slope(h[tail], e[tail])
    return ConvergenceReport(records, **out)


def solve_problem(mesh: PolyMesh, method: str, k: int, problem: ManufacturedProblem,
                  margin: int = DEFAULT_MARGIN):
    """Assemble and solve; returns ``(solution, dofmap, operators, report)``."""
    dofmap = build_dof_map(mesh, method, k)
    operators = build_operators(mesh, dofmap)
    system = assemble(mesh, dofmap, problem, margin=margin, operators=operators)
    x, report = solve(system)
    return x, dofmap, operators, report


def run_patch_test(method: str, k: int, mesh: PolyMesh, m: int, coefficients=None) -> float:
    """Max relative error when the exact solution is ``x^m + y^m``.

    With constant coefficients and ``m <= k`` the method reproduces the
    solution, so the result should sit at rounding level.
    """
    if m > k:
        raise ValueError("patch test needs m <= k")
    problem = polynomial_patch_problem(m, coefficients or constant_coefficients())
    x, dofmap, operators, _ = solve_problem(mesh, method, k, problem)
    rec = compute_errors(mesh, dofmap, x, problem, operators=operators)
    return max(rec.rel_l2, rec.rel_h1)


def run_convergence_study(method: str, k: int, family: str, levels, problem="benchmark",
                          seed: int = 0, margin: int = DEFAULT_MARGIN,
                          mesh_options: dict | None = None) -> ConvergenceReport:
    """Solve on a sequence of mesh levels and fit the rates.

    Raises
    ------
    SolverError
        Re-raised with the failing level in the message.
    """
    if isinstance(problem, str):
        problem = get_problem(problem)
    levels = list(levels)
    if not set(levels) <= {1, 2, 3, 4, 5}:
        raise ValueError("levels must lie in 1..5")
    records = []
    for level in levels:
        mesh = mesh_family(family, level, seed=seed, **(mesh_options or {}))
        try:
            x, dofmap, operators, _ = solve_problem(mesh, method, k, problem, margin)
        except SolverError as exc:
            raise SolverError(f"{method} k={k} {family} level {level}: {exc}") from exc
        records.append(compute_errors(mesh, dofmap, x, problem, operators=operators,
                                      family=family, level=level))
    return eoc(records)


def jump_moments(mesh: PolyMesh, dofmap: GlobalDofMap, solution, operators=None) -> np.ndarray:
    """Jump moments ``int_s [u_h] n q ds`` on interior edges.

    Each side's trace moments ``1/|s| int_s u_h xi^j`` are read from that
    element's local dof vector (local edges are oriented canonically, so
    both sides use the same ``xi``).  Returns an array of shape
    ``(n_interior_edges, 2, n_moments)`` holding the x and y components.
    """
    if dofmap.method != NONCONFORMING:
        raise ValueError("jump moments are defined for the nonconforming method")
    if operators is None:
        operators = build_operators(mesh, dofmap)
    solution = np.asarray(solution, dtype=float)
    nem = dofmap.n_edge_moments
    sides = {}
    for e, (ops, idx) in enumerate(zip(operators, dofmap.local_to_global)):
        u_loc = solution[idx]
        for i, s in enumerate(mesh.element_edges[e]):
            if mesh.boundary_edge[s]:
                continue
            moments = ops.geometry.edge_lengths[i] * u_loc[ops.layout.edge_dofs(i)]
            sides.setdefault(s, []).append((moments, ops.geometry.normals[i]))
    out = []
    for s in sorted(sides):
        (m0, n0), (m1, n1) = sides[s]
        jump = m0[None, :] * n0[:, None] + m1[None, :] * n1[:, None]
        out.append(jump)
    return np.array(out).reshape(-1, 2, nem)

