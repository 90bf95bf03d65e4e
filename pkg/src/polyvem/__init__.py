"""Conforming and nonconforming virtual element methods on polygonal meshes.

The package solves ``-div(K grad u) + b . grad u + gamma u = f`` with
Dirichlet data on the unit square, with variable coefficients, for any
polynomial degree ``k >= 1``.
"""
__version__ = "0.1.0"

from .analysis import (ConvergenceReport, ErrorRecord, compute_errors, eoc, jump_moments,
                       run_convergence_study, run_patch_test, solve_problem)
from .assembly import GlobalDofMap, LinearSystem, assemble, build_dof_map, build_operators
from .local import (CONFORMING, METHODS, NONCONFORMING, DofLayout, LocalOperators,
                    StabilizationParams, dof_layout, dofs_of_function, local_forms,
                    local_operators, local_rhs)
from .mesh import (PolyMesh, audit_quality, generate_m1, generate_m2, generate_m3, mesh_family,
                   read_mesh, write_mesh)
from .monomials import MonomialBasis, basis_dim
from .problem import (CoefficientField, ManufacturedProblem, benchmark_problem,
                      constant_coefficients, get_problem, polynomial_patch_problem,
                      variable_patch_problem)
from .quadrature import edge_rule, polygon_rule, required_consistency_degree
from .solver import SolveReport, SolverError, solve

__all__ = [
    "CONFORMING", "NONCONFORMING", "METHODS", "CoefficientField", "ConvergenceReport",
    "DofLayout", "ErrorRecord", "GlobalDofMap", "LinearSystem", "LocalOperators",
    "ManufacturedProblem", "MonomialBasis", "PolyMesh", "SolveReport", "SolverError",
    "StabilizationParams", "assemble", "audit_quality", "basis_dim", "benchmark_problem",
    "build_dof_map", "build_operators", "compute_errors", "constant_coefficients",
    "dof_layout", "dofs_of_function", "edge_rule", "eoc", "generate_m1", "generate_m2",
    "generate_m3", "jump_moments", "local_forms", "local_operators", "local_rhs",
    "mesh_family", "polygon_rule", "polynomial_patch_problem", "read_mesh",
    "required_consistency_degree", "run_convergence_study", "run_patch_test", "solve",
    "solve_problem", "write_mesh", "get_problem", "variable_patch_problem",
]
