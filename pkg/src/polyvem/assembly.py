"""Global numbering, assembly and Dirichlet elimination.

Global dofs are numbered by entity: vertex values (conforming only), then
edge moments edge by edge, then internal moments element by element.
Edge moments are taken along each edge's canonical direction (lower to
higher vertex id), which both neighbours use, so the two local copies of a
shared moment are the same functional and no sign correction is needed.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .local import (CONFORMING, LocalOperators, _check_method, dofs_of_function,
                    local_forms, local_operators, local_rhs, n_edge_moments)
from .mesh import PolyMesh
from .monomials import basis_dim
from .quadrature import DEFAULT_MARGIN, required_consistency_degree


@dataclass(frozen=True)
class GlobalDofMap:
    """Global degrees of freedom of a mesh for one method and degree.

    Attributes
    ----------
    vertex_offset, edge_offset, element_offset : int
        First global index of each entity block.
    local_to_global : list of ndarray
        For element ``e``, the global index of every local dof.
    boundary : ndarray of bool
        True for dofs attached to boundary vertices and edges.
    """

    method: str
    k: int
    n_vertex_dofs: int
    n_edge_moments: int
    n_internal: int
    vertex_offset: int
    edge_offset: int
    element_offset: int
    total_dofs: int
    local_to_global: list = field(repr=False)
    boundary: np.ndarray = field(repr=False)

    @property
    def boundary_dofs(self) -> np.ndarray:
        return np.flatnonzero(self.boundary)

    @property
    def interior_dofs(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)

    def edge_dofs(self, edge: int) -> np.ndarray:
        start = self.edge_offset + edge * self.n_edge_moments
        return np.arange(start, start + self.n_edge_moments)


def build_dof_map(mesh: PolyMesh, method: str, k: int) -> GlobalDofMap:
    _check_method(method)
    if k < 1:
        raise ValueError("k must be at least 1")
    nv = mesh.n_vertices if method == CONFORMING else 0
    nem = n_edge_moments(method, k)
    ni = basis_dim(2, k - 2)
    edge_offset = nv
    element_offset = edge_offset + mesh.n_edges * nem
    total = element_offset + mesh.n_elements * ni

    l2g = []
    for e, loop in enumerate(mesh.elements):
        parts = [np.asarray(loop)] if nv else []
        for s in mesh.element_edges[e]:
            parts.append(edge_offset + s * nem + np.arange(nem))
        parts.append(element_offset + e * ni + np.arange(ni))
        idx = np.concatenate(parts).astype(np.int64)
        idx.setflags(write=False)
        l2g.append(idx)

    boundary = np.zeros(total, dtype=bool)
    if nv:
        boundary[:nv] = mesh.boundary_vertex
    for s in np.flatnonzero(mesh.boundary_edge):
        boundary[edge_offset + s * nem: edge_offset + (s + 1) * nem] = True
    boundary.setflags(write=False)
    return GlobalDofMap(method, int(k), nv, nem, ni, 0, edge_offset, element_offset,
                        total, l2g, boundary)


def build_operators(mesh: PolyMesh, dofmap: GlobalDofMap) -> list[LocalOperators]:
    """Local operators of every element, in element order."""
    return [local_operators(mesh.element_coords(e), dofmap.method, dofmap.k, mesh.elements[e])
            for e in range(mesh.n_elements)]


@dataclass
class LinearSystem:
    """Assembled system after Dirichlet elimination.

    Boundary rows and columns are identity, with the boundary values in
    ``rhs``.  ``n_floored`` counts elements whose stabilization
    coefficient had to be floored.
    """

    matrix: sp.csr_matrix
    rhs: np.ndarray
    dirichlet: np.ndarray
    boundary: np.ndarray
    n_floored: int = 0

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def _check_consistency(mesh, dofmap, operators):
    if len(dofmap.local_to_global) != mesh.n_elements:
        raise ValueError("dof map was built for a different mesh")
    if operators is not None:
        if len(operators) != mesh.n_elements:
            raise ValueError("operator list does not match the mesh")
        ops = operators[0]
        if ops.layout.method != dofmap.method or ops.k != dofmap.k:
            raise ValueError("operators were built for a different method or degree")


def dirichlet_values(mesh: PolyMesh, dofmap: GlobalDofMap, g, operators=None) -> np.ndarray:
    """Dofs of ``g`` on boundary entities; zero elsewhere."""
    out = np.zeros(dofmap.total_dofs)
    bnd = dofmap.boundary
    for e, idx in enumerate(dofmap.local_to_global):
        mask = bnd[idx]
        if not mask.any():
            continue
        ops = operators[e] if operators is not None else local_operators(
            mesh.element_coords(e), dofmap.method, dofmap.k, mesh.elements[e])
        out[idx[mask]] = dofs_of_function(ops, g)[mask]
    return out


def interpolate(mesh: PolyMesh, dofmap: GlobalDofMap, func, operators=None) -> np.ndarray:
    """Global dof vector of a smooth function (last writer wins on shared dofs)."""
    out = np.zeros(dofmap.total_dofs)
    for e, idx in enumerate(dofmap.local_to_global):
        ops = operators[e] if operators is not None else local_operators(
            mesh.element_coords(e), dofmap.method, dofmap.k, mesh.elements[e])
        out[idx] = dofs_of_function(ops, func)
    return out


def assemble(mesh: PolyMesh, dofmap: GlobalDofMap, problem, margin: int = DEFAULT_MARGIN,
             operators: list[LocalOperators] | None = None) -> LinearSystem:
    """Assemble ``a_h + b_h`` and the load, then impose ``u = g`` on the boundary.

    Parameters
    ----------
    problem : ManufacturedProblem
        Supplies the coefficients, forcing and Dirichlet data.
    margin : int
        Quadrature margin for coefficient-weighted integrals, see
        :func:`~polyvem.quadrature.required_consistency_degree`.
    operators : list of LocalOperators, optional
        Precomputed local operators (e.g. from :func:`build_operators`).
    """
    _check_consistency(mesh, dofmap, operators)
    degree = required_consistency_degree(dofmap.k, margin)
    coeffs = problem.coefficients
    rows, cols, vals = [], [], []
    rhs = np.zeros(dofmap.total_dofs)
    n_floored = 0
    for e, idx in enumerate(dofmap.local_to_global):
        ops = operators[e] if operators is not None else local_operators(
            mesh.element_coords(e), dofmap.method, dofmap.k, mesh.elements[e])
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RuntimeWarning)
            a_sym, a_skew = local_forms(ops, coeffs, degree=degree)
        n_floored += sum(issubclass(w.category, RuntimeWarning) for w in caught)
        rows.append(np.repeat(idx, len(idx)))
        cols.append(np.tile(idx, len(idx)))
        vals.append((a_sym + a_skew).ravel())
        np.add.at(rhs, idx, local_rhs(ops, problem.forcing, degree=degree))
    if n_floored:
        warnings.warn(f"stabilization floored on {n_floored} element(s)", RuntimeWarning,
                      stacklevel=2)
    n = dofmap.total_dofs
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n)).tocsr()
    A.sum_duplicates()

    bnd = dofmap.boundary
    g = dirichlet_values(mesh, dofmap, problem.dirichlet, operators)
    rhs = rhs - A @ g
    keep = sp.diags((~bnd).astype(float))
    A = (keep @ A @ keep + sp.diags(bnd.astype(float))).tocsr()
    A.eliminate_zeros()
    rhs[bnd] = g[bnd]
    return LinearSystem(A, rhs, g, bnd, n_floored)
