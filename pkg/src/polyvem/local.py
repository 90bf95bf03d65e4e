"""Element-level virtual element operators.

For one polygon and one degree ``k`` this module lays out the degrees of
freedom, builds the matrices relating them to scaled monomials and turns
those into the local stiffness blocks and load vector.

Degrees of freedom, in local order:

* conforming: vertex values, then for every edge the moments
  ``1/|s| int_s v xi**j`` for ``j <= k-2``, then the internal moments;
* nonconforming: edge moments for ``j <= k-1``, then the internal moments.

Internal moments are ``1/|E| int_E v m_a`` for the element monomials of
degree ``<= k-2``.  Edge moments use the edge's canonical direction (from
the lower to the higher vertex id), so neighbouring elements see identical
functionals on a shared edge.

Matrix names follow the usual VEM recipe: ``D[i, a] = dof_i(m_a)``, ``H``
is the monomial mass matrix, ``pi_star = (D^T D)^{-1} D^T`` fixes the
enhanced space, ``C`` holds the computable moments ``(m_a, phi_i)``,
``pi0 = H^{-1} C`` gives the L2 projection and ``ex, ey = G^{-1} R`` the
L2 projection of the gradient onto degree ``k-1``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .mesh import ElementGeometry, polygon_geometry
from .monomials import MonomialBasis, basis_dim, edge_gram, _diff_matrices
from .quadrature import QuadratureRule, edge_rule, polygon_rule, required_consistency_degree

CONFORMING = "conforming"
NONCONFORMING = "nonconforming"
METHODS = (CONFORMING, NONCONFORMING)

EPS_SIGMA = 1e-10


class DegenerateElementError(ValueError):
    pass


def _check_method(method: str) -> str:
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    return method


def n_edge_moments(method: str, k: int) -> int:
    """Moments per edge: ``k-1`` (conforming) or ``k`` (nonconforming)."""
    return k - 1 if _check_method(method) == CONFORMING else k


@dataclass(frozen=True)
class DofLayout:
    """Local numbering of the degrees of freedom of one element.

    ``edge_flip[i]`` is True when the canonical direction of local edge
    ``i`` runs from local vertex ``i + 1`` back to vertex ``i``.
    """

    method: str
    k: int
    n_vertices: int
    edge_flip: np.ndarray

    @property
    def n_vertex_dofs(self) -> int:
        return self.n_vertices if self.method == CONFORMING else 0

    @property
    def n_edge_moments(self) -> int:
        return n_edge_moments(self.method, self.k)

    @property
    def n_internal(self) -> int:
        return basis_dim(2, self.k - 2)

    @property
    def n_dofs(self) -> int:
        return self.n_vertex_dofs + self.n_vertices * self.n_edge_moments + self.n_internal

    def vertex_dof(self, i: int) -> int:
        if self.method != CONFORMING:
            raise ValueError("nonconforming elements have no vertex dofs")
        return i % self.n_vertices

    def edge_dofs(self, i: int) -> np.ndarray:
        start = self.n_vertex_dofs + i * self.n_edge_moments
        return np.arange(start, start + self.n_edge_moments)

    @property
    def internal_dofs(self) -> np.ndarray:
        start = self.n_dofs - self.n_internal
        return np.arange(start, self.n_dofs)

    def describe(self) -> list[tuple[str, int, int]]:
        """``(kind, entity, moment)`` for every dof, in local order."""
        out = [("vertex", i, 0) for i in range(self.n_vertex_dofs)]
        out += [("edge", i, j) for i in range(self.n_vertices) for j in range(self.n_edge_moments)]
        out += [("internal", 0, a) for a in range(self.n_internal)]
        return out


def dof_layout(method: str, k: int, n_vertices: int, vertex_ids=None) -> DofLayout:
    """Dof layout for an element with ``n_vertices`` vertices.

    ``vertex_ids`` are the global vertex numbers used to orient the edges;
    local numbering is used when omitted.
    """
    _check_method(method)
    if k < 1:
        raise ValueError("k must be at least 1")
    ids = np.arange(n_vertices) if vertex_ids is None else np.asarray(vertex_ids)
    flip = ids > np.roll(ids, -1)
    return DofLayout(method, int(k), int(n_vertices), flip)


@dataclass(frozen=True)
class StabilizationParams:
    """Constant coefficient samples scaling the dof-based stabilizer."""

    k_bar: float
    div_b_bar: float
    gamma_bar: float
    h: float
    eps: float = EPS_SIGMA

    @property
    def sigma(self) -> float:
        return self.k_bar - 0.5 * self.div_b_bar * self.h + self.gamma_bar * self.h**2

    @property
    def effective(self) -> float:
        return max(self.sigma, self.eps * self.k_bar)

    @property
    def floored(self) -> bool:
        return not self.sigma > self.eps * self.k_bar


def stabilization_params(coeffs, geom: ElementGeometry, eps: float = EPS_SIGMA) -> StabilizationParams:
    """Sample the coefficients at the element centroid."""
    x, y = geom.centroid[:1], geom.centroid[1:]
    kxx, _, kyy = coeffs.diffusion(x, y)
    k_bar = 0.5 * float(np.asarray(kxx).ravel()[0] + np.asarray(kyy).ravel()[0])
    div_b = float(np.asarray(coeffs.div_convection(x, y)).ravel()[0])
    gamma = float(np.asarray(coeffs.reaction_sym(x, y)).ravel()[0])
    return StabilizationParams(k_bar, div_b, gamma, geom.diameter, eps)


@dataclass
class LocalOperators:
    """Matrices of one element.

    ``pi_star``, ``pi0``, ``pi0_dof``, ``ex`` and ``ey`` are held in
    extended precision (``numpy.longdouble``), the precision they are
    computed in; :meth:`f64` hands out cached float64 copies for assembly.
    """

    coords: np.ndarray
    layout: DofLayout
    geometry: ElementGeometry
    basis: MonomialBasis
    D: np.ndarray
    H: np.ndarray
    G: np.ndarray
    C: np.ndarray
    Rx: np.ndarray
    Ry: np.ndarray
    pi_star: np.ndarray
    pi0: np.ndarray
    pi0_dof: np.ndarray
    ex: np.ndarray
    ey: np.ndarray
    _rules: dict = field(default_factory=dict, repr=False)
    _f64: dict = field(default_factory=dict, repr=False)

    def f64(self, name: str) -> np.ndarray:
        """Float64 copy of one of the extended-precision projectors."""
        if name not in self._f64:
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            self._f64[name] = arr
        return self._f64[name]

    @property
    def k(self) -> int:
        return self.layout.k

    @property
    def n_dofs(self) -> int:
        return self.layout.n_dofs

    def rule(self, degree: int) -> QuadratureRule:
        if degree not in self._rules:
            self._rules[degree] = polygon_rule(self.coords, degree, self.geometry.centroid)
        return self._rules[degree]

    def edge_endpoints(self, i: int):
        """Canonically oriented endpoints of local edge ``i``."""
        n = len(self.coords)
        a, b = self.coords[i], self.coords[(i + 1) % n]
        return (b, a) if self.layout.edge_flip[i] else (a, b)


# -- matrix builders ------------------------------------------------------------


def _canonical_edge(coords, layout, i):
    n = len(coords)
    a, b = coords[i], coords[(i + 1) % n]
    return (b, a) if layout.edge_flip[i] else (a, b)


def build_H_G(coords, basis: MonomialBasis, geom: ElementGeometry | None = None, rule=None):
    """Monomial mass matrices on ``P_k`` and ``P_{k-1}``.

    ``rule`` must integrate degree ``2k`` exactly; a fan rule of that
    degree is built when omitted.
    """
    k = basis.degree
    if rule is None:
        center = None if geom is None else geom.centroid
        rule = polygon_rule(coords, 2 * k, center)
    V = basis.eval(rule.points)
    H = V.T @ (rule.weights[:, None] * V)
    H = 0.5 * (H + H.T)
    nk1 = basis_dim(2, k - 1)
    G = H[:nk1, :nk1].copy()
    try:
        la.cholesky(H)
    except la.LinAlgError as exc:
        raise DegenerateElementError("monomial mass matrix is not positive definite") from exc
    return H, G


def build_D(layout: DofLayout, coords, basis: MonomialBasis, geom: ElementGeometry, H):
    """``D[i, a] = dof_i(m_a)``, computed exactly."""
    k = layout.k
    nk = basis.size
    D = np.zeros((layout.n_dofs, nk))
    if layout.method == CONFORMING:
        D[: layout.n_vertices] = basis.eval(coords)
    nem = layout.n_edge_moments
    if nem:
        gram = edge_gram(k + 1, nem)
        for i in range(layout.n_vertices):
            a, b = _canonical_edge(coords, layout, i)
            D[layout.edge_dofs(i)] = (basis.edge_restriction(a, b) @ gram).T
    ni = layout.n_internal
    if ni:
        D[layout.internal_dofs] = H[:ni] / geom.area
    if np.linalg.matrix_rank(D) < nk:
        raise DegenerateElementError(f"D has rank below {nk}; element is degenerate for k={k}")
    return D


def _conforming_trace_map(k: int) -> np.ndarray:
    """Map edge dofs (start value, end value, moments) to trace coefficients in ``xi``."""
    V = np.zeros((k + 1, k + 1))
    powers = np.arange(k + 1)
    V[0] = (-0.5) ** powers
    V[1] = 0.5 ** powers
    if k > 1:
        V[2:] = edge_gram(k - 1, k + 1)
    return np.linalg.inv(V)


def build_R(layout: DofLayout, coords, basis: MonomialBasis, geom: ElementGeometry):
    """Right-hand sides ``(R^x, R^y)`` of the gradient projection.

    ``R^x[a, i] = int_{dE} m_a n_x phi_i - int_E phi_i d(m_a)/dx`` for
    ``m_a`` of degree ``<= k-1``; every term reduces to dofs of ``phi_i``.
    """
    k = layout.k
    nk1 = basis_dim(2, k - 1)
    n = layout.n_vertices
    Rx = np.zeros((nk1, layout.n_dofs))
    Ry = np.zeros((nk1, layout.n_dofs))
    if layout.method == CONFORMING:
        trace = _conforming_trace_map(k)
        moments = edge_gram(k + 1, k + 1)
    for i in range(n):
        a, b = _canonical_edge(coords, layout, i)
        length = geom.edge_lengths[i]
        nx, ny = geom.normals[i]
        r = basis.edge_restriction(a, b)[:nk1]
        if layout.method == CONFORMING:
            # trace of phi on the edge is a degree-k polynomial fixed by its dofs
            block = length * (r @ moments) @ trace
            v0, v1 = (i + 1) % n, i
            if not layout.edge_flip[i]:
                v0, v1 = v1, v0
            cols = np.concatenate([[layout.vertex_dof(v0), layout.vertex_dof(v1)], layout.edge_dofs(i)])
        else:
            # trace moments up to degree k-1 are the dofs themselves
            block = length * r[:, :k]
            cols = layout.edge_dofs(i)
        Rx[:, cols] += nx * block
        Ry[:, cols] += ny * block
    if k >= 2:
        dx, dy = _diff_matrices(k - 1, basis.scale)
        internal = layout.internal_dofs
        Rx[:, internal] -= geom.area * dx.T
        Ry[:, internal] -= geom.area * dy.T
    return Rx, Ry


def build_C(layout: DofLayout, H, D, pi_star, area: float):
    """Moments ``(m_a, phi_i)_E``: internal dofs up to degree ``k-2``, ``H pi_star`` above."""
    C = H @ pi_star
    ni = layout.n_internal
    if ni:
        C[:ni] = 0.0
        C[np.arange(ni), layout.internal_dofs] = area
    return C


_LD = np.longdouble
REFINEMENT_STEPS = 3


def _refined_spd_solve(A, B):
    """Solve ``A X = B`` with Cholesky plus iterative refinement.

    Residuals are formed in extended precision, so the answer is close to
    the correctly rounded solution even when ``A`` is badly conditioned
    (``cond(A) * eps < 1``).  ``B`` may be given in extended precision.
    """
    try:
        fac = la.cho_factor(A)
    except la.LinAlgError as exc:
        raise DegenerateElementError("singular projection system") from exc
    A_ld = np.asarray(A, dtype=_LD)
    B_ld = np.asarray(B, dtype=_LD)
    X = la.cho_solve(fac, B_ld.astype(float)).astype(_LD)
    for _ in range(REFINEMENT_STEPS):
        X += la.cho_solve(fac, (B_ld - A_ld @ X).astype(float))
    return X


def _left_inverse(D):
    """Least-squares left inverse ``(D^T D)^{-1} D^T`` via Householder QR."""
    Q, R = la.qr(D, mode="economic")
    if np.min(np.abs(np.diag(R))) <= 1e-13 * np.max(np.abs(np.diag(R))):
        raise DegenerateElementError("D is rank deficient")
    return la.solve_triangular(R, Q.T)


def local_operators(coords, method: str, k: int, vertex_ids=None) -> LocalOperators:
    """All projection matrices of one element.

    ``pi0`` and ``ex, ey`` are evaluated in a form that is algebraically
    equal to ``H^{-1} C`` and ``G^{-1} R`` but keeps polynomial
    reproduction at rounding level.  Writing ``P = I - D pi_star``, the
    identities ``C D = H`` and ``R D = G dx`` give

        pi0 = pi_star + H^{-1} (C - H pi_star) P
        ex  = dx pi_star + G^{-1} (Rx - G dx pi_star) P

    so ``pi0 D - I`` only inherits the tiny ``P D`` and never the
    conditioning of ``H`` or ``G``.  Solves are refined in extended
    precision, and a final defect correction ``X += (I - X D) pi_star``
    (zero for the exact operators) removes what rounding leaves.
    """
    coords = np.asarray(coords, dtype=float)
    layout = dof_layout(method, k, len(coords), vertex_ids)
    geom = polygon_geometry(coords)
    basis = MonomialBasis(geom.centroid, geom.diameter, k)
    rule = polygon_rule(coords, 2 * k, geom.centroid)
    H, G = build_H_G(coords, basis, geom, rule)
    D = build_D(layout, coords, basis, geom, H)
    D_ld = D.astype(_LD)
    ps = _left_inverse(D).astype(_LD)
    eye_k = np.eye(D.shape[1], dtype=_LD)
    ps += (eye_k - ps @ D_ld) @ ps  # Newton-Schulz step
    C = build_C(layout, H, D, ps.astype(float), geom.area)
    Rx, Ry = build_R(layout, coords, basis, geom)

    P = np.eye(layout.n_dofs, dtype=_LD) - D_ld @ ps
    pi0 = ps + _refined_spd_solve(H, (C.astype(_LD) - H.astype(_LD) @ ps) @ P)
    pi0 += (eye_k - pi0 @ D_ld) @ ps  # defect correction
    grads = []
    for R, d in zip((Rx, Ry), basis.grad_coeffs()):
        d = d.astype(_LD)
        dps = d @ ps
        E = dps + _refined_spd_solve(G, (R.astype(_LD) - G.astype(_LD) @ dps) @ P)
        grads.append(E + (d - E @ D_ld) @ ps)
    return LocalOperators(
        coords=coords, layout=layout, geometry=geom, basis=basis,
        D=D, H=H, G=G, C=C, Rx=Rx, Ry=Ry,
        pi_star=ps, pi0=pi0, pi0_dof=D_ld @ pi0, ex=grads[0], ey=grads[1],
        _rules={2 * k: rule},
    )


# -- forms and loads ---------------------------------------------------------


def projected_values(ops: LocalOperators, points):
    """Values of ``Pi0_k phi_i`` and of ``Pi0_{k-1} grad phi_i`` at ``points``.

    Returns ``(P, Gx, Gy)``, each of shape ``(npts, n_dofs)``.
    """
    V = ops.basis.eval(points)
    nk1 = ops.ex.shape[0]
    return V @ ops.f64("pi0"), V[:, :nk1] @ ops.f64("ex"), V[:, :nk1] @ ops.f64("ey")


def local_forms(ops: LocalOperators, coeffs, stab: StabilizationParams | None = None,
                degree: int | None = None, rule: QuadratureRule | None = None):
    """Symmetric and skew-symmetric parts of the local bilinear form.

    Entry ``[i, j]`` is the form evaluated with trial ``phi_j`` and test
    ``phi_i``.  Coefficient-weighted integrals use ``rule`` (or a fan rule
    of ``degree``, by default ``required_consistency_degree(k)``).

    Returns
    -------
    a_sym, a_skew : ndarray
        ``a_skew`` is antisymmetric bit for bit.
    """
    if rule is None:
        rule = ops.rule(required_consistency_degree(ops.k) if degree is None else degree)
    if stab is None:
        stab = stabilization_params(coeffs, ops.geometry)
    x, y = rule.points[:, 0], rule.points[:, 1]
    w = rule.weights
    P, Gx, Gy = projected_values(ops, rule.points)
    kxx, kxy, kyy = coeffs.diffusion(x, y)
    bx, by = coeffs.convection(x, y)
    gam = coeffs.reaction_sym(x, y)
    flux_x = (w * kxx)[:, None] * Gx + (w * kxy)[:, None] * Gy
    flux_y = (w * kxy)[:, None] * Gx + (w * kyy)[:, None] * Gy
    a = Gx.T @ flux_x + Gy.T @ flux_y + P.T @ ((w * gam)[:, None] * P)
    if stab.floored:
        warnings.warn(
            f"stabilization coefficient {stab.sigma:.3e} floored to {stab.effective:.3e}",
            RuntimeWarning, stacklevel=2)
    S = np.eye(ops.n_dofs) - ops.f64("pi0_dof")
    a = a + stab.effective * (S.T @ S)
    a_sym = 0.5 * (a + a.T)
    conv = bx[:, None] * Gx + by[:, None] * Gy
    B = P.T @ (w[:, None] * conv)
    a_skew = 0.5 * (B - B.T)
    return a_sym, a_skew


def local_rhs(ops: LocalOperators, forcing, degree: int | None = None,
              rule: QuadratureRule | None = None) -> np.ndarray:
    """Load vector ``(Pi0_k f, phi_i)_E = sum_a (f, m_a)_E pi0[a, i]``."""
    if rule is None:
        rule = ops.rule(required_consistency_degree(ops.k) if degree is None else degree)
    V = ops.basis.eval(rule.points)
    fm = V.T @ (rule.weights * forcing(rule.points[:, 0], rule.points[:, 1]))
    return ops.f64("pi0").T @ fm


def dofs_of_function(ops: LocalOperators, func, degree: int | None = None) -> np.ndarray:
    """Degrees of freedom of a smooth function ``func(x, y)``.

    Point values at vertices, Gauss quadrature for edge moments and a fan
    rule for internal moments, all exact to ``degree`` (default
    ``2k + 4``) for polynomial integrands.
    """
    layout = ops.layout
    k = layout.k
    degree = 2 * k + 4 if degree is None else degree
    out = np.zeros(layout.n_dofs)
    if layout.method == CONFORMING:
        out[: layout.n_vertices] = func(ops.coords[:, 0], ops.coords[:, 1])
    nem = layout.n_edge_moments
    if nem:
        for i in range(layout.n_vertices):
            a, b = ops.edge_endpoints(i)
            q = edge_rule(a, b, degree)
            xi = (q.points - 0.5 * (a + b)) @ (b - a) / np.dot(b - a, b - a)
            vals = func(q.points[:, 0], q.points[:, 1])
            length = q.weights.sum()
            out[layout.edge_dofs(i)] = (q.weights * vals) @ (xi[:, None] ** np.arange(nem)) / length
    ni = layout.n_internal
    if ni:
        rule = ops.rule(degree)
        V = ops.basis.eval(rule.points)[:, :ni]
        vals = func(rule.points[:, 0], rule.points[:, 1])
        out[layout.internal_dofs] = V.T @ (rule.weights * vals) / ops.geometry.area
    return out


def polynomial_dofs(ops: LocalOperators, coeffs) -> np.ndarray:
    """Dofs of the polynomial ``sum_a coeffs[a] m_a``; simply ``D @ coeffs``."""
    return ops.D @ np.asarray(coeffs)
