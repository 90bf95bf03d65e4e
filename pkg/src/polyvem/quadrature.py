"""Quadrature on segments and polygons.

Segments use Gauss-Legendre.  Polygons are split into a fan of triangles
around the centroid, each integrated with a collapsed (Duffy) product of
Gauss-Legendre and Gauss-Jacobi rules, which has positive weights for any
degree.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

DEFAULT_MARGIN = 2


class QuadratureError(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    degree: int

    def integrate(self, values) -> float | np.ndarray:
        """Weighted sum over the leading axis of ``values``."""
        return np.tensordot(self.weights, np.asarray(values), axes=(0, 0))

    def __len__(self):
        return len(self.weights)


@lru_cache(maxsize=None)
def _gauss_legendre(npts: int):
    x, w = np.polynomial.legendre.leggauss(npts)
    return x, w


def n_gauss_points(degree: int) -> int:
    """Points of the Gauss rule exact to ``degree``."""
    return max(1, (degree + 2) // 2)


def edge_rule(a, b, degree: int) -> QuadratureRule:
    """Gauss-Legendre rule on the segment from ``a`` to ``b``.

    ``a`` and ``b`` may be scalars (an interval of the real line) or points
    in the plane; weights always sum to the segment length.
    """
    if degree < 0:
        raise ValueError("degree must be non-negative")
    x, w = _gauss_legendre(n_gauss_points(degree))
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    t = 0.5 * (x + 1.0)
    if a.ndim == 0:
        return QuadratureRule(a + t * (b - a), 0.5 * abs(b - a) * w, degree)
    length = float(np.linalg.norm(b - a))
    pts = a[None, :] + t[:, None] * (b - a)[None, :]
    return QuadratureRule(pts, 0.5 * length * w, degree)


@lru_cache(maxsize=None)
def reference_triangle_rule(degree: int):
    """Rule on the triangle (0,0), (1,0), (0,1); returns ``(points, weights)``."""
    npts = n_gauss_points(degree)
    xg, wg = _gauss_legendre(npts)
    xj, wj = roots_jacobi(npts, 1.0, 0.0)
    xi = 0.5 * (xg + 1.0)
    eta = 0.5 * (xj + 1.0)
    X = np.outer(1.0 - eta, xi)
    Y = np.repeat(eta[:, None], npts, axis=1)
    W = np.outer(0.25 * wj, 0.5 * wg)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    w = W.ravel()
    pts.setflags(write=False)
    w.setflags(write=False)
    return pts, w


def triangle_rule(a, b, c, degree: int) -> QuadratureRule:
    ref, w = reference_triangle_rule(degree)
    a, b, c = (np.asarray(p, dtype=float) for p in (a, b, c))
    J = np.column_stack([b - a, c - a])
    det = np.linalg.det(J)
    if not det > 0:
        raise QuadratureError("triangle has non-positive area")
    return QuadratureRule(a + ref @ J.T, w * det, degree)


def polygon_rule(coords, degree: int, center=None) -> QuadratureRule:
    """Fan-triangulation rule on a polygon.

    Parameters
    ----------
    coords : (n, 2) array_like
        Counterclockwise vertices.
    degree : int
        Polynomial degree integrated exactly.
    center : array_like, optional
        Fan apex; the area centroid when omitted.

    Raises
    ------
    QuadratureError
        If some fan triangle is degenerate or inverted, i.e. the polygon is
        not star-shaped with respect to the apex.
    """
    p = np.asarray(coords, dtype=float)
    if center is None:
        from .mesh import polygon_geometry

        center = polygon_geometry(p).centroid
    c = np.asarray(center, dtype=float)
    ref, w = reference_triangle_rule(degree)
    e1 = p - c
    e2 = np.roll(p, -1, axis=0) - c
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    if not np.all(det > 0):
        bad = int(np.argmin(det))
        raise QuadratureError(
            f"fan triangle {bad} has non-positive area; polygon is not "
            "star-shaped with respect to the fan apex")
    # points[t, q] = c + ref_x e1[t] + ref_y e2[t]
    pts = c + ref[None, :, 0:1] * e1[:, None, :] + ref[None, :, 1:2] * e2[:, None, :]
    weights = det[:, None] * w[None, :]
    return QuadratureRule(pts.reshape(-1, 2), weights.ravel(), degree)


def required_consistency_degree(k: int, margin: int = DEFAULT_MARGIN) -> int:
    """Degree for coefficient-weighted consistency integrals.

    ``2k + margin``, never below the ``2k - 2`` needed to keep stability and
    optimal accuracy.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    return max(2 * k + margin, 2 * k - 2, 0)
