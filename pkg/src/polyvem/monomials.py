"""Scaled monomial bases on polygons and edges.

Element monomials are ``((x - xc) / h) ** s`` for multi-indices ``|s| <= k``
in graded order, x-power first: ``1, X, Y, X^2, XY, Y^2, ...``.  Every
matrix in the package indexes polynomials this way, so the first
``basis_dim(2, l)`` entries of a degree-``k`` basis span ``P_l`` for any
``l <= k``.

Edge monomials are ``xi ** j`` with ``xi = (x - x_s) . t / |s|`` the scaled
arc-length coordinate in ``[-1/2, 1/2]``, measured along the edge's
canonical direction ``t``.
"""
from __future__ import annotations

from functools import lru_cache
from math import comb

import numpy as np
from numpy.polynomial import polynomial as npoly


def basis_dim(d: int, k: int) -> int:
    """Dimension of the polynomials of degree ``k`` in ``d`` variables.

    Negative degrees give 0.
    """
    if d not in (1, 2):
        raise ValueError("only d = 1 and d = 2 are supported")
    if k < 0:
        return 0
    return comb(k + d, d)


@lru_cache(maxsize=None)
def exponents(k: int) -> np.ndarray:
    """Exponent pairs of the degree-``k`` basis, shape ``(N_k, 2)``."""
    out = [(d - j, j) for d in range(k + 1) for j in range(d + 1)]
    arr = np.array(out, dtype=np.int64).reshape(-1, 2)
    arr.setflags(write=False)
    return arr


def index(px: int, py: int) -> int:
    """Position of ``X**px * Y**py`` in the graded ordering."""
    d = px + py
    return d * (d + 1) // 2 + py


class MonomialBasis:
    """Scaled monomials of degree ``<= degree`` about ``center``.

    Parameters
    ----------
    center : array_like, shape (2,)
    scale : float
        Usually the element diameter.
    degree : int
    """

    def __init__(self, center, scale: float, degree: int):
        if degree < 0:
            raise ValueError("degree must be non-negative")
        if not scale > 0:
            raise ValueError("scale must be positive")
        self.center = np.asarray(center, dtype=float).reshape(2)
        self.scale = float(scale)
        self.degree = int(degree)
        self.exponents = exponents(self.degree)

    @property
    def size(self) -> int:
        return len(self.exponents)

    def __len__(self):
        return self.size

    def __repr__(self):
        return (f"MonomialBasis(center={self.center.tolist()}, scale={self.scale:g}, "
                f"degree={self.degree})")

    def local_coords(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return (p[:, 0] - self.center[0]) / self.scale, (p[:, 1] - self.center[1]) / self.scale

    def eval(self, points) -> np.ndarray:
        """Values at ``points``; shape ``(npts, size)``, or ``(size,)`` for one point."""
        single = np.ndim(points) == 1
        X, Y = self.local_coords(points)
        k = self.degree
        xp = X[:, None] ** np.arange(k + 1)
        yp = Y[:, None] ** np.arange(k + 1)
        e = self.exponents
        vals = xp[:, e[:, 0]] * yp[:, e[:, 1]]
        return vals[0] if single else vals

    def grad_coeffs(self) -> tuple[np.ndarray, np.ndarray]:
        """Differentiation matrices from degree-``k`` to degree-``k-1`` coefficients.

        Returns ``(Dx, Dy)`` of shape ``(N_{k-1}, N_k)`` such that
        ``Dx @ c`` holds the coefficients of ``d/dx`` of ``sum_a c_a m_a``.
        """
        k = self.degree
        if k < 1:
            raise ValueError("grad_coeffs needs degree >= 1")
        return _diff_matrices(k, self.scale)

    def eval_poly(self, coeffs, points) -> np.ndarray:
        """Evaluate ``sum_a coeffs[a] m_a`` at ``points``."""
        return self.eval(points) @ np.asarray(coeffs)

    def edge_restriction(self, a, b) -> np.ndarray:
        """Restriction of every basis monomial to the segment from ``a`` to ``b``.

        Returns ``R`` of shape ``(size, degree + 1)`` with
        ``m_alpha(x(xi)) = sum_j R[alpha, j] xi**j`` where
        ``x(xi) = (a + b) / 2 + xi (b - a)``, ``xi`` in ``[-1/2, 1/2]``.
        """
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        mid = 0.5 * (a + b)
        off = (mid - self.center) / self.scale
        slope = (b - a) / self.scale
        k = self.degree
        powx = [npoly.polypow([off[0], slope[0]], p) for p in range(k + 1)]
        powy = [npoly.polypow([off[1], slope[1]], p) for p in range(k + 1)]
        out = np.zeros((self.size, k + 1))
        for alpha, (px, py) in enumerate(self.exponents):
            c = npoly.polymul(powx[px], powy[py])
            out[alpha, : len(c)] = c
        return out


@lru_cache(maxsize=None)
def _diff_unscaled(k: int):
    n_lo = basis_dim(2, k - 1)
    n_hi = basis_dim(2, k)
    dx = np.zeros((n_lo, n_hi))
    dy = np.zeros((n_lo, n_hi))
    for alpha, (px, py) in enumerate(exponents(k)):
        if px > 0:
            dx[index(px - 1, py), alpha] = px
        if py > 0:
            dy[index(px, py - 1), alpha] = py
    return dx, dy


def _diff_matrices(k: int, scale: float):
    dx, dy = _diff_unscaled(k)
    return dx / scale, dy / scale


@lru_cache(maxsize=None)
def interval_moments(p: int) -> np.ndarray:
    """``int_{-1/2}^{1/2} xi**j dxi`` for ``j = 0..p``."""
    j = np.arange(p + 1)
    return np.where(j % 2 == 0, 2.0 * 0.5 ** (j + 1) / (j + 1), 0.0)


def edge_gram(n: int, m: int | None = None) -> np.ndarray:
    """``G[i, j] = int_{-1/2}^{1/2} xi**(i + j) dxi`` for ``i < n``, ``j < m``."""
    m = n if m is None else m
    mu = interval_moments(n + m)
    i = np.arange(n)[:, None]
    j = np.arange(m)[None, :]
    return mu[i + j]
