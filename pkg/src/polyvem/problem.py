"""Coefficient fields and manufactured problems for

    -div(K grad u) + b . grad u + gamma u = f   in the unit square,
    u = g                                       on its boundary.

All callables take coordinate arrays ``x, y`` of equal shape and return
arrays of that shape (or tuples of them).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

Array = np.ndarray
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class CoefficientField:
    """Variable coefficients of the operator.

    ``diffusion`` returns ``(Kxx, Kxy, Kyy)``, ``convection`` returns
    ``(bx, by)``, ``div_convection`` the analytic divergence of ``b`` and
    ``reaction`` returns ``gamma``.
    """

    diffusion: Callable[[Array, Array], tuple[Array, Array, Array]]
    convection: Callable[[Array, Array], tuple[Array, Array]]
    div_convection: Callable[[Array, Array], Array]
    reaction: Callable[[Array, Array], Array]
    constant: bool = False

    def reaction_sym(self, x, y):
        """Effective reaction ``gamma - div(b) / 2`` of the symmetric part."""
        return self.reaction(x, y) - 0.5 * self.div_convection(x, y)

    def check(self, points, tol: float = 0.0) -> None:
        """Raise ``ValueError`` unless K is SPD and the effective reaction is >= 0.

        Only the given sample points are examined.
        """
        p = np.atleast_2d(points)
        kxx, kxy, kyy = (np.broadcast_to(v, p[:, 0].shape)
                         for v in self.diffusion(p[:, 0], p[:, 1]))
        tr = kxx + kyy
        det = kxx * kyy - kxy**2
        lam_min = 0.5 * tr - np.sqrt(np.maximum(0.25 * tr**2 - det, 0.0))
        if np.any(lam_min <= tol):
            raise ValueError(f"diffusion tensor not positive definite (min eigenvalue {lam_min.min():.3e})")
        rs = self.reaction_sym(p[:, 0], p[:, 1])
        if np.any(rs < -tol):
            raise ValueError(f"gamma - div(b)/2 is negative ({np.min(rs):.3e})")


def constant_coefficients(K=((1.0, 0.0), (0.0, 1.0)), b=(0.0, 0.0), gamma=0.0) -> CoefficientField:
    K = np.asarray(K, dtype=float)
    if not np.allclose(K, K.T):
        raise ValueError("diffusion tensor must be symmetric")
    kxx, kxy, kyy = K[0, 0], K[0, 1], K[1, 1]
    bx, by = (float(v) for v in b)
    gamma = float(gamma)

    def full(x, v):
        return np.full(np.shape(x), v)

    return CoefficientField(
        diffusion=lambda x, y: (full(x, kxx), full(x, kxy), full(x, kyy)),
        convection=lambda x, y: (full(x, bx), full(x, by)),
        div_convection=lambda x, y: full(x, 0.0),
        reaction=lambda x, y: full(x, gamma),
        constant=True,
    )


@dataclass(frozen=True)
class ManufacturedProblem:
    name: str
    coefficients: CoefficientField
    exact_u: Callable[[Array, Array], Array]
    exact_grad_u: Callable[[Array, Array], tuple[Array, Array]]
    forcing: Callable[[Array, Array], Array]

    def dirichlet(self, x, y):
        return self.exact_u(x, y)


# -- benchmark -------------------------------------------------------------


def _bench_diffusion(x, y):
    s = np.sin(TWO_PI * x) * np.sin(TWO_PI * y)
    kxy = -x * y * s
    return 1.0 + y**2, kxy, 1.0 + x**2


def _bench_convection(x, y):
    return -2.0 * (x + 2.0 * y**2 - 1.0), 3.0 * (3.0 * x**2 - 2.0 * y + 3.0)


def _bench_div_convection(x, y):
    return np.full(np.shape(x), -8.0)


def _bench_reaction(x, y):
    return x**2 + y**3 + 1.0


def _bench_u(x, y):
    return np.sin(TWO_PI * x) * np.sin(TWO_PI * y) + x**5 + y**5


def _bench_grad_u(x, y):
    sx, cx = np.sin(TWO_PI * x), np.cos(TWO_PI * x)
    sy, cy = np.sin(TWO_PI * y), np.cos(TWO_PI * y)
    return TWO_PI * cx * sy + 5.0 * x**4, TWO_PI * sx * cy + 5.0 * y**4


def _bench_operator(x, y, u, ux, uy, uxx, uxy, uyy):
    """Benchmark operator applied to a function given its derivatives up to order 2."""
    sx, cx = np.sin(TWO_PI * x), np.cos(TWO_PI * x)
    sy, cy = np.sin(TWO_PI * y), np.cos(TWO_PI * y)
    kxx, kxy, kyy = _bench_diffusion(x, y)
    # d/dx Kxx = d/dy Kyy = 0
    dkxy_dx = -y * sx * sy - x * y * TWO_PI * cx * sy
    dkxy_dy = -x * sx * sy - x * y * TWO_PI * sx * cy
    div_flux = kxx * uxx + 2.0 * kxy * uxy + kyy * uyy + dkxy_dx * uy + dkxy_dy * ux
    bx, by = _bench_convection(x, y)
    return -div_flux + bx * ux + by * uy + _bench_reaction(x, y) * u


def _bench_forcing(x, y):
    sx, cx = np.sin(TWO_PI * x), np.cos(TWO_PI * x)
    sy, cy = np.sin(TWO_PI * y), np.cos(TWO_PI * y)
    w2 = TWO_PI**2
    ux, uy = _bench_grad_u(x, y)
    uxx = -w2 * sx * sy + 20.0 * x**3
    uyy = -w2 * sx * sy + 20.0 * y**3
    uxy = w2 * cx * cy
    return _bench_operator(x, y, _bench_u(x, y), ux, uy, uxx, uxy, uyy)


def _bench_coefficients() -> CoefficientField:
    return CoefficientField(
        diffusion=_bench_diffusion,
        convection=_bench_convection,
        div_convection=_bench_div_convection,
        reaction=_bench_reaction,
    )


def benchmark_problem() -> ManufacturedProblem:
    """Convection-reaction-diffusion benchmark with smooth variable coefficients.

    ``u = sin(2 pi x) sin(2 pi y) + x^5 + y^5``; the forcing is the exact
    image of ``u`` under the operator.
    """
    return ManufacturedProblem("benchmark", _bench_coefficients(), _bench_u, _bench_grad_u, _bench_forcing)


def polynomial_patch_problem(m: int, coefficients: CoefficientField | None = None) -> ManufacturedProblem:
    """Problem with exact solution ``x^m + y^m`` and constant coefficients."""
    if m < 1:
        raise ValueError("m must be at least 1")
    if coefficients is None:
        coefficients = constant_coefficients()
    if not coefficients.constant:
        raise ValueError("patch problems need constant coefficients")
    kxx, _, kyy = (float(np.asarray(v).reshape(-1)[0])
                   for v in coefficients.diffusion(np.zeros(1), np.zeros(1)))
    bx, by = (float(np.asarray(v).reshape(-1)[0])
              for v in coefficients.convection(np.zeros(1), np.zeros(1)))
    gamma = float(np.asarray(coefficients.reaction(np.zeros(1), np.zeros(1))).reshape(-1)[0])
    coefficients.check(np.array([[0.5, 0.5]]))

    def u(x, y):
        return x**m + y**m

    def grad_u(x, y):
        return m * x ** (m - 1), m * y ** (m - 1)

    def f(x, y):
        lap = m * (m - 1) * (kxx * x ** max(m - 2, 0) + kyy * y ** max(m - 2, 0))
        gx, gy = grad_u(x, y)
        return -lap + bx * gx + by * gy + gamma * u(x, y)

    return ManufacturedProblem(f"patch-m{m}", coefficients, u, grad_u, f)


def variable_patch_problem(m: int) -> ManufacturedProblem:
    """``u = x^m + y^m`` under the benchmark's variable coefficients.

    Polynomial data no longer guarantees exact reproduction here (the
    coefficients are sampled by quadrature), so this only serves loose checks.
    """
    if m < 1:
        raise ValueError("m must be at least 1")

    def u(x, y):
        return x**m + y**m

    def grad_u(x, y):
        return m * x ** (m - 1), m * y ** (m - 1)

    def f(x, y):
        c = m * (m - 1)
        uxx, uyy = c * x ** max(m - 2, 0), c * y ** max(m - 2, 0)
        ux, uy = grad_u(x, y)
        return _bench_operator(x, y, u(x, y), ux, uy, uxx, 0.0 * x, uyy)

    return ManufacturedProblem(f"varpatch-m{m}", _bench_coefficients(), u, grad_u, f)


PROBLEMS = {"benchmark": benchmark_problem}


def get_problem(name: str) -> ManufacturedProblem:
    """Look up ``benchmark``, ``patch-mN`` or ``varpatch-mN``."""
    for prefix, factory in (("patch-m", polynomial_patch_problem), ("varpatch-m", variable_patch_problem)):
        if name.startswith(prefix):
            try:
                return factory(int(name[len(prefix):]))
            except ValueError:
                raise ValueError(f"bad problem name {name!r}") from None
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise ValueError(f"unknown problem {name!r}") from None
