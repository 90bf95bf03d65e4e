"""End-to-end acceptance criteria 1-8.

Each check records a PASS/FAIL line; a summary per criterion is printed at
the end of the session.  Criterion 8 is informational and never fails.
"""
import time
import warnings
from functools import lru_cache

import numpy as np
import pytest

from polyvem.analysis import jump_moments, run_convergence_study, run_patch_test, solve_problem
from polyvem.assembly import assemble, build_dof_map
from polyvem.local import METHODS, NONCONFORMING, local_forms, local_operators
from polyvem.mesh import FAMILIES, mesh_family
from polyvem.problem import benchmark_problem

from acceptance_log import record
from conftest import cached_mesh
from test_mesh import REFERENCE_COUNTS

pytestmark = pytest.mark.acceptance

DEGREES = (1, 2, 3, 4)
LEVELS = (1, 2, 3, 4)


@lru_cache(maxsize=None)
def study(method, k, family, margin=2):
    return run_convergence_study(method, k, family, LEVELS, margin=margin)


def _slopes_ok(rep, k):
    return rep.slope_l2 >= k + 1 - 0.25 and rep.slope_h1 >= k - 0.25


# -- 1 ---------------------------------------------------------------------------


def test_ac1_mesh_counts():
    t0 = time.perf_counter()
    bad = []
    for family in FAMILIES:
        for level in range(1, 6):
            got = mesh_family(family, level).counts
            if got != REFERENCE_COUNTS[family][level - 1]:
                bad.append(f"{family} level {level}: {got}")
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 5.0
    record("AC1", ok, f"15 meshes, {len(bad)} count mismatches, {elapsed:.2f} s")
    assert not bad, bad
    assert elapsed < 5.0


# -- 2 ---------------------------------------------------------------------------


def test_ac2_projectors():
    t0 = time.perf_counter()
    worst = {"pi_star": 0.0, "pi0": 0.0, "grad": 0.0}
    for family in FAMILIES:
        mesh = cached_mesh(family, 2)
        for method in METHODS:
            for k in DEGREES:
                for e in range(mesh.n_elements):
                    ops = local_operators(mesh.element_coords(e), method, k, mesh.elements[e])
                    eye = np.eye(ops.basis.size)
                    dx, dy = ops.basis.grad_coeffs()
                    worst["pi_star"] = max(worst["pi_star"],
                                           float(np.abs(ops.pi_star @ ops.D - eye).max()))
                    worst["pi0"] = max(worst["pi0"], float(np.abs(ops.pi0 @ ops.D - eye).max()))
                    worst["grad"] = max(worst["grad"],
                                        float(np.abs(ops.ex @ ops.D - dx).max()),
                                        float(np.abs(ops.ey @ ops.D - dy).max()))
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) <= 1e-11 and elapsed < 30.0
    record("AC2", ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f", {elapsed:.1f} s")
    assert max(worst.values()) <= 1e-11, worst
    assert elapsed < 30.0


# -- 3 ---------------------------------------------------------------------------


@pytest.mark.parametrize("family, level", [("m1", 2), ("m3", 1)])
def test_ac3_patch(family, level):
    mesh = cached_mesh(family, level)
    t0 = time.perf_counter()
    failures = []
    worst = 0.0
    for method in METHODS:
        for k in DEGREES:
            tol = 1e-10 if k <= 2 else 1e-8
            for m in range(1, k + 1):
                err = run_patch_test(method, k, mesh, m)
                worst = max(worst, err)
                if err > tol:
                    failures.append(f"{method} k={k} m={m}: {err:.2e}")
    elapsed = time.perf_counter() - t0
    record("AC3", not failures and elapsed < 60.0,
           f"{family} level {level}: worst {worst:.1e}, {elapsed:.1f} s")
    assert not failures, failures
    assert elapsed < 60.0


# -- 4 ---------------------------------------------------------------------------


@pytest.mark.slow
@pytest.mark.parametrize("k", DEGREES)
@pytest.mark.parametrize("method", METHODS)
@pytest.mark.parametrize("family", FAMILIES)
def test_ac4_convergence(family, method, k):
    rep = study(method, k, family)
    ok = _slopes_ok(rep, k)
    record("AC4", ok, f"{family} {method} k={k}: L2 slope {rep.slope_l2:.2f} "
           f"(>= {k + 0.75}), H1 slope {rep.slope_h1:.2f} (>= {k - 0.25})")
    assert rep.slope_l2 >= k + 1 - 0.25
    assert rep.slope_h1 >= k - 0.25


# -- 5 ---------------------------------------------------------------------------


def _exact_quadratic_form(v, A) -> int:
    """``v^T A v`` in exact arithmetic, scaled by a power of two."""
    mv, ev = np.frexp(v)
    ma, ea = np.frexp(A)
    iv = [int(x) for x in np.ldexp(mv, 53).astype(np.int64)]
    ia = np.ldexp(ma, 53).astype(np.int64)
    base = int(2 * ev.min() + ea.min())
    total = 0
    n = len(v)
    for i in range(n):
        for j in range(n):
            if ia[i, j]:
                shift = int(ev[i] + ev[j] + ea[i, j]) - base
                total += (iv[i] * int(ia[i, j]) * iv[j]) << shift
    return total


def test_ac5_structure():
    coeffs = benchmark_problem().coefficients
    rng = np.random.default_rng(2024)
    skew_bad = 0
    stab_worst = 0.0
    n_samples = 0
    for family in FAMILIES:
        mesh = cached_mesh(family, 1)
        for e in (0, mesh.n_elements // 2):
            for method in METHODS:
                for k in DEGREES:
                    ops = local_operators(mesh.element_coords(e), method, k, mesh.elements[e])
                    _, a_skew = local_forms(ops, coeffs)
                    skew_bad += not np.array_equal(a_skew, -a_skew.T)
                    for _ in range(100):
                        v = rng.standard_normal(ops.n_dofs)
                        skew_bad += _exact_quadratic_form(v, a_skew) != 0
                    S = np.eye(ops.n_dofs) - ops.f64("pi0_dof")
                    stab_worst = max(stab_worst, float(np.abs(S @ ops.D).max()))
                    n_samples += 1
    lam = {}
    for method in METHODS:
        mesh = cached_mesh("m1", 1)
        dm = build_dof_map(mesh, method, 1)
        A = assemble(mesh, dm, benchmark_problem()).matrix.toarray()
        inner = dm.interior_dofs
        block = A[np.ix_(inner, inner)]
        lam[method] = float(np.linalg.eigvalsh(0.5 * (block + block.T)).min())
    ok = skew_bad == 0 and stab_worst <= 1e-12 and min(lam.values()) > 0
    record("AC5", ok, f"{n_samples} element samples x 100 vectors, skew violations {skew_bad}; "
           f"stabilizer on P_k {stab_worst:.1e}; interior lambda_min "
           + ", ".join(f"{m} {v:.3e}" for m, v in lam.items()))
    assert skew_bad == 0
    assert stab_worst <= 1e-12
    assert min(lam.values()) > 0


# -- 6 ---------------------------------------------------------------------------


@pytest.mark.parametrize("k", DEGREES)
def test_ac6_weak_continuity(k):
    mesh = cached_mesh("m1", 2)
    x, dm, ops, _ = solve_problem(mesh, NONCONFORMING, k, benchmark_problem())
    worst = float(np.abs(jump_moments(mesh, dm, x, ops)).max())
    record("AC6", worst <= 1e-10, f"nonconforming k={k} m1 level 2: max jump moment {worst:.1e}")
    assert worst <= 1e-10


# -- 7 ---------------------------------------------------------------------------


@pytest.mark.slow
@pytest.mark.parametrize("k", [2, 3])
@pytest.mark.parametrize("method", METHODS)
def test_ac7_minimal_quadrature(method, k):
    # margin -2 gives consistency degree exactly 2k - 2
    rep = study(method, k, "m1", margin=-2)
    ok = _slopes_ok(rep, k)
    record("AC7", ok, f"m1 {method} k={k} degree {2 * k - 2}: L2 slope {rep.slope_l2:.2f}, "
           f"H1 slope {rep.slope_h1:.2f}")
    assert rep.slope_l2 >= k + 1 - 0.25
    assert rep.slope_h1 >= k - 0.25


# -- 8 ---------------------------------------------------------------------------


@pytest.mark.slow
@pytest.mark.parametrize("family", FAMILIES)
def test_ac8_method_comparability(family):
    outside = []
    ratios = []
    for k in DEGREES:
        conf, nonc = study(METHODS[0], k, family), study(METHODS[1], k, family)
        for rc, rn in zip(conf.records, nonc.records):
            for name in ("rel_l2", "rel_h1"):
                r = getattr(rc, name) / getattr(rn, name)
                ratios.append(r)
                if not 1 / 5 <= r <= 5:
                    outside.append(f"k={k} level {rc.level} {name} ratio {r:.2f}")
    record("AC8", not outside, f"{family}: conforming/nonconforming ratios in "
           f"[{min(ratios):.2f}, {max(ratios):.2f}] (informational)")
    if outside:
        warnings.warn(f"{family}: ratios outside [1/5, 5]: {outside}", UserWarning)
