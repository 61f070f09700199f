"""Acceptance criteria, one test each, at the stated tolerances.

Every test prints a single ``ACCEPTANCE <n> PASS|FAIL: ...`` line (visible
with or without ``-s``) before asserting.
"""
import time

import numpy as np
import pytest

from mogibem import asymptotics as asy
from mogibem import kernels, layers, validation
from mogibem.layers import PanelRule
from mogibem.mesh import icosphere, place_cavity
from mogibem.moduli import moduli_from_poisson
from mogibem.solver import solve_trace, surface_displacement, surface_grid

NU025 = moduli_from_poisson(0.25, 1.0)


@pytest.fixture
def report(capsys):
    def emit(number, ok, text):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number} {'PASS' if ok else 'FAIL'}: {text}")
        return ok
    return emit


def _mogi_gap(level, eps, points):
    z = np.array([0.0, 0.0, -1.0])
    t0 = time.perf_counter()
    cav = place_cavity(icosphere(level), eps, z)
    rule = PanelRule(cav)
    f = solve_trace(cav, NU025, 1.0, rule)
    u = surface_displacement(cav, NU025, 1.0, f, points, rule)
    dt = time.perf_counter() - t0
    ref = asy.mogi(z, eps, 1.0, NU025, points)
    return float(np.abs(u - ref).max() / np.abs(ref).max()), dt


def test_1_mogi_recovery(report):
    pts = surface_grid((0.0, 0.0), 5.0, 21, 21)
    gap, dt = _mogi_gap(3, 0.05, pts)
    gap_half, _ = _mogi_gap(3, 0.025, pts)
    ratio = gap / gap_half
    ok_gap, ok_time, ok_ratio = gap <= 0.05, dt <= 60.0, 1.5 <= ratio <= 2.5
    report(1, ok_gap and ok_time and ok_ratio,
           f"sup gap {gap:.3%} (<= 5%: {ok_gap}), runtime {dt:.1f} s (<= 60 s: {ok_time}), "
           f"gap(0.05)/gap(0.025) = {ratio:.3f} (~2x: {ok_ratio})")
    assert ok_gap and ok_time
    assert ok_ratio, f"halving epsilon changed the gap by {ratio:.3f}x, expected about 2x"


def test_2_sphere_moment_tensor(report):
    exact = asy.sphere_MI(NU025)
    errs = {k: float(np.abs(asy.moment_tensor(icosphere(k), NU025).MI - exact).max() / exact[0, 0])
            for k in (2, 3, 4)}
    ok = errs[3] <= 0.02 and errs[2] > errs[3] > errs[4]
    report(2, ok, "relative error of M I by level: "
           + ", ".join(f"{k}: {e:.3%}" for k, e in errs.items()))
    assert ok


def test_3_surface_trace_identities(report):
    res = validation.check_surface_trace(NU025, seed=30, n=100)
    report(3, res.passed, f"max relative error {res.error:.2e} over 100 pairs (tol 1e-6)")
    assert res.passed


def test_4_traction_free_surface(report):
    res = validation.check_traction_free(NU025, seed=40, n=100)
    report(4, res.passed, f"max |dN/dnu| / |grad N| = {res.error:.2e} over 100 points (tol 1e-6)")
    assert res.passed


def test_5_unit_depth_scaling(report):
    res = validation.check_unit_depth_scaling(NU025, seed=50, n=100)
    report(5, res.passed, f"max relative difference {res.error:.2e} over 100 pairs (tol 1e-12)")
    assert res.passed


def test_6_jump_relations(report):
    mesh = icosphere(3)
    rule = PanelRule(mesh)
    kmat = layers.assemble_K(mesh, NU025, rule)
    probes = layers.jump_probe(mesh, NU025, validation.smooth_densities(mesh), deltas=(1e-2, 1e-3),
                               kmat=kmat, rule=rule)
    worst = {name: max(max(p.outside_error, p.inside_error) for p in pr)
             for name, pr in zip(("constant", "zeta", "polynomial"), probes)}
    ok = max(worst.values()) <= 0.02
    report(6, ok, "level 3, worst relative jump error: "
           + ", ".join(f"{k} {v:.2e}" for k, v in worst.items()) + " (tol 2%)")
    assert ok


def test_7_kernel_correctness(report):
    grad = validation.check_kelvin_gradient(NU025, seed=70)
    eq = validation.check_equilibrium(NU025, seed=71)
    sn, sg = validation.decay_slopes(NU025)
    ok_slopes = abs(sn + 1) <= 0.05 and abs(sg + 2) <= 0.05
    ok = grad.passed and eq.passed and ok_slopes
    report(7, ok, f"grad FD {grad.error:.1e} (<= 1e-8), equilibrium {eq.error:.1e} (<= 1e-5), "
           f"slopes |N| {sn:.4f}, |grad N| {sg:.4f} (+-0.05)")
    assert ok
