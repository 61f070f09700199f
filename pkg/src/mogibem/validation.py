"""Self-checks of the kernels, layer operators, trace solve and moment tensor.

Each check returns a :class:`CheckResult` holding the measured error, its
tolerance and a pass flag; :func:`run_all` collects them into a
:class:`ValidationReport` (used by ``mogibem validate``).
"""
from __future__ import annotations

import contextlib
import time
from dataclasses import dataclass, field

import numpy as np

from . import asymptotics as asy
from . import kernels, layers
from .layers import PanelRule
from .mesh import icosphere, place_cavity
from .moduli import ElasticModuli, moduli_from_poisson
from .solver import convergence_report, solve_trace, surface_displacement, surface_grid


@dataclass(frozen=True)
class CheckResult:
    name: str
    error: float
    tolerance: float
    detail: str = ""
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.error) and self.error <= self.tolerance)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"[{tag}] {self.name}: error {self.error:.3e} <= {self.tolerance:.1e}?{extra}"


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple
    tables: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        out = [c.line() for c in self.checks]
        for title, rows in self.tables.items():
            out += ["", title] + ["  " + r for r in rows]
        out += ["", "all checks passed" if self.passed else "SOME CHECKS FAILED"]
        return out


@contextlib.contextmanager
def injected_fault(name: str | None):
    """Temporarily corrupt a kernel term; ``"r2-sign"`` flips the R2 term."""
    if name is None:
        yield
        return
    if name != "r2-sign":
        raise ValueError(f"unknown fault {name!r}")
    old = kernels._fault["r2_sign"]
    kernels._fault["r2_sign"] = -old
    try:
        yield
    finally:
        kernels._fault["r2_sign"] = old


def _rel(a, b) -> float:
    return float(np.abs(a - b).max() / np.abs(b).max())


def random_pairs(rng: np.random.Generator, n: int, surface_x: bool = False):
    """``n`` random (x, y) with y3 < 0 and x3 <= 0 (x3 = 0 when ``surface_x``)."""
    y = np.column_stack([rng.uniform(-2, 2, (n, 2)), -rng.uniform(0.2, 3.0, n)])
    x = np.column_stack([rng.uniform(-3, 3, (n, 2)),
                         np.zeros(n) if surface_x else -rng.uniform(0.0, 3.0, n)])
    return x, y


def check_kelvin_gradient(moduli: ElasticModuli, seed: int = 0, n: int = 100) -> CheckResult:
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 3))
    h = 1e-5
    g = np.stack([(kernels.kelvin(x + h * e, moduli) - kernels.kelvin(x - h * e, moduli)) / (2 * h)
                  for e in np.eye(3)], axis=-1)
    exact = kernels.kelvin_grad(x, moduli)
    err = float(np.max(np.abs(g - exact).max(axis=(1, 2, 3)) / np.abs(exact).max(axis=(1, 2, 3))))
    return CheckResult("Kelvin gradient vs central differences", err, 1e-8, f"{n} random points")


def equilibrium_residual(grad_fn, x, moduli: ElasticModuli, h: float = 1e-4) -> np.ndarray:
    """Relative residual of div C grad applied to the columns of a kernel.

    ``grad_fn(x)`` returns ``[..., i, k, l] = d_l G_ik``. With
    ``H_j = d_j grad_fn`` by central differences, column k satisfies
    ``div C grad G_k = (lam + mu) grad(div G_k) + mu lap G_k``. Each point's
    residual is divided by ``(lam + 2 mu) max |H|``.
    """
    x = np.asarray(x, dtype=float)
    lam, mu = moduli.lam, moduli.mu
    div = np.zeros(x.shape[:-1] + (3, 3))
    size = np.zeros(x.shape[:-1])
    for j in range(3):
        e = h * np.eye(3)[j]
        hj = (grad_fn(x + e) - grad_fn(x - e)) / (2 * h)        # [.., i, k, l] = d_j d_l G_ik
        div[..., j, :] += (lam + mu) * np.einsum("...mkm->...k", hj)
        div += mu * hj[..., :, :, j]
        size = np.maximum(size, np.abs(hj).max(axis=(-1, -2, -3)))
    return np.abs(div).max(axis=(-1, -2)) / (size * (lam + 2 * mu))


def check_equilibrium(moduli: ElasticModuli, seed: int = 4, n: int = 100) -> CheckResult:
    rng = np.random.default_rng(seed)
    x, y = random_pairs(rng, n)
    x[:, 2] -= 0.1                                   # keep the difference stencil in the half-space
    far = np.linalg.norm(x - y, axis=1) > 0.3
    x, y = x[far], y[far]
    rg = equilibrium_residual(lambda p: kernels.kelvin_grad(p - y, moduli), x, moduli)
    rn = equilibrium_residual(lambda p: kernels.neumann_grad(p, y, moduli), x, moduli)
    err = float(max(rg.max(), rn.max()))
    return CheckResult("equilibrium of Gamma and N columns", err, 1e-5,
                       f"{len(x)} points, Gamma {rg.max():.1e}, N {rn.max():.1e}")


def decay_slopes(moduli: ElasticModuli, direction=(0.6, 0.3, -0.74), pole=(0.2, -0.1, -0.8),
                 radii=np.geomspace(1e2, 1e4, 9)):
    """Log-log slopes of |N| and |grad N| along a ray to infinity."""
    d = np.asarray(direction, dtype=float)
    d /= np.linalg.norm(d)
    x = radii[:, None] * d
    y = np.broadcast_to(np.asarray(pole, dtype=float), x.shape)
    nv = np.abs(kernels.neumann(x, y, moduli)).max(axis=(1, 2))
    gv = np.abs(kernels.neumann_grad(x, y, moduli)).max(axis=(1, 2, 3))
    lr = np.log(radii)
    return float(np.polyfit(lr, np.log(nv), 1)[0]), float(np.polyfit(lr, np.log(gv), 1)[0])


def check_decay(moduli: ElasticModuli) -> CheckResult:
    sn, sg = decay_slopes(moduli)
    err = max(abs(sn + 1.0), abs(sg + 2.0))
    return CheckResult("far-field decay slopes of N, grad N", err, 0.05, f"slopes {sn:.4f}, {sg:.4f}")


def check_traction_free(moduli: ElasticModuli, seed: int = 1, n: int = 100) -> CheckResult:
    """Conormal derivative of N on x3 = 0 relative to the local gradient size."""
    rng = np.random.default_rng(seed)
    x, y = random_pairs(rng, n, surface_x=True)
    t = kernels.neumann_traction(x, np.array([0.0, 0.0, 1.0]), y, moduli)
    scale = np.abs(kernels.neumann_grad(x, y, moduli)).max(axis=(1, 2, 3))
    err = float(np.max(np.abs(t).max(axis=(1, 2)) / scale))
    return CheckResult("traction-free surface of N", err, 1e-6, f"{n} random surface points")


def check_unit_depth_scaling(moduli: ElasticModuli, seed: int = 2, n: int = 100) -> CheckResult:
    rng = np.random.default_rng(seed)
    x, y = random_pairs(rng, n)
    a = kernels.neumann(x, y, moduli)
    b = kernels.neumann_via_unit_depth(x, y, moduli)
    err = float(np.max(np.abs(a - b).max(axis=(1, 2)) / np.abs(a).max(axis=(1, 2))))
    return CheckResult("unit-depth scaling of N", err, 1e-12, f"{n} random pairs")


def check_surface_trace(moduli: ElasticModuli, seed: int = 3, n: int = 100) -> CheckResult:
    rng = np.random.default_rng(seed)
    y, z = random_pairs(rng, n, surface_x=True)
    g = asy.grad_N_surface(z, y, moduli)
    tr = np.trace(g, axis1=-2, axis2=-1)
    exact = asy.surface_trace_formula(z, y, moduli)
    err = float(np.max(np.abs(tr - exact).max(axis=1) / np.abs(exact).max(axis=1)))
    return CheckResult("surface trace of sym grad_z N", err, 1e-6, f"{n} random pairs")


def smooth_densities(mesh) -> np.ndarray:
    """Constant, unit-normal-like and quadratic test densities: (3, N, 3)."""
    c = mesh.centroids
    const = np.tile([1.0, -0.5, 0.25], (mesh.n_faces, 1))
    zeta = c / np.linalg.norm(c, axis=1, keepdims=True)
    poly = np.column_stack([c[:, 0] * c[:, 1], c[:, 2] ** 2 - 0.3, c[:, 0] + 0.5 * c[:, 1] * c[:, 2]])
    return np.stack([const, zeta, poly])


def check_jump_relations(moduli: ElasticModuli, level: int = 2, delta: float = 1e-3) -> list[CheckResult]:
    mesh = icosphere(level)
    probes = layers.jump_probe(mesh, moduli, smooth_densities(mesh), deltas=(delta,))
    out = []
    for name, pr in zip(("constant", "zeta", "polynomial"), probes):
        err = max(pr[0].outside_error, pr[0].inside_error)
        out.append(CheckResult(f"jump relation, {name} density", err, 2e-2,
                               f"level {level}, delta {delta:g} h, "
                               f"out {pr[0].outside_error:.2e} / in {pr[0].inside_error:.2e}"))
    return out


def check_mogi(moduli: ElasticModuli, level: int = 3, epsilon: float = 0.05) -> CheckResult:
    z = np.array([0.0, 0.0, -1.0])
    cav = place_cavity(icosphere(level), epsilon, z)
    rule = PanelRule(cav)
    f = solve_trace(cav, moduli, 1.0, rule)
    pts = surface_grid(z[:2], 5.0)
    u = surface_displacement(cav, moduli, 1.0, f, pts, rule)
    ref = asy.mogi(z, epsilon, 1.0, moduli, pts)
    return CheckResult("full solve vs Mogi", _rel(u, ref), 5e-2,
                       f"level {level}, eps {epsilon:g}, 21x21 grid, residual {f.info['residual']:.1e}")


def check_sphere_moment(moduli: ElasticModuli, level: int = 3) -> CheckResult:
    mt = asy.moment_tensor(icosphere(level), moduli)
    exact = asy.sphere_MI(moduli)
    return CheckResult("sphere moment tensor M I", _rel(mt.MI, exact), 2e-2,
                       f"level {level}, diag {np.diag(mt.MI).mean():.5f} vs {exact[0, 0]:.5f}")


def run_all(moduli: ElasticModuli | None = None, fault: str | None = None, level: int = 3,
            jump_level: int = 2, convergence_level: int = 2,
            epsilons=(0.2, 0.1, 0.05), progress=None) -> ValidationReport:
    """Run every check (and the convergence table) under an optional injected fault."""
    moduli = moduli or moduli_from_poisson(0.25, 1.0)
    checks, tables = [], {}

    def timed(fn, *args, **kw):
        t0 = time.perf_counter()
        res = fn(*args, **kw)
        dt = time.perf_counter() - t0
        res = res if isinstance(res, list) else [res]
        res = [CheckResult(r.name, r.error, r.tolerance, r.detail, dt) for r in res]
        for r in res:
            checks.append(r)
            if progress:
                progress(r.line())

    with injected_fault(fault):
        timed(check_kelvin_gradient, moduli)
        timed(check_equilibrium, moduli)
        timed(check_decay, moduli)
        timed(check_traction_free, moduli)
        timed(check_unit_depth_scaling, moduli)
        timed(check_surface_trace, moduli)
        timed(check_jump_relations, moduli, jump_level)
        timed(check_mogi, moduli, level)
        timed(check_sphere_moment, moduli, level)
        if epsilons:
            rep = convergence_report(icosphere(convergence_level), epsilons, moduli)
            tables[f"convergence (level {convergence_level})"] = rep.lines()
            gaps = [r.consistent_gap for r in rep.rows]
            worst = max((b / a for a, b in zip(gaps, gaps[1:])), default=0.0)
            checks.append(CheckResult("convergence to the trace-consistent point source", worst, 1.0,
                                      "largest ratio of successive gaps"))
            if progress:
                progress(checks[-1].line())
    return ValidationReport(tuple(checks), tables)
