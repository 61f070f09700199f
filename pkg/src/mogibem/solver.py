"""Trace equation for a pressurised cavity and the surface displacement it produces.

The unknown is the displacement trace ``f`` on the cavity wall, found from

    (1/2 I + K + D^R) f = p (S n + S^R n)

by dense LU. The field anywhere outside the cavity then follows from the
representation ``u = p S[n] - D[f] + p S^R[n] - D^R[f]``.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from . import layers
from .errors import PointInsideCavity, SingularSystem
from .layers import DenseOperator, PanelRule
from .mesh import TriangleMesh, contains, mesh_validate
from .moduli import ElasticModuli

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-13
_KEEP_COPY_BYTES = 1 << 30  # keep an unfactored copy for the residual below this size


@dataclass(frozen=True, eq=False)
class BoundaryField:
    """One 3-vector per panel of ``mesh``."""

    values: np.ndarray
    mesh: TriangleMesh
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.mesh.n_faces, 3):
            raise ValueError(f"expected ({self.mesh.n_faces}, 3) values, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("boundary field has non-finite entries")
        object.__setattr__(self, "values", v)


def factorize(matrix: np.ndarray):
    """LU factorisation in place; raises :class:`SingularSystem` on a tiny pivot."""
    scale = float(np.abs(matrix).max())
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)   # reported below as SingularSystem
        lu, piv = lu_factor(matrix, overwrite_a=True, check_finite=False)
    pivot = float(np.abs(np.diag(lu)).min())
    if not np.isfinite(pivot) or pivot <= PIVOT_TOL * scale:
        raise SingularSystem(f"pivot {pivot:.3e} below {PIVOT_TOL:g} x |A| = {PIVOT_TOL * scale:.3e}")
    return lu, piv


def assemble_trace_system(mesh: TriangleMesh, moduli: ElasticModuli, rule: PanelRule | None = None
                          ) -> DenseOperator:
    """Matrix ``1/2 I + K + D^R`` and the unit-pressure right-hand side ``S n + S^R n``."""
    mesh_validate(mesh)
    rule = rule or PanelRule(mesh)
    mat = layers.assemble_K(mesh, moduli, rule)
    layers.add_regular_double_layer(mat, mesh, moduli, rule)
    mat[np.diag_indices_from(mat)] += 0.5
    normals = np.asarray(mesh.normals)
    dens = np.stack([normals, normals])
    sn = layers.apply_on_boundary("S", mesh, moduli, dens[:1], rule)[0]
    srn = layers.apply_on_boundary("SR", mesh, moduli, dens[1:], rule)[0]
    return DenseOperator(matrix=mat, rhs=(sn + srn).ravel(), n=mesh.n_faces)


def solve_trace(mesh: TriangleMesh, moduli: ElasticModuli, pressure: float,
                rule: PanelRule | None = None) -> BoundaryField:
    """Displacement trace ``f`` on the cavity wall for uniform load ``pressure``.

    The system is solved for unit load and scaled, so ``f`` is exactly
    linear in ``pressure``. ``info`` carries the relative residual.
    """
    pressure = float(pressure)
    if not np.isfinite(pressure):
        raise ValueError("pressure must be finite")
    op = assemble_trace_system(mesh, moduli, rule)
    keep = op.matrix.copy(order="F") if op.matrix.nbytes <= _KEEP_COPY_BYTES else None
    lu = factorize(op.matrix)
    x = lu_solve(lu, op.rhs, check_finite=False)
    residual = float("nan")
    if keep is not None:
        residual = float(np.linalg.norm(keep @ x - op.rhs) / np.linalg.norm(op.rhs))
    log.debug("trace solve: %d panels, relative residual %.3e", mesh.n_faces, residual)
    return BoundaryField(pressure * x.reshape(-1, 3), mesh, {"residual": residual})


def _as_points(points) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] == 2:
        pts = np.column_stack([pts, np.zeros(len(pts))])
    if pts.shape[1] != 3:
        raise ValueError("points must be (M, 2) surface coordinates or (M, 3) positions")
    return pts


def surface_displacement(mesh: TriangleMesh, moduli: ElasticModuli, pressure: float, f,
                         points, rule: PanelRule | None = None) -> np.ndarray:
    """Displacement ``(M, 3)`` at ``points`` from the representation formula.

    ``points`` are ``(M, 2)`` surface coordinates (x3 = 0) or ``(M, 3)``
    positions anywhere in the half-space outside the cavity.
    """
    rule = rule or PanelRule(mesh)
    pts = _as_points(points)
    if np.any(contains(mesh, pts)):
        raise PointInsideCavity("observation point lies inside the cavity")
    fv = f.values if isinstance(f, BoundaryField) else np.asarray(f, dtype=float).reshape(-1, 3)
    n = np.asarray(mesh.normals)
    p = float(pressure)
    u = p * layers.eval_potential("SΓ", pts, mesh, n, moduli, rule)
    u -= layers.eval_potential("DΓ", pts, mesh, fv, moduli, rule)
    u += p * layers.eval_potential("SR", pts, mesh, n, moduli, rule)
    u -= layers.eval_potential("DR", pts, mesh, fv, moduli, rule)
    return u


@dataclass(frozen=True)
class ConvergenceRow:
    epsilon: float
    gap: float            # sup |u_bem - u_leading|
    relative_gap: float   # gap / sup |u_leading|
    consistent_gap: float  # same, against the point source built from the solved trace
    ratio: float          # relative_gap(previous eps) / relative_gap(this eps)
    consistent_ratio: float


@dataclass(frozen=True)
class ConvergenceReport:
    rows: tuple
    reference: str

    def lines(self) -> list[str]:
        out = [f"leading term: {self.reference}",
               f"{'epsilon':>10} {'sup gap':>14} {'rel gap':>12} {'rel/eps':>10} {'ratio':>8}"
               f" {'consistent':>12} {'ratio':>8}"]
        for r in self.rows:
            out.append(f"{r.epsilon:>10.4g} {r.gap:>14.6e} {r.relative_gap:>12.4e} "
                       f"{r.relative_gap / r.epsilon:>10.4f} {r.ratio:>8.3f} "
                       f"{r.consistent_gap:>12.4e} {r.consistent_ratio:>8.3f}")
        return out

    def monotone(self) -> bool:
        g = [r.relative_gap for r in self.rows]
        return all(b < a for a, b in zip(g, g[1:]))


def surface_grid(center, extent: float, nx: int = 21, ny: int = 21) -> np.ndarray:
    """(nx * ny, 2) grid centred at ``center`` spanning +-extent; y1 varies slowest."""
    g1 = np.linspace(center[0] - extent, center[0] + extent, nx)
    g2 = np.linspace(center[1] - extent, center[1] + extent, ny)
    return np.array([(a, b) for a in g1 for b in g2])


def convergence_report(shape: TriangleMesh, epsilons, moduli: ElasticModuli, pressure: float = 1.0,
                       z=(0.0, 0.0, -1.0), points=None, leading=None) -> ConvergenceReport:
    """Gap between the full solve and the leading-order point source for each epsilon.

    ``leading`` selects the point-source tensor: ``None`` computes the moment
    tensor of ``shape`` by the exterior solves, ``"sphere"`` uses the closed
    form (Mogi). ``points`` defaults to the 21 x 21 grid over +-5 |z3|.
    The extra column compares with the source built from each solved trace,
    which removes the shared discretisation error and isolates the
    Taylor remainder of the expansion.
    """
    from . import asymptotics as asy
    from .mesh import place_cavity

    eps = [float(e) for e in epsilons]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilons must be strictly decreasing")
    z = np.asarray(z, dtype=float)
    if points is None:
        points = surface_grid(z[:2], 5.0 * abs(z[2]))
    if leading == "sphere":
        mi, vol, ref = asy.sphere_MI(moduli), asy.SPHERE_VOLUME, "closed-form sphere (Mogi)"
    else:
        mt = asy.moment_tensor(shape, moduli)
        mi, vol, ref = mt.MI, mt.volume, "moment tensor of the shape mesh"
    unit = asy.source_displacement(z, vol * mi, moduli, points)
    rows = []
    prev = prev_c = None
    for e in eps:
        cav = place_cavity(shape, e, z)
        rule = PanelRule(cav)
        f = solve_trace(cav, moduli, pressure, rule)
        u = surface_displacement(cav, moduli, pressure, f, points, rule)
        lead = e ** 3 * pressure * unit
        scale = np.abs(lead).max()
        gap = float(np.abs(u - lead).max())
        cons = asy.source_displacement(z, asy.trace_moment(cav, moduli, pressure, f), moduli, points)
        rel = gap / scale
        rel_c = float(np.abs(u - cons).max() / scale)
        rows.append(ConvergenceRow(e, gap, rel, rel_c,
                                   float("nan") if prev is None else prev / rel,
                                   float("nan") if prev_c is None else prev_c / rel_c))
        prev, prev_c = rel, rel_c
    return ConvergenceReport(tuple(rows), ref)
