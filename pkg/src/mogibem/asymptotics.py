"""Leading-order point-source engine for small cavities.

For a cavity ``z + eps * Omega`` the surface field is, to leading order,

    u^k(y) = eps^3 |Omega| p  sym grad_z N^(k)(z, y) : (M I)

where ``M`` is the elastic moment tensor of the shape ``Omega``. ``M`` is
built from nine exterior traction problems theta^qr, solved here with a
single-layer ansatz. The Mogi closed form is the special case of a sphere.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_solve

from . import kernels, layers
from .errors import InvalidHalfSpacePoint, MeshMismatch
from .layers import PanelRule
from .mesh import TriangleMesh, mesh_validate
from .moduli import ElasticModuli
from .solver import BoundaryField, factorize

_EYE = np.eye(3)
_SYM4 = 0.5 * (np.einsum("iq,jr->ijqr", _EYE, _EYE) + np.einsum("ir,jq->ijqr", _EYE, _EYE))
_PAIRS = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)]
SOURCE_RATIO_WARN = 0.3
FD_STEP = 1e-3


def theta_load(normals: np.ndarray, moduli: ElasticModuli) -> np.ndarray:
    """Boundary tractions ``g^qr = -C(e_q (x) e_r) n / (3 lam + 2 mu)``: (3, 3, N, 3)."""
    n = np.asarray(normals, dtype=float)
    lam, mu = moduli.lam, moduli.mu
    g = (lam * np.einsum("qr,ni->qrni", _EYE, n)
         + mu * (np.einsum("iq,nr->qrni", _EYE, n) + np.einsum("ir,nq->qrni", _EYE, n)))
    return -g / moduli.bulk_like


@dataclass(frozen=True, eq=False)
class ThetaTraces:
    """Boundary traces ``values[q, r]`` (each ``(N, 3)``) of theta^qr on a shape mesh."""

    values: np.ndarray
    mesh: TriangleMesh

    def field(self, q: int, r: int) -> BoundaryField:
        return BoundaryField(self.values[q, r], self.mesh)

    @property
    def w(self) -> np.ndarray:
        """sum_q theta^qq: trace of the exterior field loaded by ``-n``."""
        return self.values[0, 0] + self.values[1, 1] + self.values[2, 2]


def solve_theta(mesh: TriangleMesh, moduli: ElasticModuli, rule: PanelRule | None = None) -> ThetaTraces:
    """Solve the nine exterior problems div C sym grad theta = 0 outside the
    shape, C sym grad theta n = g^qr on its boundary, theta -> 0 at infinity.

    theta = S[psi] with (1/2 I + K*) psi = g, then the trace S[psi] is
    returned. Only the six q <= r problems are solved; theta^rq = theta^qr.
    """
    mesh_validate(mesh)
    rule = rule or PanelRule(mesh)
    mat = layers.assemble_K_adjoint(mesh, moduli, rule)
    mat[np.diag_indices_from(mat)] += 0.5
    lu = factorize(mat)
    del mat
    g = theta_load(mesh.normals, moduli)
    rhs = np.stack([g[q, r].ravel() for q, r in _PAIRS], axis=1)
    psi = lu_solve(lu, rhs, check_finite=False)
    del lu
    psi = np.ascontiguousarray(psi.T.reshape(len(_PAIRS), mesh.n_faces, 3))
    traces = layers.apply_on_boundary("S", mesh, moduli, psi, rule)
    out = np.empty((3, 3, mesh.n_faces, 3))
    for s, (q, r) in enumerate(_PAIRS):
        out[q, r] = traces[s]
        out[r, q] = traces[s]
    return ThetaTraces(out, mesh)


@dataclass(frozen=True, eq=False)
class MomentTensor:
    """Fourth-order tensor ``M[i, j, q, r]`` of a shape with volume ``volume``."""

    components: np.ndarray
    volume: float

    def __post_init__(self):
        c = np.array(self.components, dtype=float)
        if c.shape != (3, 3, 3, 3):
            raise ValueError("moment tensor must be 3x3x3x3")
        c.setflags(write=False)
        object.__setattr__(self, "components", c)

    @property
    def MI(self) -> np.ndarray:
        """Contraction with the identity in the second pair: (M I)_ij = M_ijqq."""
        return np.einsum("ijqq->ij", self.components)

    def minor_symmetry_defect(self) -> float:
        c = self.components
        return float(np.abs(c - c.transpose(1, 0, 2, 3)).max() / np.abs(c).max())

    def lines(self) -> list[str]:
        mi = self.MI
        rows = ["M I ="] + ["  " + "  ".join(f"{v: .10f}" for v in row) for row in mi]
        rows.append(f"minor symmetry defect (ij) {self.minor_symmetry_defect():.3e}")
        rows.append("M[i, j, q, r]:")
        for i in range(3):
            for j in range(3):
                rows.append(f"  ij={i + 1}{j + 1}  " + "  ".join(
                    f"{self.components[i, j, q, r]: .8f}" for q in range(3) for r in range(3)))
        return rows


def moment_tensor(mesh: TriangleMesh, moduli: ElasticModuli, theta: ThetaTraces | None = None) -> MomentTensor:
    """M = I_sym + (1/|Omega|) sum_panels area * C(theta^qr (x) n).

    ``theta`` defaults to :func:`solve_theta` on ``mesh``; ``|Omega|`` is the
    mesh volume, so the result is consistent with the discrete geometry.
    """
    if theta is None:
        theta = solve_theta(mesh, moduli)
    vals = np.asarray(theta.values if isinstance(theta, ThetaTraces) else theta, dtype=float)
    if vals.shape != (3, 3, mesh.n_faces, 3):
        raise MeshMismatch(f"theta traces have shape {vals.shape}, mesh has {mesh.n_faces} faces")
    a, n = mesh.areas, mesh.normals
    vol = mesh.volume
    tn = np.einsum("p,qrpi,pi->qr", a, vals, n)                 # sum a theta.n
    outer = np.einsum("p,qrpi,pj->ijqr", a, vals, n)            # sum a theta_i n_j
    comp = (moduli.lam * np.einsum("ij,qr->ijqr", _EYE, tn)
            + moduli.mu * (outer + outer.transpose(1, 0, 2, 3)))
    return MomentTensor(_SYM4 + comp / vol, vol)


def sphere_MI(moduli: ElasticModuli) -> np.ndarray:
    """Closed-form (M I) of the unit ball: 3 (lam + 2 mu) / (4 mu) I."""
    return 3.0 * (moduli.lam + 2.0 * moduli.mu) / (4.0 * moduli.mu) * _EYE


SPHERE_VOLUME = 4.0 * math.pi / 3.0


def grad_N_surface(z, y, moduli: ElasticModuli, step: float | None = None) -> np.ndarray:
    """Symmetrised z-gradients of the Neumann columns at a surface point.

    Returns ``G[k, i, j] = 1/2 (d_{z_j} N_ik(z, y) + d_{z_i} N_jk(z, y))`` by
    fourth-order central differences in ``z`` with step ``1e-3 |z3|`` (the
    balance point between the h^4 truncation and eps/h rounding errors).
    ``z`` and ``y`` broadcast; ``y`` must satisfy ``y3 = 0``.
    """
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.shape[-1] == 2:
        y = np.concatenate([y, np.zeros(y.shape[:-1] + (1,))], axis=-1)
    if np.any(z[..., 2] >= 0.0):
        raise InvalidHalfSpacePoint("source must satisfy z3 < 0")
    if np.any(y[..., 2] != 0.0):
        raise InvalidHalfSpacePoint("observation points must lie on x3 = 0")
    h = step if step is not None else FD_STEP * np.abs(z[..., 2])
    h = np.asarray(h, dtype=float)[..., None]
    shape = np.broadcast_shapes(z.shape, y.shape)[:-1]
    grad = np.empty(shape + (3, 3, 3))  # [i, k, l] = d_l N_ik
    for l in range(3):
        e = _EYE[l]

        def nz(t):
            return kernels.neumann(z + t * h * e, y, moduli)

        grad[..., l] = (8.0 * (nz(1.0) - nz(-1.0)) - (nz(2.0) - nz(-2.0))) / (12.0 * h[..., None])
    g = np.moveaxis(grad, -2, -3)  # [k, i, l] = d_l N_ik
    return 0.5 * (g + np.swapaxes(g, -1, -2))


def surface_trace_formula(z, y, moduli: ElasticModuli) -> np.ndarray:
    """Closed-form Tr(sym grad_z N^(k)) at surface points: (..., 3)."""
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.shape[-1] == 2:
        y = np.concatenate([y, np.zeros(y.shape[:-1] + (1,))], axis=-1)
    f = 1.0 / np.linalg.norm(z - y, axis=-1)
    c = 2.0 * moduli.kmu * (1.0 - 2.0 * moduli.nu) * f ** 3
    return np.stack([c * (z[..., 0] - y[..., 0]), c * (z[..., 1] - y[..., 1]), c * z[..., 2]], axis=-1)


def _surface_points(points) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] == 3:
        if np.any(pts[:, 2] != 0.0):
            raise InvalidHalfSpacePoint("observation points must lie on x3 = 0")
        pts = pts[:, :2]
    return pts


def point_source_displacement(z, epsilon: float, pressure: float, moment, moduli: ElasticModuli,
                              points, shape_diameter: float = 2.0) -> np.ndarray:
    """Leading-order surface field ``(M, 3)`` of a small cavity.

    ``moment`` is a :class:`MomentTensor`, or a shape mesh (its moment tensor
    is computed), or a pair ``(MI, volume)``. Warns when
    ``epsilon * shape_diameter / |z3|`` exceeds 0.3.
    """
    z = np.asarray(z, dtype=float).reshape(3)
    if z[2] >= 0.0:
        raise InvalidHalfSpacePoint("source must satisfy z3 < 0")
    if isinstance(moment, TriangleMesh):
        shape_diameter = moment.scale
        moment = moment_tensor(moment, moduli)
    if isinstance(moment, MomentTensor):
        mi, vol = moment.MI, moment.volume
    else:
        mi, vol = np.asarray(moment[0], dtype=float), float(moment[1])
    ratio = epsilon * shape_diameter / abs(z[2])
    if ratio > SOURCE_RATIO_WARN:
        warnings.warn(f"cavity size / depth = {ratio:.3g} > {SOURCE_RATIO_WARN}: "
                      "leading-order term may be inaccurate", RuntimeWarning, stacklevel=2)
    y = _surface_points(points)
    g = grad_N_surface(z, y, moduli)
    return epsilon ** 3 * vol * pressure * np.einsum("mkij,ij->mk", g, mi)


def mogi(z, epsilon: float, pressure: float, moduli: ElasticModuli, points) -> np.ndarray:
    """Closed-form Mogi field ``(1 - nu)/mu eps^3 p (z - y)/|z - y|^3`` (M, 3)."""
    z = np.asarray(z, dtype=float).reshape(3)
    if z[2] >= 0.0:
        raise InvalidHalfSpacePoint("source must satisfy z3 < 0")
    y = _surface_points(points)
    d = np.column_stack([z[0] - y[:, 0], z[1] - y[:, 1], np.full(len(y), z[2])])
    r3 = np.linalg.norm(d, axis=1) ** 3
    return (1.0 - moduli.nu) / moduli.mu * epsilon ** 3 * pressure * d / r3[:, None]


def trace_moment(mesh: TriangleMesh, moduli: ElasticModuli, pressure: float, f) -> np.ndarray:
    """Second-order source tensor of a solved cavity, ``p |C| I - C sym(sum a f (x) n)``.

    Contracting it with sym grad_z N^(k) gives the first Taylor term of the
    representation formula about the cavity centre, i.e. the point source
    that is consistent with the discrete trace ``f`` (3, 3).
    """
    fv = f.values if isinstance(f, BoundaryField) else np.asarray(f, dtype=float)
    e = np.einsum("p,pi,pj->ij", mesh.areas, fv, mesh.normals)
    e = 0.5 * (e + e.T)
    return float(pressure) * mesh.volume * _EYE - moduli.stress(e)


def source_displacement(z, source: np.ndarray, moduli: ElasticModuli, points) -> np.ndarray:
    """Surface field ``u^k = sym grad_z N^(k)(z, y) : source`` for a 3x3 source tensor."""
    y = _surface_points(points)
    g = grad_N_surface(np.asarray(z, dtype=float).reshape(3), y, moduli)
    return np.einsum("mkij,ij->mk", g, np.asarray(source, dtype=float))
