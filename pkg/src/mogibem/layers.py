"""Collocation discretisation of the layer operators on a cavity mesh.

Densities are piecewise constant per panel and collocated at centroids.
Matrices are ``(3M, 3N)`` column-major with block ``[3i:3i+3, 3j:3j+3]``
coupling target i to panel j, so they can go straight into LAPACK.

Quadrature: the fixed 7-point rule everywhere, adaptive subdivision for
target/panel pairs closer than three panel diameters, and a Duffy rule for
the weakly singular self-panel of the single layer. The principal-value
diagonal of the double layer uses the rigid-translation identity
``(1/2 I + K) r = r``; its adjoint uses the dual column identity.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from . import backend
from .errors import CavityTouchesSurface, InvalidHalfSpacePoint, PointOnBoundary
from .mesh import TriangleMesh, point_triangle_distance
from .moduli import ElasticModuli
from .quadrature import duffy_rule, is_near, refine_pairs, triangle_rule

NEAR_RATIO = 3.0
REGULAR_CENTROID_RATIO = 0.02  # panel diameter / image distance below which R uses one point
ASSEMBLY_DEPTH = 5
EVAL_DEPTH = 14
_PAIR_BATCH = 4096

POTENTIAL_KINDS = {"SΓ": "S", "DΓ": "K", "SR": "SR", "DR": "DR",
                   "S": "S", "D": "K"}


@dataclass(frozen=True, eq=False)
class DenseOperator:
    """Assembled boundary system ``matrix @ x = rhs`` on an ``n``-panel mesh."""

    matrix: np.ndarray
    rhs: np.ndarray
    n: int

    def __post_init__(self):
        if self.matrix.shape != (3 * self.n, 3 * self.n) or self.rhs.shape[0] != 3 * self.n:
            raise ValueError("operator dimensions do not match the panel count")


def kernel_params(moduli: ElasticModuli) -> tuple:
    return moduli.as_params() + (kernels._fault["r2_sign"],)


class PanelRule:
    """Cached 7-point rule of a mesh in the array layout the backends take."""

    def __init__(self, mesh: TriangleMesh):
        self.mesh = mesh
        pts, wts = triangle_rule(mesh.triangles)
        self.pts = np.ascontiguousarray(pts)
        self.wts = np.ascontiguousarray(wts)
        self.normals = np.ascontiguousarray(mesh.normals)
        self.centroids = np.ascontiguousarray(mesh.centroids)
        self._regular = None

    def regular(self):
        """Rule for the smooth regular-part kernels.

        Those kernels vary on the scale of the distance to the image cavity,
        ``2 |x3|``; when every panel is much smaller than that the centroid
        rule is already accurate to ``O((h / 2|x3|)^2)`` and is used instead
        of the 7-point rule.
        """
        if self._regular is None:
            depth = -float(self.mesh.vertices[:, 2].max())
            ratio = float(self.mesh.diameters.max()) / (2.0 * depth) if depth > 0 else np.inf
            if ratio < REGULAR_CENTROID_RATIO:
                self._regular = (np.ascontiguousarray(self.centroids[:, None, :]),
                                 np.ascontiguousarray(self.mesh.areas[:, None]))
            else:
                self._regular = (self.pts, self.wts)
        return self._regular


def _c(a):
    return np.ascontiguousarray(a, dtype=float)


def _near_pairs(rule: PanelRule, targets, skip_self: bool):
    mesh = rule.mesh
    near = is_near(targets, mesh.centroids, mesh.diameters, NEAR_RATIO)
    if skip_self:
        k = min(len(targets), mesh.n_faces)
        near[np.arange(k), np.arange(k)] = False
    return np.nonzero(near)


def _pair_corrections(kind, rule, targets, tnormals, ii, jj, params, depth):
    """Refined minus coarse block for each listed pair, batched: (P, 3, 3)."""
    out = np.empty((len(ii), 3, 3))
    tri = rule.mesh.triangles
    for s in range(0, len(ii), _PAIR_BATCH):
        i, j = ii[s:s + _PAIR_BATCH], jj[s:s + _PAIR_BATCH]
        tg, tn, sn = _c(targets[i]), _c(tnormals[i]), _c(rule.normals[j])
        pts, wts, offs = refine_pairs(tri[j], tg, NEAR_RATIO, depth)
        fine = backend.core.pair_blocks(kind, tg, tn, _c(pts), _c(wts), sn, offs, params)
        q = rule.wts.shape[1]
        coarse = backend.core.pair_blocks(kind, tg, tn, _c(rule.pts[j].reshape(-1, 3)), _c(rule.wts[j].ravel()),
                                          sn, np.arange(len(j) + 1, dtype=np.int64) * q, params)
        out[s:s + _PAIR_BATCH] = fine - coarse
    return out


def _self_single_layer(rule: PanelRule, params):
    """Duffy-integrated diagonal blocks of the Kelvin single layer: (N, 3, 3)."""
    tri = rule.mesh.triangles
    dp, dw = zip(*(duffy_rule(t) for t in tri))
    offs = np.arange(len(tri) + 1, dtype=np.int64) * len(dw[0])
    return backend.core.pair_blocks("S", rule.centroids, rule.normals, _c(np.concatenate(dp)), _c(np.concatenate(dw)),
                                    rule.normals, offs, params)


def _set_blocks(mat, ii, jj, blocks, add=True):
    for a in range(3):
        for b in range(3):
            if add:
                mat[3 * ii + a, 3 * jj + b] += blocks[:, a, b]
            else:
                mat[3 * ii + a, 3 * jj + b] = blocks[:, a, b]


def _row_block_sums(mat, n):
    """sum_j mat[i-block, j-block] for every row block i: (n, 3, 3)."""
    s = np.empty((n, 3, 3))
    for b in range(3):
        col = mat[:, b::3].sum(axis=1)
        s[:, :, b] = col.reshape(n, 3)
    return s


def _column_block_sums(mat, n, weights):
    """sum_i weights[i] mat[i-block, j-block] for every column block j: (n, 3, 3)."""
    s = np.empty((n, 3, 3))
    for a in range(3):
        row = weights @ mat[a::3, :]
        s[:, a, :] = row.reshape(n, 3)
    return s


def assemble_single_layer(mesh: TriangleMesh, moduli: ElasticModuli, rule: PanelRule | None = None) -> np.ndarray:
    """Kelvin single layer at centroids: block (i, j) = int_j Gamma(c_i - y)."""
    rule = rule or PanelRule(mesh)
    params = kernel_params(moduli)
    n = mesh.n_faces
    mat = np.zeros((3 * n, 3 * n), order="F")
    backend.core.dense_blocks("S", rule.centroids, rule.normals, rule.pts, rule.wts, rule.normals, params, mat,
                              skip_diag=True)
    ii, jj = _near_pairs(rule, rule.centroids, True)
    _set_blocks(mat, ii, jj, _pair_corrections("S", rule, rule.centroids, rule.normals, ii, jj,
                                               params, ASSEMBLY_DEPTH))
    idx = np.arange(n)
    _set_blocks(mat, idx, idx, _self_single_layer(rule, params), add=False)
    return mat


def assemble_K(mesh: TriangleMesh, moduli: ElasticModuli, rule: PanelRule | None = None) -> np.ndarray:
    """Principal-value double layer: block (i, j) = int_j T(y - c_i, n_j)^T.

    Diagonal blocks are set so every row block satisfies
    ``sum_j K_ij = 1/2 I`` (double layer of a rigid translation).
    """
    rule = rule or PanelRule(mesh)
    params = kernel_params(moduli)
    n = mesh.n_faces
    mat = np.zeros((3 * n, 3 * n), order="F")
    backend.core.dense_blocks("K", rule.centroids, rule.normals, rule.pts, rule.wts, rule.normals, params, mat,
                              skip_diag=True)
    ii, jj = _near_pairs(rule, rule.centroids, True)
    _set_blocks(mat, ii, jj, _pair_corrections("K", rule, rule.centroids, rule.normals, ii, jj,
                                               params, ASSEMBLY_DEPTH))
    idx = np.arange(n)
    _set_blocks(mat, idx, idx, 0.5 * np.eye(3) - _row_block_sums(mat, n), add=False)
    return mat


def assemble_K_adjoint(mesh: TriangleMesh, moduli: ElasticModuli, rule: PanelRule | None = None) -> np.ndarray:
    """Traction of the Kelvin single layer: block (i, j) = int_j T(c_i - y, n_i).

    Assembled directly from the kernel with swapped arguments (not as the
    transpose of :func:`assemble_K`); the diagonal is fixed by the dual of
    the translation identity, ``sum_i a_i K*_ij = 1/2 a_j I``.
    """
    rule = rule or PanelRule(mesh)
    params = kernel_params(moduli)
    n = mesh.n_faces
    mat = np.zeros((3 * n, 3 * n), order="F")
    backend.core.dense_blocks("KS", rule.centroids, rule.normals, rule.pts, rule.wts, rule.normals, params, mat,
                              skip_diag=True)
    ii, jj = _near_pairs(rule, rule.centroids, True)
    _set_blocks(mat, ii, jj, _pair_corrections("KS", rule, rule.centroids, rule.normals, ii, jj,
                                               params, ASSEMBLY_DEPTH))
    a = mesh.areas
    sums = _column_block_sums(mat, n, a) / a[:, None, None]
    idx = np.arange(n)
    _set_blocks(mat, idx, idx, 0.5 * np.eye(3) - sums, add=False)
    return mat


def _check_below_surface(mesh: TriangleMesh):
    top = mesh.vertices[:, 2].max()
    if top >= 0.0:
        raise CavityTouchesSurface(f"cavity reaches x3 = {top:.6g} >= 0")


def assemble_regular_ops(mesh: TriangleMesh, moduli: ElasticModuli, rule: PanelRule | None = None):
    """(S^R, D^R) at centroids: blocks int_j R(y, c_i)^T and int_j T_R(y, n_j; c_i)^T."""
    _check_below_surface(mesh)
    rule = rule or PanelRule(mesh)
    params = kernel_params(moduli)
    n = mesh.n_faces
    sr = np.zeros((3 * n, 3 * n), order="F")
    dr = np.zeros((3 * n, 3 * n), order="F")
    rp, rw = rule.regular()
    backend.core.dense_blocks("SR", rule.centroids, rule.normals, rp, rw, rule.normals, params, sr)
    backend.core.dense_blocks("DR", rule.centroids, rule.normals, rp, rw, rule.normals, params, dr)
    return sr, dr


def add_regular_double_layer(mat: np.ndarray, mesh: TriangleMesh, moduli: ElasticModuli,
                             rule: PanelRule | None = None) -> np.ndarray:
    """Accumulate D^R into ``mat`` without allocating a second matrix."""
    _check_below_surface(mesh)
    rule = rule or PanelRule(mesh)
    rp, rw = rule.regular()
    backend.core.dense_blocks("DR", rule.centroids, rule.normals, rp, rw, rule.normals,
                              kernel_params(moduli), mat, add=True)
    return mat


def apply_on_boundary(kind: str, mesh: TriangleMesh, moduli: ElasticModuli, densities,
                      rule: PanelRule | None = None) -> np.ndarray:
    """Matrix-free operator application at the centroids.

    ``densities`` is ``(N, 3)`` or ``(R, N, 3)``; the result has the same
    shape. Supports the single layers ``"S"`` and ``"SR"``.
    """
    rule = rule or PanelRule(mesh)
    params = kernel_params(moduli)
    dens = np.asarray(densities, dtype=float)
    single = dens.ndim == 2
    dens = _c(dens[None] if single else dens)
    if kind == "SR":
        _check_below_surface(mesh)
        rp, rw = rule.regular()
        res = backend.core.potential("SR", rule.centroids, rule.normals, rp, rw, rule.normals, dens, params)
    elif kind == "S":
        res = backend.core.potential("S", rule.centroids, rule.normals, rule.pts, rule.wts, rule.normals, dens, params,
                                     skip_diag=True)
        ii, jj = _near_pairs(rule, rule.centroids, True)
        corr = _pair_corrections("S", rule, rule.centroids, rule.normals, ii, jj, params, ASSEMBLY_DEPTH)
        np.add.at(res, (slice(None), ii), np.einsum("pab,rpb->rpa", corr, dens[:, jj]))
        selfb = _self_single_layer(rule, params)
        res += np.einsum("nab,rnb->rna", selfb, dens)
    else:
        raise ValueError(f"unsupported boundary application {kind!r}")
    return res[0] if single else res


def _distance_to_mesh(mesh: TriangleMesh, x: np.ndarray) -> np.ndarray:
    near = is_near(x, mesh.centroids, mesh.diameters, 1.0)
    dist = np.min(np.linalg.norm(x[:, None, :] - mesh.centroids[None], axis=2), axis=1)
    pi, pj = np.nonzero(near)
    if len(pi):
        d = point_triangle_distance(x[pi], mesh.triangles[pj])
        np.minimum.at(dist, pi, d)
    return dist


def eval_potential(kind: str, x, mesh: TriangleMesh, density, moduli: ElasticModuli,
                   rule: PanelRule | None = None, max_depth: int = EVAL_DEPTH) -> np.ndarray:
    """Evaluate a layer potential off the boundary.

    ``kind`` is one of ``"SΓ"``, ``"DΓ"``, ``"SR"``, ``"DR"`` (ASCII
    ``"S"``/``"D"`` also accepted). ``x`` is a point ``(3,)`` or points
    ``(M, 3)``; ``density`` is ``(N, 3)`` or a stack ``(R, N, 3)``, and the
    result drops the same singleton axes. Pairs closer than three panel
    diameters are integrated with adaptive subdivision.
    """
    try:
        code = POTENTIAL_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown potential kind {kind!r}") from None
    rule = rule or PanelRule(mesh)
    x = np.asarray(x, dtype=float)
    pts = _c(np.atleast_2d(x))
    if np.any(_distance_to_mesh(mesh, pts) < 1e-12 * mesh.scale):
        raise PointOnBoundary("evaluation point lies on the cavity boundary")
    if code in ("SR", "DR"):
        _check_below_surface(mesh)
        if np.any(pts[:, 2] > 0.0):
            raise InvalidHalfSpacePoint("regular-part potentials need x3 <= 0")
    params = kernel_params(moduli)
    dens = np.asarray(density, dtype=float)
    stacked = dens.ndim == 3
    dens = _c(dens.reshape(-1, mesh.n_faces, 3))
    dummy_n = np.zeros_like(pts)
    qp, qw = rule.regular() if code in ("SR", "DR") else (rule.pts, rule.wts)
    res = backend.core.potential(code, pts, dummy_n, qp, qw, rule.normals, dens, params)
    if code in ("S", "K"):
        ii, jj = _near_pairs(rule, pts, False)
        if len(ii):
            corr = _pair_corrections(code, rule, pts, dummy_n, ii, jj, params, max_depth)
            np.add.at(res, (slice(None), ii), np.einsum("pab,rpb->rpa", corr, dens[:, jj]))
    if not stacked:
        res = res[0]
    if x.ndim == 1:
        res = res[..., 0, :]
    return res


@dataclass(frozen=True)
class JumpProbe:
    """Off-boundary double layer against its predicted one-sided limits."""

    delta: float
    outside_error: float
    inside_error: float


def jump_probe(mesh: TriangleMesh, moduli: ElasticModuli, density, deltas=(1e-2, 1e-3),
               kmat: np.ndarray | None = None, rule: PanelRule | None = None):
    """Compare D[phi](c_i +- delta h n_i) with (-+1/2 I + K) phi at every centroid.

    ``delta`` is scaled by the mean panel diameter ``h``. Errors are sup-norm
    over panels divided by ``sup |phi|``. ``density`` may be a single
    ``(N, 3)`` field (returns a list of :class:`JumpProbe`) or a stack
    ``(R, N, 3)`` (returns one list per field).
    """
    rule = rule or PanelRule(mesh)
    phi = np.asarray(density, dtype=float)
    stacked = phi.ndim == 3
    phi = phi.reshape(-1, mesh.n_faces, 3)
    if kmat is None:
        kmat = assemble_K(mesh, moduli, rule)
    kphi = (phi.reshape(len(phi), -1) @ kmat.T).reshape(phi.shape)
    scale = np.abs(phi).max(axis=(1, 2))
    h = float(mesh.diameters.mean())
    out = [[] for _ in phi]
    for d in deltas:
        off = d * h * mesh.normals
        outside = eval_potential("DΓ", mesh.centroids + off, mesh, phi, moduli, rule)
        inside = eval_potential("DΓ", mesh.centroids - off, mesh, phi, moduli, rule)
        eo = np.abs(outside - (kphi - 0.5 * phi)).max(axis=(1, 2)) / scale
        ei = np.abs(inside - (kphi + 0.5 * phi)).max(axis=(1, 2)) / scale
        for r in range(len(phi)):
            out[r].append(JumpProbe(delta=d, outside_error=float(eo[r]), inside_error=float(ei[r])))
    return out if stacked else out[0]


def rigid_motions(points: np.ndarray) -> np.ndarray:
    """The six rigid displacement fields at ``points``: (6, M, 3)."""
    pts = np.asarray(points, dtype=float)
    out = np.zeros((6,) + pts.shape)
    for k in range(3):
        out[k, :, k] = 1.0
        e = np.eye(3)[k]
        out[3 + k] = np.cross(e, pts)
    return out


def rigid_motion_defect(kmat: np.ndarray, mesh: TriangleMesh) -> np.ndarray:
    """sup-norm of ``(1/2 I + K) r - r`` per rigid motion, relative to sup |r|."""
    res = []
    for r in rigid_motions(mesh.centroids - mesh.centroids.mean(axis=0)):
        v = r.ravel()
        res.append(np.abs(0.5 * v + kmat @ v - v).max() / np.abs(v).max())
    return np.array(res)
