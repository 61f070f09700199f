"""Flat-triangle cavity meshes: construction, checks, placement and OFF I/O."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (CavityTouchesSurface, MeshDegenerateFace, MeshInvalid,
                     MeshInverted, MeshOpen)


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Closed triangulated surface with per-face geometry.

    ``vertices`` is (V, 3) float, ``faces`` is (F, 3) int with counter-clockwise
    winding seen from outside. Centroids, unit normals, areas and face
    diameters are derived once at construction.
    """

    vertices: np.ndarray
    faces: np.ndarray
    centroids: np.ndarray = field(init=False, repr=False)
    normals: np.ndarray = field(init=False, repr=False)
    areas: np.ndarray = field(init=False, repr=False)
    diameters: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float).reshape(-1, 3)
        f = np.array(self.faces, dtype=np.int64).reshape(-1, 3)
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise MeshInvalid("face references a vertex index out of range")
        tri = v[f]
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        dbl = np.linalg.norm(cross, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            normals = cross / dbl[:, None]
        edges = np.stack([tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 1], tri[:, 0] - tri[:, 2]], axis=1)
        object.__setattr__(self, "vertices", _frozen(v))
        object.__setattr__(self, "faces", _frozen(f))
        object.__setattr__(self, "centroids", _frozen(tri.mean(axis=1)))
        object.__setattr__(self, "normals", _frozen(normals))
        object.__setattr__(self, "areas", _frozen(0.5 * dbl))
        object.__setattr__(self, "diameters", _frozen(np.linalg.norm(edges, axis=2).max(axis=1)))

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def triangles(self) -> np.ndarray:
        """(F, 3, 3) vertex coordinates per face."""
        return self.vertices[self.faces]

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())

    @property
    def volume(self) -> float:
        # divergence theorem with div(x) = 3; exact for a closed polyhedron
        return float(np.sum(self.areas * np.einsum("ij,ij->i", self.normals, self.centroids)) / 3.0)

    @property
    def scale(self) -> float:
        """Bounding-box diagonal."""
        return float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))

    def transformed(self, matrix=None, shift=None, factor: float = 1.0) -> "TriangleMesh":
        """Return ``shift + factor * matrix @ v`` applied to every vertex."""
        v = self.vertices
        if matrix is not None:
            v = v @ np.asarray(matrix, dtype=float).T
        v = factor * v
        if shift is not None:
            v = v + np.asarray(shift, dtype=float)
        return TriangleMesh(v, self.faces)

    def flipped(self) -> "TriangleMesh":
        return TriangleMesh(self.vertices, self.faces[:, ::-1])


_T = (1.0 + math.sqrt(5.0)) / 2.0
_ICO_VERTS = [
    (-1, _T, 0), (1, _T, 0), (-1, -_T, 0), (1, -_T, 0),
    (0, -1, _T), (0, 1, _T), (0, -1, -_T), (0, 1, -_T),
    (_T, 0, -1), (_T, 0, 1), (-_T, 0, -1), (-_T, 0, 1),
]
_ICO_FACES = [
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
    (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
    (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
    (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
]


def icosphere(subdivisions: int) -> TriangleMesh:
    """Unit sphere from a recursively 4-split icosahedron (20 * 4**k faces)."""
    k = int(subdivisions)
    if not 0 <= k <= 7:
        raise ValueError(f"subdivisions must be in [0, 7], got {subdivisions}")
    verts = [np.array(p, dtype=float) / np.linalg.norm(p) for p in _ICO_VERTS]
    faces = np.array(_ICO_FACES, dtype=np.int64)
    for _ in range(k):
        cache = {}

        def midpoint(a, b):
            key = (a, b) if a < b else (b, a)
            idx = cache.get(key)
            if idx is None:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                idx = cache[key] = len(verts) - 1
            return idx

        new = np.empty((4 * len(faces), 3), dtype=np.int64)
        for n, (a, b, c) in enumerate(faces.tolist()):
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new[4 * n:4 * n + 4] = ((a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca))
        faces = new
    return TriangleMesh(np.array(verts), faces)


@dataclass(frozen=True)
class MeshReport:
    n_vertices: int
    n_faces: int
    closed: bool
    consistently_oriented: bool
    signed_volume: float
    total_area: float
    min_area: float
    max_area: float
    normal_sum: float  # |sum a_i n_i| / total area

    def lines(self):
        return [
            f"vertices          {self.n_vertices}",
            f"faces             {self.n_faces}",
            f"closed            {self.closed}",
            f"oriented          {self.consistently_oriented}",
            f"signed volume     {self.signed_volume:.10g}",
            f"total area        {self.total_area:.10g}",
            f"min / max area    {self.min_area:.4g} / {self.max_area:.4g}",
            f"|sum a n| / area  {self.normal_sum:.3g}",
        ]


def mesh_validate(mesh: TriangleMesh, raise_on_error: bool = True) -> MeshReport:
    """Check closedness, orientation and face quality.

    Every directed edge must appear exactly once and its reverse exactly once.
    Raises :class:`MeshOpen`, :class:`MeshInverted` or
    :class:`MeshDegenerateFace` unless ``raise_on_error`` is false.
    """
    f = mesh.faces
    directed = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    nv = max(len(mesh.vertices), 1)
    code = directed[:, 0] * nv + directed[:, 1]
    rev = directed[:, 1] * nv + directed[:, 0]
    uniq, counts = np.unique(code, return_counts=True)
    oriented = bool(np.all(counts == 1))
    undirected = np.minimum(code, rev)
    _, ucounts = np.unique(undirected, return_counts=True)
    closed = bool(len(f) > 0 and np.all(ucounts == 2))
    paired = bool(np.all(np.isin(rev, uniq)))

    areas = mesh.areas
    total = float(areas.sum()) if len(areas) else 0.0
    vol = mesh.volume if len(f) else 0.0
    nsum = float(np.linalg.norm((areas[:, None] * mesh.normals).sum(axis=0)) / total) if total > 0 else float("nan")
    report = MeshReport(
        n_vertices=len(mesh.vertices), n_faces=len(f), closed=closed and paired,
        consistently_oriented=oriented, signed_volume=vol, total_area=total,
        min_area=float(areas.min()) if len(areas) else 0.0,
        max_area=float(areas.max()) if len(areas) else 0.0,
        normal_sum=nsum,
    )
    if raise_on_error:
        tol = 1e-14 * mesh.scale ** 2
        if len(f) == 0 or np.any(~np.isfinite(areas)) or np.any(areas <= tol):
            raise MeshDegenerateFace(f"face area below {tol:.3g}")
        if not (closed and paired):
            raise MeshOpen("surface is not closed: some edge is not shared by exactly two faces")
        if not oriented:
            raise MeshOpen("faces are not consistently oriented")
        if vol <= 0.0:
            raise MeshInverted(f"signed volume {vol:.6g} <= 0: normals point inward")
    return report


def place_cavity(mesh: TriangleMesh, epsilon: float, z) -> TriangleMesh:
    """Map every vertex v to z + epsilon * v; the result must lie in x3 < 0."""
    if not epsilon > 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    z = np.asarray(z, dtype=float).reshape(3)
    placed = mesh.transformed(shift=z, factor=float(epsilon))
    top = placed.vertices[:, 2].max()
    if z[2] >= 0.0 or top >= 0.0:
        raise CavityTouchesSurface(f"cavity reaches x3 = {top:.6g} >= 0")
    return placed


def read_off(path) -> TriangleMesh:
    """Parse an ASCII OFF file containing triangles only."""
    tokens = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.append(line.split())
    if not tokens or tokens[0][0] != "OFF":
        raise MeshInvalid(f"{path}: missing OFF header")
    head = tokens[0][1:] if len(tokens[0]) > 1 else None
    rows = tokens[1:]
    if head is None:
        head, rows = rows[0], rows[1:]
    try:
        nv, nf = int(head[0]), int(head[1])
        verts = np.array([[float(t) for t in r[:3]] for r in rows[:nv]])
        faces = []
        for r in rows[nv:nv + nf]:
            if int(r[0]) != 3:
                raise MeshInvalid(f"{path}: only triangular faces are supported")
            faces.append([int(t) for t in r[1:4]])
    except (IndexError, ValueError) as exc:
        raise MeshInvalid(f"{path}: malformed OFF data ({exc})") from None
    if len(verts) != nv or len(faces) != nf:
        raise MeshInvalid(f"{path}: expected {nv} vertices and {nf} faces")
    return TriangleMesh(verts, np.array(faces, dtype=np.int64))


def write_off(mesh: TriangleMesh, path) -> None:
    lines = ["OFF", f"{len(mesh.vertices)} {mesh.n_faces} 0"]
    lines += [" ".join(repr(float(c)) for c in v) for v in mesh.vertices]
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.faces.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def solid_angle_sum(mesh: TriangleMesh, points) -> np.ndarray:
    """Total solid angle subtended by the mesh at each point, over 4 pi.

    Uses the van Oosterom-Strackee formula per face; the result is ~1 for
    points inside a closed outward-oriented mesh and ~0 outside.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    tri = mesh.triangles
    out = np.empty(len(pts))
    for s in range(0, len(pts), 256):
        r = tri[None, :, :, :] - pts[s:s + 256, None, None, :]
        a, b, c = r[..., 0, :], r[..., 1, :], r[..., 2, :]
        la, lb, lc = (np.linalg.norm(v, axis=-1) for v in (a, b, c))
        num = np.einsum("...i,...i->...", a, np.cross(b, c))
        den = (la * lb * lc + np.einsum("...i,...i->...", a, b) * lc
               + np.einsum("...i,...i->...", a, c) * lb + np.einsum("...i,...i->...", b, c) * la)
        out[s:s + 256] = 2.0 * np.arctan2(num, den).sum(axis=1) / (4.0 * np.pi)
    return out


def contains(mesh: TriangleMesh, points) -> np.ndarray:
    """Boolean mask of points strictly enclosed by the mesh."""
    return solid_angle_sum(mesh, points) > 0.5


def point_triangle_distance(points, tri) -> np.ndarray:
    """Euclidean distance from points ``(..., 3)`` to triangles ``(..., 3, 3)``."""
    p = np.asarray(points, dtype=float)
    tri = np.asarray(tri, dtype=float)
    a, b, c = tri[..., 0, :], tri[..., 1, :], tri[..., 2, :]
    ab, ac, ap = b - a, c - a, p - a
    d00 = np.einsum("...i,...i->...", ab, ab)
    d01 = np.einsum("...i,...i->...", ab, ac)
    d11 = np.einsum("...i,...i->...", ac, ac)
    d20 = np.einsum("...i,...i->...", ap, ab)
    d21 = np.einsum("...i,...i->...", ap, ac)
    den = d00 * d11 - d01 * d01
    v = (d11 * d20 - d01 * d21) / den
    w = (d00 * d21 - d01 * d20) / den
    inside = (v >= 0) & (w >= 0) & (v + w <= 1)
    proj = a + v[..., None] * ab + w[..., None] * ac
    best = np.where(inside, np.linalg.norm(p - proj, axis=-1), np.inf)
    for s, e in ((a, b), (b, c), (c, a)):
        d = e - s
        t = np.clip(np.einsum("...i,...i->...", p - s, d) / np.einsum("...i,...i->...", d, d), 0.0, 1.0)
        best = np.minimum(best, np.linalg.norm(p - (s + t[..., None] * d), axis=-1))
    return best
