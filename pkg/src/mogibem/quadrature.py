"""Quadrature on flat triangles: a fixed 7-point rule, a Duffy rule for the
weakly singular self-panel, and adaptive midpoint subdivision for near pairs.

All rules return physical points and weights (weights already include the
panel area) so callers simply sum ``w * f(p)``.
"""
from __future__ import annotations

import numpy as np

# barycentric coordinates and weights (sum 1) of the degree-5 7-point rule
_A1, _B1 = 0.059715871789770, 0.470142064105115
_A2, _B2 = 0.797426985353087, 0.101286507323456
BARY7 = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_A1, _B1, _B1], [_B1, _A1, _B1], [_B1, _B1, _A1],
    [_A2, _B2, _B2], [_B2, _A2, _B2], [_B2, _B2, _A2],
])
W7 = np.array([0.225] + [0.132394152788506] * 3 + [0.125939180544827] * 3)

# 4-way midpoint split in barycentric form: child vertices as rows of parent weights
_SPLIT = np.array([
    [[1, 0, 0], [.5, .5, 0], [.5, 0, .5]],
    [[.5, .5, 0], [0, 1, 0], [0, .5, .5]],
    [[.5, 0, .5], [0, .5, .5], [0, 0, 1]],
    [[.5, .5, 0], [0, .5, .5], [.5, 0, .5]],
])


def triangle_rule(tri: np.ndarray):
    """7-point rule on a batch of triangles ``(..., 3, 3)``.

    Returns points ``(..., 7, 3)`` and weights ``(..., 7)``.
    """
    tri = np.asarray(tri, dtype=float)
    pts = np.einsum("qa,...ad->...qd", BARY7, tri)
    area = 0.5 * np.linalg.norm(np.cross(tri[..., 1, :] - tri[..., 0, :], tri[..., 2, :] - tri[..., 0, :]), axis=-1)
    return pts, area[..., None] * W7


def duffy_rule(tri: np.ndarray, order: int = 12):
    """Rule for integrands with a 1/r singularity at the centroid.

    The triangle is split into three sub-triangles sharing the centroid and
    each is mapped from the unit square with the Duffy transform, whose
    Jacobian cancels the singularity. Returns ``(3 * order**2, 3)`` points
    and matching weights.
    """
    tri = np.asarray(tri, dtype=float)
    c = tri.mean(axis=0)
    g, gw = np.polynomial.legendre.leggauss(order)
    s = 0.5 * (g + 1.0)
    sw = 0.5 * gw
    u, v = np.meshgrid(s, s, indexing="ij")
    wuv = np.outer(sw, sw).ravel()
    u = u.ravel()
    v = v.ravel()
    pts, wts = [], []
    for a in range(3):
        p1, p2 = tri[a], tri[(a + 1) % 3]
        e1, e2 = p1 - c, p2 - c
        jac = np.linalg.norm(np.cross(e1, e2))       # twice the sub-area
        # x = c + u (1 - v) e1 + u v e2 ; dA = u * jac du dv
        pts.append(c + (u * (1 - v))[:, None] * e1 + (u * v)[:, None] * e2)
        wts.append(wuv * u * jac)
    return np.concatenate(pts), np.concatenate(wts)


def refine_pairs(tris: np.ndarray, targets: np.ndarray, ratio: float = 3.0, max_depth: int = 5):
    """Adaptive 7-point rules for many (source triangle, target) pairs at once.

    Each sub-triangle is split into four while its centroid is closer to the
    pair's target than ``ratio`` times its diameter, up to ``max_depth``
    levels. Returns flat ``pts (T, 3)``, ``wts (T,)`` and ``offsets (P + 1,)``
    such that pair p owns ``pts[offsets[p]:offsets[p + 1]]``.
    """
    tris = np.asarray(tris, dtype=float).reshape(-1, 3, 3)
    targets = np.asarray(targets, dtype=float).reshape(-1, 3)
    owner = np.arange(len(tris))
    done_o, done_p, done_w = [], [], []
    for depth in range(max_depth + 1):
        c = tris.mean(axis=1)
        diam = np.max(np.linalg.norm(tris - np.roll(tris, 1, axis=1), axis=2), axis=1)
        dist = np.linalg.norm(c - targets[owner], axis=1)
        split = dist < ratio * diam if depth < max_depth else np.zeros(len(tris), bool)
        keep = ~split
        if keep.any():
            p, w = triangle_rule(tris[keep])
            done_o.append(np.repeat(owner[keep], 7))
            done_p.append(p.reshape(-1, 3))
            done_w.append(w.ravel())
        if not split.any():
            break
        tris = np.einsum("cab,nbd->ncad", _SPLIT, tris[split]).reshape(-1, 3, 3)
        owner = np.repeat(owner[split], 4)
    o = np.concatenate(done_o)
    order = np.argsort(o, kind="stable")
    offsets = np.zeros(len(targets) + 1, dtype=np.int64)
    np.cumsum(np.bincount(o, minlength=len(targets)), out=offsets[1:])
    return np.concatenate(done_p)[order], np.concatenate(done_w)[order], offsets


def refine_near(tri: np.ndarray, target: np.ndarray, ratio: float = 3.0, max_depth: int = 5):
    """Single-pair convenience wrapper around :func:`refine_pairs`; flat arrays."""
    pts, wts, _ = refine_pairs(np.asarray(tri)[None], np.asarray(target)[None], ratio, max_depth)
    return pts, wts


def is_near(targets: np.ndarray, centroids: np.ndarray, diameters: np.ndarray, ratio: float = 3.0):
    """Boolean (M, N) mask of target/panel pairs that need refinement."""
    d = np.linalg.norm(targets[:, None, :] - centroids[None, :, :], axis=2)
    return d < ratio * diameters[None, :]
