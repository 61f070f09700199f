"""Pure-numpy implementation of the panel-integration primitives.

Mirrors ``_core.pyx`` exactly (same kinds, same block conventions) and is
used when the compiled extension is unavailable or when
``MOGIBEM_BACKEND=python`` is set.

Kinds and the 3x3 block integrated over source point ``y`` (weight ``w``)
for target ``c`` with target normal ``m`` and source normal ``n``:

========  =======================================
``S``     Gamma(c - y)
``K``     T(y - c, n)^T        (double layer)
``KS``    T(c - y, m)          (single-layer traction)
``SR``    R(y, c)^T            (field y, pole c)
``DR``    T_R(y, n; c)^T       (traction of R in y)
========  =======================================
"""
from __future__ import annotations

import numpy as np

from . import kernels
from .moduli import ElasticModuli

KINDS = ("S", "K", "KS", "SR", "DR")
_CHUNK = 1 << 18  # kernel evaluations per vectorised batch
_AWAY = np.array([0.5, 0.5, -1.0])  # dummy offset for skipped self-pairs (stays in x3 < 0)


def _moduli(params) -> ElasticModuli:
    return ElasticModuli(params[0], params[1])


def _block(kind, c, m, y, n, mod, r2sign):
    """Blocks for broadcastable arrays of targets/sources, shape (..., 3, 3)."""
    if kind == "S":
        return kernels.kelvin(c - y, mod)
    if kind == "K":
        return np.swapaxes(kernels.kelvin_traction(y - c, n, mod), -1, -2)
    if kind == "KS":
        return kernels.kelvin_traction(c - y, m, mod)
    old = kernels._fault["r2_sign"]
    kernels._fault["r2_sign"] = r2sign
    try:
        if kind == "SR":
            out = kernels.regular_part(y, c, mod)
        elif kind == "DR":
            out = kernels.regular_traction(y, n, c, mod)
        else:
            raise ValueError(f"unknown kernel kind {kind!r}")
    finally:
        kernels._fault["r2_sign"] = old
    return np.swapaxes(out, -1, -2)


def _chunk_blocks(kind, targets, tnormals, qpts, qwts, snormals, mod, r2sign, i0, i1, skip_diag):
    """Weighted blocks for targets i0:i1 against all panels: (m, n, 3, 3).

    Self-pairs are moved out of the way and given zero weight when
    ``skip_diag`` is set, so the singular point is never evaluated.
    """
    n, q = qwts.shape
    c = targets[i0:i1, None, None, :]
    tn = tnormals[i0:i1, None, None, :]
    pts = np.broadcast_to(qpts[None], (i1 - i0, n, q, 3))
    w = np.broadcast_to(qwts[None], (i1 - i0, n, q))
    if skip_diag:
        rows = np.arange(i0, min(i1, n))
        if len(rows):
            pts = pts.copy()
            w = w.copy()
            pts[rows - i0, rows] = targets[rows, None, :] + _AWAY
            w[rows - i0, rows] = 0.0
    blk = _block(kind, c, tn, pts, snormals[None, :, None, :], mod, r2sign)
    return np.einsum("mnqab,mnq->mnab", blk, w)


def _unpack(params):
    return _moduli(params), (params[5] if len(params) > 5 else 1.0)


def dense_blocks(kind, targets, tnormals, qpts, qwts, snormals, params, out,
                 skip_diag=False, add=False):
    """Write (or with ``add`` accumulate) into ``out[3i:3i+3, 3j:3j+3]`` the
    integral over panel j seen from target i. With ``skip_diag`` the i == j
    blocks are left untouched."""
    mod, r2sign = _unpack(params)
    targets, tnormals, qpts, qwts, snormals = (np.asarray(a, float) for a in
                                               (targets, tnormals, qpts, qwts, snormals))
    m, (n, q) = len(targets), qwts.shape
    if out.shape != (3 * m, 3 * n):
        raise ValueError("output matrix has the wrong shape")
    rows = max(1, _CHUNK // max(1, n * q))
    for i0 in range(0, m, rows):
        i1 = min(m, i0 + rows)
        blk = _chunk_blocks(kind, targets, tnormals, qpts, qwts, snormals, mod, r2sign, i0, i1, skip_diag)
        blk = blk.transpose(0, 2, 1, 3).reshape(3 * (i1 - i0), 3 * n)
        view = out[3 * i0:3 * i1, :]
        if skip_diag:
            keep = np.ones_like(blk, dtype=bool)
            for i in range(i0, min(i1, n)):
                keep[3 * (i - i0):3 * (i - i0) + 3, 3 * i:3 * i + 3] = False
            if add:
                view += np.where(keep, blk, 0.0)
            else:
                view[keep] = blk[keep]
        elif add:
            view += blk
        else:
            view[...] = blk
    return out


def pair_blocks(kind, targets, tnormals, pts, wts, snormals, offsets, params):
    """Integrate one (target, panel) pair per row: returns (P, 3, 3).

    Points of pair p are ``pts[offsets[p]:offsets[p + 1]]`` (CSR layout).
    """
    mod, r2sign = _unpack(params)
    targets, tnormals, pts, wts, snormals = (np.asarray(a, float) for a in
                                             (targets, tnormals, pts, wts, snormals))
    offsets = np.asarray(offsets, dtype=np.int64)
    npair = len(targets)
    if len(offsets) != npair + 1 or offsets[-1] > len(pts) or len(wts) != len(pts):
        raise ValueError("inconsistent pair layout")
    owner = np.repeat(np.arange(npair), np.diff(offsets))
    res = np.zeros((npair, 3, 3))
    for s in range(0, len(owner), _CHUNK):
        o = owner[s:s + _CHUNK]
        q = slice(offsets[0] + s, offsets[0] + s + len(o))
        blk = _block(kind, targets[o], tnormals[o], pts[q], snormals[o], mod, r2sign)
        np.add.at(res, o, wts[q, None, None] * blk)
    return res


def potential(kind, targets, tnormals, qpts, qwts, snormals, dens, params, skip_diag=False):
    """Apply the operator to R densities ``(R, N, 3)`` without storing the
    matrix; returns ``(R, M, 3)``."""
    mod, r2sign = _unpack(params)
    targets, tnormals, qpts, qwts, snormals, dens = (np.asarray(a, float) for a in
                                                     (targets, tnormals, qpts, qwts, snormals, dens))
    m, (n, q) = len(targets), qwts.shape
    if dens.shape[1:] != (n, 3):
        raise ValueError("density has the wrong shape")
    res = np.zeros((len(dens), m, 3))
    rows = max(1, _CHUNK // max(1, n * q))
    for i0 in range(0, m, rows):
        i1 = min(m, i0 + rows)
        blk = _chunk_blocks(kind, targets, tnormals, qpts, qwts, snormals, mod, r2sign, i0, i1, skip_diag)
        res[:, i0:i1] = np.einsum("mnab,rnb->rma", blk, dens)
    return res
