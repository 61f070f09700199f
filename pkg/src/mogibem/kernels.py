"""Closed-form elastostatic kernels.

Sign convention: the Kelvin matrix carries a leading minus, so that
``div(C sym grad G) = +delta I``. Every function broadcasts over leading
axes: points are ``(..., 3)`` and matrices come back as ``(..., 3, 3)``
with ``[..., i, j]`` the i-th displacement component for a unit force in
direction j. Gradients are ``(..., 3, 3, 3)`` with the derivative index last.

The regular part of the half-space Neumann function is written so it also
accepts complex input; its x-gradient is taken by complex-step
differentiation, which is exact to rounding for an analytic kernel.
"""
from __future__ import annotations

import numpy as np

from .errors import InvalidHalfSpacePoint, SingularPoint
from .moduli import ElasticModuli

_EYE = np.eye(3)
_E3 = np.array([0.0, 0.0, 1.0])
_CSTEP = 1e-30

# fault-injection switch for the validation harness: multiplies the R2 term
_fault = {"r2_sign": 1.0}


def _rnorm(x):
    # sqrt(x.x) rather than abs so complex-step perturbations propagate
    return np.sqrt(np.sum(x * x, axis=-1))


def _check_nonzero(r):
    if np.any(np.abs(r) < 1e-300):
        raise SingularPoint("kernel evaluated at its singular point")


def kelvin(x, moduli: ElasticModuli) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    r = _rnorm(x)
    _check_nonzero(r)
    r = r[..., None, None]
    xx = x[..., :, None] * x[..., None, :]
    return -moduli.cmn * ((3.0 - 4.0 * moduli.nu) * _EYE / r + xx / r ** 3)


def kelvin_grad(x, moduli: ElasticModuli) -> np.ndarray:
    """``[..., i, j, k] = d Gamma_ij / d x_k``."""
    x = np.asarray(x, dtype=float)
    r = _rnorm(x)
    _check_nonzero(r)
    r = r[..., None, None, None]
    a = 3.0 - 4.0 * moduli.nu
    xi = x[..., :, None, None]
    xj = x[..., None, :, None]
    xk = x[..., None, None, :]
    dij = _EYE[:, :, None]
    dik = _EYE[:, None, :]
    djk = _EYE[None, :, :]
    return moduli.cmn * ((a * dij * xk - dik * xj - djk * xi) / r ** 3 + 3.0 * xi * xj * xk / r ** 5)


def traction_from_grad(grad, n, moduli: ElasticModuli) -> np.ndarray:
    """Traction of each column of a matrix field.

    ``grad[..., i, k, l] = d M_ik / d x_l``; returns ``T[..., h, k]``, the
    h-th traction component of column k on a surface with normal ``n``.
    """
    n = np.asarray(n)
    div = np.einsum("...iki->...k", grad)
    sym_n = np.einsum("...hkl,...l->...hk", grad, n) + np.einsum("...lkh,...l->...hk", grad, n)
    return moduli.lam * n[..., :, None] * div[..., None, :] + moduli.mu * sym_n


def kelvin_traction(x, n, moduli: ElasticModuli) -> np.ndarray:
    """Conormal derivative of the Kelvin columns, closed form.

    ``x`` is field point minus pole, ``n`` the unit normal at the field
    point. Returns ``T[..., h, k]``.
    """
    x = np.asarray(x, dtype=float)
    n = np.asarray(n, dtype=float)
    r = _rnorm(x)
    _check_nonzero(r)
    nu = moduli.nu
    rr = r[..., None, None]
    grad_inv = -x / r[..., None] ** 3                  # d(1/r)/dx
    dn_inv = np.einsum("...i,...i->...", n, grad_inv)[..., None, None]
    rhat = x / r[..., None]
    anti = n[..., None, :] * grad_inv[..., :, None] - n[..., :, None] * grad_inv[..., None, :]
    # anti[h, k] = n_k d_h(1/r) - n_h d_k(1/r)
    body = ((1.0 - 2.0 * nu) * _EYE + 3.0 * rhat[..., :, None] * rhat[..., None, :]) * dn_inv
    del rr
    return -((1.0 - 2.0 * nu) * anti + body) / (8.0 * np.pi * (1.0 - nu))


def _check_halfspace(x, y):
    x = np.asarray(x)
    y = np.asarray(y, dtype=float)
    x3 = np.real(x[..., 2])
    if np.any(x3 > 0.0) or np.any(y[..., 2] > 0.0) or np.any(x3 + y[..., 2] >= 0.0):
        raise InvalidHalfSpacePoint(
            "need x3 <= 0, y3 <= 0 and x3 + y3 < 0 (image point strictly above the surface)")


def _regular_terms(eta, y3, nu, cmn, cnu):
    """R1, R2, R3 at eta = x - reflected(y); complex-safe."""
    fe = 1.0 / _rnorm(eta)
    ge = 1.0 / (1.0 / fe - eta[..., 2])
    fe = fe[..., None, None]
    ge = ge[..., None, None]
    ei = eta[..., :, None]
    ej = eta[..., None, :]
    e3 = eta[..., 2][..., None, None]
    d3 = _E3
    di3 = d3[:, None]           # delta_{i3}
    dj3 = d3[None, :]           # delta_{j3}
    a = 3.0 - 4.0 * nu
    r1 = cmn * (-(fe + cnu * ge) * _EYE - a * ei * ej * fe ** 3
                + cnu * (di3 * ej - dj3 * (1.0 - di3) * ei) * fe * ge
                + cnu * (1.0 - di3) * (1.0 - dj3) * ei * ej * fe * ge ** 2)
    sgn = 1.0 - 2.0 * dj3
    r2 = 2.0 * cmn * (a * (di3 * (1.0 - dj3) * ej + dj3 * (1.0 - di3) * ei) * fe ** 3
                      - sgn * _EYE * e3 * fe ** 3
                      + 3.0 * sgn * ei * ej * e3 * fe ** 5)
    r3 = 2.0 * cmn * sgn * (_EYE * fe ** 3 - 3.0 * ei * ej * fe ** 5)
    return r1, r2, r3


def _regular_raw(x, y, nu, cmn, cnu):
    y = np.asarray(y, dtype=float)
    eta = x - y * np.array([1.0, 1.0, -1.0])
    r1, r2, r3 = _regular_terms(eta, None, nu, cmn, cnu)
    y3 = y[..., 2][..., None, None]
    return r1 + _fault["r2_sign"] * y3 * r2 + y3 ** 2 * r3


def regular_part(x, y, moduli: ElasticModuli) -> np.ndarray:
    """Smooth part R(x, y) of the half-space Neumann function.

    ``x`` is the field point and ``y`` the pole. Both lie in the closed
    lower half-space and may not both sit on the surface.
    """
    x = np.asarray(x, dtype=float)
    _check_halfspace(x, y)
    return _regular_raw(x, y, moduli.nu, moduli.cmn, moduli.cnu)


def regular_components(x, y, moduli: ElasticModuli):
    """(R1, R2, R3) evaluated at x - reflected(y), without the y3 weights."""
    x = np.asarray(x, dtype=float)
    _check_halfspace(x, y)
    eta = x - np.asarray(y, dtype=float) * np.array([1.0, 1.0, -1.0])
    return _regular_terms(eta, None, moduli.nu, moduli.cmn, moduli.cnu)


def regular_grad(x, y, moduli: ElasticModuli) -> np.ndarray:
    """``[..., i, j, k] = d R_ij / d x_k`` by complex step."""
    x = np.asarray(x, dtype=float)
    _check_halfspace(x, y)
    out = np.empty(np.broadcast_shapes(x.shape, np.shape(y))[:-1] + (3, 3, 3))
    for k in range(3):
        xc = x + 1j * _CSTEP * _EYE[k]
        out[..., k] = _regular_raw(xc, y, moduli.nu, moduli.cmn, moduli.cnu).imag / _CSTEP
    return out


def neumann(x, y, moduli: ElasticModuli) -> np.ndarray:
    """Half-space Neumann function N(x, y) = Gamma(x - y) + R(x, y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return kelvin(x - y, moduli) + regular_part(x, y, moduli)


def neumann_grad(x, y, moduli: ElasticModuli) -> np.ndarray:
    """x-gradient of N, ``[..., i, j, k] = d N_ij / d x_k``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return kelvin_grad(x - y, moduli) + regular_grad(x, y, moduli)


def regular_traction(x, n, y, moduli: ElasticModuli) -> np.ndarray:
    return traction_from_grad(regular_grad(x, y, moduli), n, moduli)


def neumann_traction(x, n, y, moduli: ElasticModuli) -> np.ndarray:
    """Conormal derivative in x of the columns of N(., y): ``T[..., h, k]``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return kelvin_traction(x - y, n, moduli) + regular_traction(x, n, y, moduli)


def unit_depth_neumann(x, moduli: ElasticModuli) -> np.ndarray:
    """Neumann matrix for a unit force at -e3, written with the image
    potentials phi(x + e3), phi(x - e3) and psi(x - e3).

    Independent of :func:`regular_part`; used as a cross-check through
    ``N(x, y) = N_unit((x1 - y1, x2 - y2, x3) / |y3|) / |y3|``.
    """
    x = np.asarray(x, dtype=float)
    nu, cmn, cnu = moduli.nu, moduli.cmn, moduli.cnu
    a = 3.0 - 4.0 * nu
    xm = x - _E3
    ph = 1.0 / _rnorm(x + _E3)
    pt = 1.0 / _rnorm(xm)
    qt = 1.0 / (_rnorm(xm) - xm[..., 2])
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    out = np.empty(x.shape[:-1] + (3, 3))
    for al, xa in ((0, x1), (1, x2)):
        out[..., al, al] = -cmn * (a * ph + xa ** 2 * ph ** 3 + pt + (a * xa ** 2 - 2.0 * x3) * pt ** 3
                                   + 6.0 * xa ** 2 * x3 * pt ** 5 + cnu * (qt - xa ** 2 * pt * qt ** 2))
        out[..., 2, al] = -cmn * xa * ((x3 + 1.0) * ph ** 3 + a * (x3 + 1.0) * pt ** 3
                                       + 6.0 * x3 * (x3 - 1.0) * pt ** 5 - cnu * pt * qt)
        out[..., al, 2] = -cmn * xa * ((x3 + 1.0) * ph ** 3 + a * (x3 + 1.0) * pt ** 3
                                       - 6.0 * x3 * (x3 - 1.0) * pt ** 5 + cnu * pt * qt)
    off = -cmn * x1 * x2 * (ph ** 3 + a * pt ** 3 + 6.0 * x3 * pt ** 5 - cnu * pt * qt ** 2)
    out[..., 0, 1] = off
    out[..., 1, 0] = off
    out[..., 2, 2] = -cmn * (a * ph + (x3 + 1.0) ** 2 * ph ** 3 + (1.0 + cnu) * pt
                             + (a * (x3 - 1.0) ** 2 + 2.0 * x3) * pt ** 3
                             - 6.0 * x3 * (x3 - 1.0) ** 2 * pt ** 5)
    return out


def neumann_via_unit_depth(x, y, moduli: ElasticModuli) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = np.abs(y[..., 2])
    if np.any(d <= 0.0):
        raise InvalidHalfSpacePoint("unit-depth scaling needs y3 < 0")
    xi = np.stack([x[..., 0] - y[..., 0], x[..., 1] - y[..., 1], x[..., 2]], axis=-1) / d[..., None]
    return unit_depth_neumann(xi, moduli) / d[..., None, None]
