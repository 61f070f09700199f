# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled panel-integration primitives.

Same contract as :mod:`mogibem._core_py`; see that module for the kernel
kinds. The regular-part gradient is taken by complex step, evaluated with
C99 complex arithmetic.
"""
import numpy as np
from libc.math cimport sqrt, M_PI

cdef extern from "complex.h" nogil:
    double complex csqrt(double complex)

cdef double CSTEP = 1e-30

cdef enum:
    KIND_S = 0
    KIND_K = 1
    KIND_KS = 2
    KIND_SR = 3
    KIND_DR = 4

_KIND_CODES = {"S": KIND_S, "K": KIND_K, "KS": KIND_KS, "SR": KIND_SR, "DR": KIND_DR}


cdef struct Params:
    double lam, mu, nu, cmn, cnu, r2sign


cdef Params _params(object p):
    cdef Params out
    out.lam = p[0]
    out.mu = p[1]
    out.nu = p[2]
    out.cmn = p[3]
    out.cnu = p[4]
    out.r2sign = p[5] if len(p) > 5 else 1.0
    return out


cdef inline void kelvin(const double* x, const Params* P, double* g) noexcept nogil:
    cdef double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2]
    cdef double r = sqrt(r2)
    cdef double a = (3.0 - 4.0 * P.nu) / r
    cdef double r3 = r2 * r
    cdef int i, j
    for i in range(3):
        for j in range(3):
            g[3 * i + j] = -P.cmn * ((a if i == j else 0.0) + x[i] * x[j] / r3)


cdef inline void kelvin_traction(const double* x, const double* n, const Params* P,
                                 double* t) noexcept nogil:
    # t[3h + k]: h-th traction component of column k
    cdef double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2]
    cdef double r = sqrt(r2)
    cdef double r3 = r2 * r
    cdef double d[3]
    cdef double dn = 0.0, b = 1.0 - 2.0 * P.nu
    cdef double pref = -1.0 / (8.0 * M_PI * (1.0 - P.nu))
    cdef int h, k
    for h in range(3):
        d[h] = -x[h] / r3
        dn += n[h] * d[h]
    for h in range(3):
        for k in range(3):
            t[3 * h + k] = pref * (b * (n[k] * d[h] - n[h] * d[k])
                                   + ((b if h == k else 0.0) + 3.0 * x[h] * x[k] / r2) * dn)


cdef inline void regular_c(const double complex* x, const double* y, const Params* P,
                           double complex* R) noexcept nogil:
    # R(x, y) for field x (complex) and pole y, row-major 3x3
    cdef double complex e[3]
    e[0] = x[0] - y[0]
    e[1] = x[1] - y[1]
    e[2] = x[2] + y[2]
    cdef double complex rn = csqrt(e[0] * e[0] + e[1] * e[1] + e[2] * e[2])
    cdef double complex fe = 1.0 / rn
    cdef double complex ge = 1.0 / (rn - e[2])
    cdef double complex fe3 = fe * fe * fe
    cdef double complex fe5 = fe3 * fe * fe
    cdef double a = 3.0 - 4.0 * P.nu
    cdef double cmn = P.cmn, cnu = P.cnu
    cdef double y3 = y[2]
    cdef double di3, dj3, dij, sgn
    cdef double complex r1, r2, r3
    cdef int i, j
    for i in range(3):
        di3 = 1.0 if i == 2 else 0.0
        for j in range(3):
            dj3 = 1.0 if j == 2 else 0.0
            dij = 1.0 if i == j else 0.0
            sgn = 1.0 - 2.0 * dj3
            r1 = cmn * (-(fe + cnu * ge) * dij - a * e[i] * e[j] * fe3
                        + cnu * (di3 * e[j] - dj3 * (1.0 - di3) * e[i]) * fe * ge
                        + cnu * (1.0 - di3) * (1.0 - dj3) * e[i] * e[j] * fe * ge * ge)
            r2 = 2.0 * cmn * (a * (di3 * (1.0 - dj3) * e[j] + dj3 * (1.0 - di3) * e[i]) * fe3
                              - sgn * dij * e[2] * fe3
                              + 3.0 * sgn * e[i] * e[j] * e[2] * fe5)
            r3 = 2.0 * cmn * sgn * (dij * fe3 - 3.0 * e[i] * e[j] * fe5)
            R[3 * i + j] = r1 + P.r2sign * y3 * r2 + y3 * y3 * r3


cdef inline void regular(const double* x, const double* y, const Params* P,
                         double* R) noexcept nogil:
    cdef double complex xc[3]
    cdef double complex Rc[9]
    cdef int i
    for i in range(3):
        xc[i] = x[i]
    regular_c(xc, y, P, Rc)
    for i in range(9):
        R[i] = Rc[i].real


cdef inline void regular_traction(const double* x, const double* n, const double* y,
                                  const Params* P, double* t) noexcept nogil:
    # gradient g[i][k][l] = d R_ik / d x_l via complex step, then traction t[3h + k]
    cdef double g[27]
    cdef double complex xc[3]
    cdef double complex Rc[9]
    cdef double div[3]
    cdef int i, k, l, h
    cdef double s
    for l in range(3):
        for i in range(3):
            xc[i] = x[i]
        xc[l] = xc[l] + 1j * CSTEP
        regular_c(xc, y, P, Rc)
        for i in range(9):
            g[3 * i + l] = Rc[i].imag / CSTEP
    for k in range(3):
        div[k] = g[9 * 0 + 3 * k + 0] + g[9 * 1 + 3 * k + 1] + g[9 * 2 + 3 * k + 2]
    for h in range(3):
        for k in range(3):
            s = 0.0
            for l in range(3):
                s += (g[9 * h + 3 * k + l] + g[9 * l + 3 * k + h]) * n[l]
            t[3 * h + k] = P.lam * n[h] * div[k] + P.mu * s


cdef inline void block(int kind, const double* c, const double* m, const double* y,
                       const double* n, const Params* P, double* out) noexcept nogil:
    """3x3 block (row-major) for one target/source point pair."""
    cdef double r[3]
    cdef double tmp[9]
    cdef int a, b
    if kind == KIND_S:
        for a in range(3):
            r[a] = c[a] - y[a]
        kelvin(r, P, out)
    elif kind == KIND_K:
        for a in range(3):
            r[a] = y[a] - c[a]
        kelvin_traction(r, n, P, tmp)
        for a in range(3):
            for b in range(3):
                out[3 * a + b] = tmp[3 * b + a]
    elif kind == KIND_KS:
        for a in range(3):
            r[a] = c[a] - y[a]
        kelvin_traction(r, m, P, out)
    elif kind == KIND_SR:
        regular(y, c, P, tmp)
        for a in range(3):
            for b in range(3):
                out[3 * a + b] = tmp[3 * b + a]
    else:
        regular_traction(y, n, c, P, tmp)
        for a in range(3):
            for b in range(3):
                out[3 * a + b] = tmp[3 * b + a]


def _kind(str kind):
    try:
        return _KIND_CODES[kind]
    except KeyError:
        raise ValueError(f"unknown kernel kind {kind!r}") from None


def dense_blocks(str kind, const double[:, ::1] targets, const double[:, ::1] tnormals,
                 const double[:, :, ::1] qpts, const double[:, ::1] qwts, const double[:, ::1] snormals,
                 params, double[::1, :] out, bint skip_diag=False, bint add=False):
    """Write (or with ``add`` accumulate) into ``out[3i:3i+3, 3j:3j+3]`` the
    integral over panel j seen from target i. With ``skip_diag`` the i == j
    blocks are left untouched."""
    cdef int code = _kind(kind)
    cdef Params P = _params(params)
    cdef Py_ssize_t M = targets.shape[0], N = qpts.shape[0], Q = qpts.shape[1]
    cdef Py_ssize_t i, j, q
    cdef int a
    cdef double acc[9]
    cdef double blk[9]
    cdef double w
    if out.shape[0] != 3 * M or out.shape[1] != 3 * N:
        raise ValueError("output matrix has the wrong shape")
    with nogil:
        for j in range(N):
            for i in range(M):
                if skip_diag and i == j:
                    continue
                for a in range(9):
                    acc[a] = 0.0
                for q in range(Q):
                    w = qwts[j, q]
                    if w == 0.0:
                        continue
                    block(code, &targets[i, 0], &tnormals[i, 0], &qpts[j, q, 0],
                          &snormals[j, 0], &P, blk)
                    for a in range(9):
                        acc[a] += w * blk[a]
                if add:
                    for a in range(9):
                        out[3 * i + a // 3, 3 * j + a % 3] += acc[a]
                else:
                    for a in range(9):
                        out[3 * i + a // 3, 3 * j + a % 3] = acc[a]
    return np.asarray(out)


def pair_blocks(str kind, const double[:, ::1] targets, const double[:, ::1] tnormals,
                const double[:, ::1] pts, const double[::1] wts, const double[:, ::1] snormals,
                const long[::1] offsets, params):
    """Integrate one (target, panel) pair per row: returns (P, 3, 3).

    Points of pair p are ``pts[offsets[p]:offsets[p + 1]]`` (CSR layout).
    """
    cdef int code = _kind(kind)
    cdef Params P = _params(params)
    cdef Py_ssize_t NP = targets.shape[0]
    if offsets.shape[0] != NP + 1 or offsets[NP] > pts.shape[0] or wts.shape[0] != pts.shape[0]:
        raise ValueError("inconsistent pair layout")
    result = np.zeros((NP, 3, 3))
    cdef double[:, :, ::1] res = result
    cdef Py_ssize_t p, q
    cdef int a
    cdef double blk[9]
    cdef double w
    with nogil:
        for p in range(NP):
            for q in range(offsets[p], offsets[p + 1]):
                w = wts[q]
                if w == 0.0:
                    continue
                block(code, &targets[p, 0], &tnormals[p, 0], &pts[q, 0],
                      &snormals[p, 0], &P, blk)
                for a in range(9):
                    res[p, a // 3, a % 3] += w * blk[a]
    return result


def potential(str kind, const double[:, ::1] targets, const double[:, ::1] tnormals,
              const double[:, :, ::1] qpts, const double[:, ::1] qwts, const double[:, ::1] snormals,
              const double[:, :, ::1] dens, params, bint skip_diag=False):
    """Apply the operator to R densities ``(R, N, 3)`` without storing the
    matrix; returns ``(R, M, 3)``."""
    cdef int code = _kind(kind)
    cdef Params P = _params(params)
    cdef Py_ssize_t M = targets.shape[0], N = qpts.shape[0], Q = qpts.shape[1]
    cdef Py_ssize_t R = dens.shape[0]
    if dens.shape[1] != N or dens.shape[2] != 3:
        raise ValueError("density has the wrong shape")
    result = np.zeros((R, M, 3))
    cdef double[:, :, ::1] res = result
    cdef Py_ssize_t i, j, q, s
    cdef int a, b
    cdef double acc[9]
    cdef double blk[9]
    cdef double w, v
    with nogil:
        for i in range(M):
            for j in range(N):
                if skip_diag and i == j:
                    continue
                for a in range(9):
                    acc[a] = 0.0
                for q in range(Q):
                    w = qwts[j, q]
                    if w == 0.0:
                        continue
                    block(code, &targets[i, 0], &tnormals[i, 0], &qpts[j, q, 0],
                          &snormals[j, 0], &P, blk)
                    for a in range(9):
                        acc[a] += w * blk[a]
                for s in range(R):
                    for a in range(3):
                        v = 0.0
                        for b in range(3):
                            v += acc[3 * a + b] * dens[s, j, b]
                        res[s, i, a] += v
    return result
