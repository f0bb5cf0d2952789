# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled elliptic kernels; drop-in replacement for ``_kernel_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport M_PI, INFINITY, NAN, rint

cdef extern from "<complex.h>" nogil:
    double complex csin(double complex)
    double complex ccos(double complex)
    double complex cexp(double complex)
    double cabs(double complex)

cnp.import_array()

NAME = "compiled"


cdef struct Params:
    double complex w1
    double complex w2
    double tau_re
    double tau_im
    double complex eta1
    double complex eta2
    double rsing
    int K


cdef Params _unpack(kp):
    cdef Params P
    P.w1 = kp.w1
    P.w2 = kp.w2
    P.tau_re = kp.tau_re
    P.tau_im = kp.tau_im
    P.eta1 = kp.eta1
    P.eta2 = kp.eta2
    P.rsing = kp.rsing
    P.K = len(kp.coef)
    return P


cdef inline double complex _reduce(double complex z, Params* P, double* m, double* n,
                                   double* dist) nogil:
    cdef double complex t = z / (2.0 * P.w1)
    cdef double b = t.imag / P.tau_im
    cdef double a = t.real - b * P.tau_re
    cdef double complex zr, d
    cdef double best = INFINITY, r
    cdef int i, j
    m[0] = rint(a)
    n[0] = rint(b)
    zr = z - 2.0 * m[0] * P.w1 - 2.0 * n[0] * P.w2
    for i in range(-2, 3):
        for j in range(-2, 3):
            d = zr - 2.0 * i * P.w1 - 2.0 * j * P.w2
            r = cabs(d)
            if r < best:
                best = r
    dist[0] = best
    return zr


cdef void _wp4(double complex z, Params* P, const double complex* coef, int nder,
               double complex* out, double* dist) nogil:
    """wp and derivatives up to ``nder`` at one point."""
    cdef double m, n
    cdef double complex zr = _reduce(z, P, &m, &n, dist)
    cdef int j
    if dist[0] <= P.rsing:
        for j in range(nder + 1):
            out[j] = NAN + 0j
        return
    cdef double complex k = M_PI / (2.0 * P.w1)
    cdef double complex v = k * zr
    cdef double complex s = csin(v)
    cdef double complex csc2 = 1.0 / (s * s)
    cdef double complex cot = ccos(v) / s
    # cos(2jv), sin(2jv) by the exponential recurrence
    cdef double complex ep = cexp(2j * v), em = 1.0 / ep
    cdef double complex pp = 1.0, pm = 1.0, c, sn, cj
    cdef double complex s0 = 0, s1 = 0, s2 = 0, s3 = 0
    cdef double jj
    for j in range(1, P.K + 1):
        pp = pp * ep
        pm = pm * em
        c = 0.5 * (pp + pm)
        sn = -0.5j * (pp - pm)
        cj = coef[j - 1]
        jj = j
        s0 = s0 + jj * cj * c
        s1 = s1 + jj * jj * cj * sn
        s2 = s2 + jj * jj * jj * cj * c
        s3 = s3 + jj * jj * jj * jj * cj * sn
    cdef double complex k2 = k * k
    out[0] = -P.eta1 / P.w1 + k2 * (csc2 - 8.0 * s0)
    if nder >= 1:
        out[1] = k2 * k * (-2.0 * csc2 * cot + 16.0 * s1)
    if nder >= 2:
        out[2] = k2 * k2 * (6.0 * csc2 * csc2 - 4.0 * csc2 + 32.0 * s2)
    if nder >= 3:
        out[3] = k2 * k2 * k * (-24.0 * csc2 * csc2 * cot + 8.0 * csc2 * cot - 64.0 * s3)


def reduce_args(z, kp):
    cdef Params P = _unpack(kp)
    cdef const double complex[::1] zv = np.ascontiguousarray(z, dtype=np.complex128).ravel()
    cdef Py_ssize_t i, N = zv.shape[0]
    zr = np.empty(N, dtype=np.complex128)
    mm = np.empty(N)
    nn = np.empty(N)
    dd = np.empty(N)
    cdef double complex[::1] zrv = zr
    cdef double[::1] mv = mm, nv = nn, dv = dd
    for i in range(N):
        zrv[i] = _reduce(zv[i], &P, &mv[i], &nv[i], &dv[i])
    return zr, mm, nn, dd


def wp_family(z, kp, int nder=3):
    cdef Params P = _unpack(kp)
    cdef const double complex[::1] zv = np.ascontiguousarray(z, dtype=np.complex128).ravel()
    cdef const double complex[::1] coef = np.ascontiguousarray(kp.coef, dtype=np.complex128)
    cdef Py_ssize_t i, N = zv.shape[0]
    cdef int k
    out = np.empty((nder + 1, N), dtype=np.complex128)
    dist = np.empty(N)
    cdef double complex[:, ::1] ov = out
    cdef double[::1] dv = dist
    cdef double complex buf[4]
    with nogil:
        for i in range(N):
            _wp4(zv[i], &P, &coef[0], nder, buf, &dv[i])
            for k in range(nder + 1):
                ov[k, i] = buf[k]
    return out, dist


def zeta_vals(z, kp):
    cdef Params P = _unpack(kp)
    cdef const double complex[::1] zv = np.ascontiguousarray(z, dtype=np.complex128).ravel()
    cdef const double complex[::1] coef = np.ascontiguousarray(kp.coef, dtype=np.complex128)
    cdef Py_ssize_t i, N = zv.shape[0]
    cdef int j
    cdef double m, n
    cdef double complex zr, v, ep, pp, acc
    cdef double complex k = M_PI / (2.0 * P.w1)
    out = np.empty(N, dtype=np.complex128)
    dist = np.empty(N)
    cdef double complex[::1] ov = out
    cdef double[::1] dv = dist
    for i in range(N):
        zr = _reduce(zv[i], &P, &m, &n, &dv[i])
        if dv[i] <= P.rsing:
            ov[i] = NAN + 0j
            continue
        v = k * zr
        ep = cexp(2j * v)
        pp = 1.0
        acc = 0
        for j in range(1, P.K + 1):
            pp = pp * ep
            acc = acc + coef[j - 1] * (-0.5j) * (pp - 1.0 / pp)
        ov[i] = (P.eta1 * zr / P.w1 + k * (ccos(v) / csin(v) + 4.0 * acc)
                 + 2.0 * m * P.eta1 + 2.0 * n * P.eta2)
    return out, dist


def sigma_parts(z, kp):
    cdef Params P = _unpack(kp)
    cdef const double complex[::1] zv = np.ascontiguousarray(z, dtype=np.complex128).ravel()
    cdef const double complex[::1] qpow = np.ascontiguousarray(kp.qpow, dtype=np.complex128)
    cdef Py_ssize_t i, N = zv.shape[0]
    cdef int j
    cdef double m, n
    cdef double complex zr, v, e2, prod, qp
    cdef double complex k = M_PI / (2.0 * P.w1)
    sig = np.empty(N, dtype=np.complex128)
    logf = np.empty(N, dtype=np.complex128)
    dist = np.empty(N)
    cdef double complex[::1] sv = sig, lv = logf
    cdef double[::1] dv = dist
    for i in range(N):
        zr = _reduce(zv[i], &P, &m, &n, &dv[i])
        v = k * zr
        e2 = cexp(2j * v)
        prod = 1.0
        for j in range(P.K):
            qp = qpow[j]
            prod = prod * (1.0 - qp * e2) * (1.0 - qp / e2) / ((1.0 - qp) * (1.0 - qp))
        sv[i] = cexp(P.eta1 * zr * zr / (2.0 * P.w1)) * csin(v) / k * prod
        lv[i] = ((2.0 * m * P.eta1 + 2.0 * n * P.eta2) * (zr + m * P.w1 + n * P.w2)
                 + 1j * M_PI * (m + n + m * n))
    return sig, logf, dist


def cm_rhs(x, p, int flow, kp):
    cdef const double complex[::1] xv = np.ascontiguousarray(x, dtype=np.complex128)
    cdef const double complex[::1] pv = np.ascontiguousarray(p, dtype=np.complex128)
    cdef Py_ssize_t N = xv.shape[0], i, j
    dx = np.zeros(N, dtype=np.complex128)
    dp = np.zeros(N, dtype=np.complex128)
    cdef double complex[::1] dxv = dx, dpv = dp
    if flow == 1:
        for i in range(N):
            dxv[i] = -1.0
        return dx, dp, INFINITY
    cdef Params P = _unpack(kp)
    cdef const double complex[::1] coef = np.ascontiguousarray(kp.coef, dtype=np.complex128)
    cdef double complex buf[4]
    cdef double d, mind = INFINITY
    with nogil:
        for i in range(N):
            for j in range(i + 1, N):
                _wp4(xv[i] - xv[j], &P, &coef[0], 1, buf, &d)
                if d < mind:
                    mind = d
                if flow == 2:
                    dpv[i] = dpv[i] + 2.0 * buf[1]
                    dpv[j] = dpv[j] - 2.0 * buf[1]
                else:
                    dxv[i] = dxv[i] + 3.0 * buf[0]
                    dxv[j] = dxv[j] + 3.0 * buf[0]
                    dpv[i] = dpv[i] - 3.0 * (pv[i] + pv[j]) * buf[1]
                    dpv[j] = dpv[j] + 3.0 * (pv[i] + pv[j]) * buf[1]
        for i in range(N):
            if flow == 2:
                dxv[i] = 2.0 * pv[i]
            else:
                dxv[i] = dxv[i] - 3.0 * pv[i] * pv[i]
    return dx, dp, mind


def bkp_rhs(x, alpha, kp):
    cdef const double complex[::1] xv = np.ascontiguousarray(x, dtype=np.complex128)
    cdef const double complex[::1] av = np.ascontiguousarray(alpha, dtype=np.complex128)
    cdef Py_ssize_t N = xv.shape[0], i, j
    cdef Params P = _unpack(kp)
    cdef const double complex[::1] coef = np.ascontiguousarray(kp.coef, dtype=np.complex128)
    dx = np.zeros(N, dtype=np.complex128)
    da = np.zeros(N, dtype=np.complex128)
    s1 = np.zeros(N, dtype=np.complex128)
    cdef double complex[::1] dxv = dx, dav = da, s1v = s1
    cdef double complex buf[4]
    cdef double d, mind = INFINITY
    with nogil:
        for i in range(N):
            for j in range(i + 1, N):
                _wp4(xv[i] - xv[j], &P, &coef[0], 3, buf, &d)
                if d < mind:
                    mind = d
                dxv[i] = dxv[i] + 6.0 * buf[0]
                dxv[j] = dxv[j] + 6.0 * buf[0]
                s1v[i] = s1v[i] + buf[1]
                s1v[j] = s1v[j] - buf[1]
                dav[i] = dav[i] + buf[3]
                dav[j] = dav[j] - buf[3]
        for i in range(N):
            dxv[i] = dxv[i] - 6.0 * av[i]
            dav[i] = dav[i] - 12.0 * av[i] * s1v[i]
    return dx, da, mind
