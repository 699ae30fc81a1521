# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled stencil kernels; same contract as ``_kernels_py``."""
import numpy as np
cimport cython
from cython.parallel cimport prange

ctypedef double complex cdouble

ctypedef fused num:
    double
    cdouble

cdef extern from *:
    """
    #ifdef _OPENMP
    #include <omp.h>
    static void kds_set_threads(int n) { omp_set_num_threads(n); }
    static int kds_max_threads(void) { return omp_get_max_threads(); }
    #else
    static void kds_set_threads(int n) { (void)n; }
    static int kds_max_threads(void) { return 1; }
    #endif
    """
    void kds_set_threads(int n) nogil
    int kds_max_threads() nogil


def set_num_threads(int n):
    kds_set_threads(n if n > 0 else 1)


def get_num_threads():
    return kds_max_threads()


cdef inline num _d1(num[:, :, ::1] u, Py_ssize_t c, Py_ssize_t i, Py_ssize_t j,
                    Py_ssize_t nr, double s) noexcept nogil:
    if i >= 2 and i < nr - 2:
        return (u[c, i - 2, j] - 8.0 * u[c, i - 1, j] + 8.0 * u[c, i + 1, j]
                - u[c, i + 2, j]) * s
    if i == 0:
        return (-25.0 * u[c, 0, j] + 48.0 * u[c, 1, j] - 36.0 * u[c, 2, j]
                + 16.0 * u[c, 3, j] - 3.0 * u[c, 4, j]) * s
    if i == 1:
        return (-3.0 * u[c, 0, j] - 10.0 * u[c, 1, j] + 18.0 * u[c, 2, j]
                - 6.0 * u[c, 3, j] + u[c, 4, j]) * s
    if i == nr - 1:
        return -(-25.0 * u[c, nr - 1, j] + 48.0 * u[c, nr - 2, j] - 36.0 * u[c, nr - 3, j]
                 + 16.0 * u[c, nr - 4, j] - 3.0 * u[c, nr - 5, j]) * s
    return -(-3.0 * u[c, nr - 1, j] - 10.0 * u[c, nr - 2, j] + 18.0 * u[c, nr - 3, j]
             - 6.0 * u[c, nr - 4, j] + u[c, nr - 5, j]) * s


cdef inline num _d2(num[:, :, ::1] u, Py_ssize_t c, Py_ssize_t i, Py_ssize_t j,
                    Py_ssize_t nr, double s) noexcept nogil:
    if i >= 2 and i < nr - 2:
        return (-u[c, i - 2, j] + 16.0 * u[c, i - 1, j] - 30.0 * u[c, i, j]
                + 16.0 * u[c, i + 1, j] - u[c, i + 2, j]) * s
    if i == 0:
        return (45.0 * u[c, 0, j] - 154.0 * u[c, 1, j] + 214.0 * u[c, 2, j]
                - 156.0 * u[c, 3, j] + 61.0 * u[c, 4, j] - 10.0 * u[c, 5, j]) * s
    if i == 1:
        return (10.0 * u[c, 0, j] - 15.0 * u[c, 1, j] - 4.0 * u[c, 2, j]
                + 14.0 * u[c, 3, j] - 6.0 * u[c, 4, j] + u[c, 5, j]) * s
    if i == nr - 1:
        return (45.0 * u[c, nr - 1, j] - 154.0 * u[c, nr - 2, j] + 214.0 * u[c, nr - 3, j]
                - 156.0 * u[c, nr - 4, j] + 61.0 * u[c, nr - 5, j] - 10.0 * u[c, nr - 6, j]) * s
    return (10.0 * u[c, nr - 1, j] - 15.0 * u[c, nr - 2, j] - 4.0 * u[c, nr - 3, j]
            + 14.0 * u[c, nr - 4, j] - 6.0 * u[c, nr - 5, j] + u[c, nr - 6, j]) * s


cdef inline num _th(num[:, :, ::1] u, Py_ssize_t c, Py_ssize_t i, Py_ssize_t j,
                    Py_ssize_t nt, double p) noexcept nogil:
    if j < 0:
        return p * u[c, i, -1 - j]
    if j >= nt:
        return p * u[c, i, 2 * nt - 1 - j]
    return u[c, i, j]


cdef inline num _t1(num[:, :, ::1] u, Py_ssize_t c, Py_ssize_t i, Py_ssize_t j,
                    Py_ssize_t nt, double p, double s) noexcept nogil:
    if j >= 2 and j < nt - 2:
        return (u[c, i, j - 2] - 8.0 * u[c, i, j - 1] + 8.0 * u[c, i, j + 1]
                - u[c, i, j + 2]) * s
    return (_th(u, c, i, j - 2, nt, p) - 8.0 * _th(u, c, i, j - 1, nt, p)
            + 8.0 * _th(u, c, i, j + 1, nt, p) - _th(u, c, i, j + 2, nt, p)) * s


cdef inline num _t2(num[:, :, ::1] u, Py_ssize_t c, Py_ssize_t i, Py_ssize_t j,
                    Py_ssize_t nt, double p, double s) noexcept nogil:
    if j >= 2 and j < nt - 2:
        return (-u[c, i, j - 2] + 16.0 * u[c, i, j - 1] - 30.0 * u[c, i, j]
                + 16.0 * u[c, i, j + 1] - u[c, i, j + 2]) * s
    return (-_th(u, c, i, j - 2, nt, p) + 16.0 * _th(u, c, i, j - 1, nt, p)
            - 30.0 * u[c, i, j] + 16.0 * _th(u, c, i, j + 1, nt, p)
            - _th(u, c, i, j + 2, nt, p)) * s


def dr1(num[:, :, ::1] u, double h):
    cdef Py_ssize_t nc = u.shape[0], nr = u.shape[1], nt = u.shape[2]
    cdef Py_ssize_t c, i, j
    cdef double s = 1.0 / (12.0 * h)
    out = np.empty_like(np.asarray(u))
    cdef num[:, :, ::1] o = out
    for c in range(nc):
        for i in prange(nr, nogil=True, schedule="static"):
            for j in range(nt):
                o[c, i, j] = _d1(u, c, i, j, nr, s)
    return out


def dr2(num[:, :, ::1] u, double h):
    cdef Py_ssize_t nc = u.shape[0], nr = u.shape[1], nt = u.shape[2]
    cdef Py_ssize_t c, i, j
    cdef double s = 1.0 / (12.0 * h * h)
    out = np.empty_like(np.asarray(u))
    cdef num[:, :, ::1] o = out
    for c in range(nc):
        for i in prange(nr, nogil=True, schedule="static"):
            for j in range(nt):
                o[c, i, j] = _d2(u, c, i, j, nr, s)
    return out


def dth1(num[:, :, ::1] u, parity, double h):
    cdef Py_ssize_t nc = u.shape[0], nr = u.shape[1], nt = u.shape[2]
    cdef Py_ssize_t c, i, j
    cdef double s = 1.0 / (12.0 * h)
    cdef double[::1] par = np.array(np.broadcast_to(parity, (nc,)), dtype=float)
    cdef double p
    out = np.empty_like(np.asarray(u))
    cdef num[:, :, ::1] o = out
    for c in range(nc):
        p = par[c]
        for i in prange(nr, nogil=True, schedule="static"):
            for j in range(nt):
                o[c, i, j] = _t1(u, c, i, j, nt, p, s)
    return out


def dth2(num[:, :, ::1] u, parity, double h):
    cdef Py_ssize_t nc = u.shape[0], nr = u.shape[1], nt = u.shape[2]
    cdef Py_ssize_t c, i, j
    cdef double s = 1.0 / (12.0 * h * h)
    cdef double[::1] par = np.array(np.broadcast_to(parity, (nc,)), dtype=float)
    cdef double p
    out = np.empty_like(np.asarray(u))
    cdef num[:, :, ::1] o = out
    for c in range(nc):
        p = par[c]
        for i in prange(nr, nogil=True, schedule="static"):
            for j in range(nt):
                o[c, i, j] = _t2(u, c, i, j, nt, p, s)
    return out


def ko_dissipation(num[:, :, ::1] u, parity, double sigma, double h_r, double h_t):
    cdef Py_ssize_t nc = u.shape[0], nr = u.shape[1], nt = u.shape[2]
    cdef Py_ssize_t c, i, j
    cdef double sr = sigma / (64.0 * h_r), st = sigma / (64.0 * h_t)
    cdef double[::1] par = np.array(np.broadcast_to(parity, (nc,)), dtype=float)
    cdef double p
    cdef num acc
    out = np.zeros_like(np.asarray(u))
    cdef num[:, :, ::1] o = out
    for c in range(nc):
        p = par[c]
        for i in prange(nr, nogil=True, schedule="static"):
            for j in range(nt):
                acc = (_th(u, c, i, j - 3, nt, p) - 6.0 * _th(u, c, i, j - 2, nt, p)
                       + 15.0 * _th(u, c, i, j - 1, nt, p) - 20.0 * u[c, i, j]
                       + 15.0 * _th(u, c, i, j + 1, nt, p) - 6.0 * _th(u, c, i, j + 2, nt, p)
                       + _th(u, c, i, j + 3, nt, p)) * st
                if i >= 3 and i < nr - 3:
                    acc = acc + (u[c, i - 3, j] - 6.0 * u[c, i - 2, j] + 15.0 * u[c, i - 1, j]
                                 - 20.0 * u[c, i, j] + 15.0 * u[c, i + 1, j]
                                 - 6.0 * u[c, i + 2, j] + u[c, i + 3, j]) * sr
                o[c, i, j] = acc
    return out


def _scalar_rhs_impl(num[:, :, ::1] u, num[:, :, ::1] v, double[:, :, ::1] coef,
                     double complex im, double m2, double h_r, double h_t,
                     double[::1] par, num[:, :, ::1] f, bint has_f, bint rotating):
    cdef Py_ssize_t nc = u.shape[0], nr = u.shape[1], nt = u.shape[2]
    cdef Py_ssize_t c, i, j
    cdef double s1r = 1.0 / (12.0 * h_r)
    cdef double s1t = 1.0 / (12.0 * h_t), s2t = 1.0 / (12.0 * h_t * h_t)
    cdef double p
    cdef num rest
    ua = np.asarray(u)
    out = np.empty_like(ua)
    ur_a = np.empty_like(ua)
    pv_a = np.empty_like(ua)
    q_a = np.empty_like(ua)
    rr_a = np.empty_like(ua)
    cdef num[:, :, ::1] o = out
    cdef num[:, :, ::1] ur = ur_a
    cdef num[:, :, ::1] pv = pv_a
    cdef num[:, :, ::1] q = q_a
    cdef num[:, :, ::1] rr = rr_a
    for c in range(nc):
        p = par[c]
        for i in prange(nr, nogil=True, schedule="static"):
            for j in range(nt):
                ur[c, i, j] = _d1(u, c, i, j, nr, s1r)
                pv[c, i, j] = coef[1, i, j] * v[c, i, j]
                rr[c, i, j] = coef[5, i, j] * u[c, i, j]
        for i in prange(nr, nogil=True, schedule="static"):
            for j in range(nt):
                q[c, i, j] = coef[2, i, j] * ur[c, i, j]
        for i in prange(nr, nogil=True, schedule="static"):
            for j in range(nt):
                rest = (_d1(pv, c, i, j, nr, s1r) + coef[1, i, j] * _d1(v, c, i, j, nr, s1r)
                        + _d1(q, c, i, j, nr, s1r)
                        + coef[3, i, j] * _t2(u, c, i, j, nt, p, s2t)
                        + coef[4, i, j] * _t1(u, c, i, j, nt, p, s1t))
                if num is cdouble:
                    if rotating:
                        rest = rest + (im * (_d1(rr, c, i, j, nr, s1r) + coef[5, i, j] * ur[c, i, j])
                                       + 2.0 * im * coef[6, i, j] * v[c, i, j]
                                       - m2 * coef[7, i, j] * u[c, i, j])
                if has_f:
                    rest = rest - coef[8, i, j] * f[c, i, j]
                o[c, i, j] = -rest / coef[0, i, j]
    return out


def scalar_rhs(u, v, coef, int m, double h_r, double h_t, parity, forcing=None):
    coef = np.ascontiguousarray(coef, dtype=float)
    nc = np.shape(u)[0]
    cdef double[::1] par = np.array(np.broadcast_to(parity, (nc,)), dtype=float)
    if m != 0 and not np.iscomplexobj(u):
        u = u.astype(complex)
    if np.iscomplexobj(u) or np.iscomplexobj(v) or (forcing is not None and np.iscomplexobj(forcing)):
        u = np.ascontiguousarray(u, dtype=complex)
        v = np.ascontiguousarray(v, dtype=complex)
        f = u if forcing is None else np.ascontiguousarray(forcing, dtype=complex)
        return _scalar_rhs_impl(u, v, coef, 1j * m, float(m * m), h_r, h_t, par, f,
                                forcing is not None, m != 0)
    u = np.ascontiguousarray(u, dtype=float)
    v = np.ascontiguousarray(v, dtype=float)
    f = u if forcing is None else np.ascontiguousarray(forcing, dtype=float)
    return _scalar_rhs_impl(u, v, coef, 0j, 0.0, h_r, h_t, par, f, forcing is not None,
                            False)


def contract_operator(double[:, :, :, :, ::1] coef, double[:, :, :, ::1] jets):
    cdef Py_ssize_t nr = coef.shape[0], nt = coef.shape[1]
    cdef Py_ssize_t nout = coef.shape[2], nin = coef.shape[3], ns = coef.shape[4]
    cdef Py_ssize_t i, j, c, k, s
    cdef double acc
    out = np.empty((nout, nr, nt))
    cdef double[:, :, ::1] o = out
    for i in prange(nr, nogil=True, schedule="static"):
        for j in range(nt):
            for c in range(nout):
                acc = 0.0
                for k in range(nin):
                    for s in range(ns):
                        acc = acc + coef[i, j, c, k, s] * jets[k, s, i, j]
                o[c, i, j] = acc
    return out
