# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-symbol kernels.

Same contracts as `uwbjio._kernels_py`; plain loops over typed memoryviews so
the small-matrix recursions (M ~ 60, D ~ 3..8) run without per-call numpy
overhead.  All state arrays are mutated in place and must be C-contiguous
complex128.
"""

import numpy as np

from libc.math cimport sqrt

from uwbjio.jio_nsg import AdaptationError as _NsgError
from uwbjio.jio_rls import (
    AdaptationError as _RlsError,
    FLAG_COLUMN_CLAMPED,
    FLAG_COLUMN_ZERO,
    FLAG_RT_SKIPPED,
    FLAG_RY_SKIPPED,
)

IS_COMPILED = True

cdef double _TOL = 1e-12
cdef double _Y_FLOOR = 1e-6


cdef inline double _cabs2(double complex z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef int _rank1_inv(double complex[:, ::1] r_inv, double complex[::1] u,
                    double alpha, double complex[::1] kappa) except -1:
    """Shared inversion-lemma core; returns 1 when skipped."""
    cdef Py_ssize_t n = r_inv.shape[0], i, j
    cdef double complex acc, den, ki
    cdef double inv_alpha = 1.0 / alpha
    for i in range(n):
        acc = 0
        for j in range(n):
            acc = acc + r_inv[i, j] * u[j]
        kappa[i] = acc
    den = alpha
    for i in range(n):
        den = den + u[i].conjugate() * kappa[i]
    if abs(den) < 1e-12:
        return 1
    cdef double complex phi = 1.0 / den
    for i in range(n):
        ki = phi * kappa[i]
        for j in range(n):
            r_inv[i, j] = (r_inv[i, j] - ki * kappa[j].conjugate()) * inv_alpha
    return 0


def rank1_inv_update(double complex[:, ::1] r_inv, double complex[::1] u, double alpha):
    cdef double complex[::1] kappa = np.empty(r_inv.shape[0], dtype=np.complex128)
    return _rank1_inv(r_inv, u, alpha, kappa)


def leakage_update(double complex[:, :, ::1] w_stack, double complex[::1] r,
                   double leak, double mu):
    cdef Py_ssize_t m = w_stack.shape[0] - 1, n_rows = w_stack.shape[1]
    cdef Py_ssize_t n_cols = w_stack.shape[2], l, i, j
    cdef double complex[::1] proj = np.empty(n_cols, dtype=np.complex128)
    cdef double complex acc, ri
    for l in range(1, m + 1):
        for j in range(n_cols):
            acc = 0
            for i in range(n_rows):
                acc = acc + r[i].conjugate() * w_stack[l, i, j]
            proj[j] = acc
        for i in range(n_rows):
            ri = r[i]
            for j in range(n_cols):
                w_stack[l, i, j] = leak * w_stack[l, i, j] + mu * (
                    w_stack[l - 1, i, j] - ri * proj[j])


cdef double complex _output(double complex[:, ::1] t_mat, double complex[::1] w,
                            double complex[::1] r):
    cdef Py_ssize_t m = t_mat.shape[0], d_rank = t_mat.shape[1], i, d
    cdef double complex y = 0, acc
    for d in range(d_rank):
        acc = 0
        for i in range(m):
            acc = acc + t_mat[i, d].conjugate() * r[i]
        y = y + w[d].conjugate() * acc
    return y


cdef int _nsg_transform(double complex[:, ::1] t_mat, double complex[::1] w,
                        double complex[::1] r, double complex[::1] p,
                        double v, double mu_t0) except -1:
    cdef Py_ssize_t m = t_mat.shape[0], d_rank = t_mat.shape[1], i, d
    cdef double pn2 = 0, w2 = 0, rn2 = 0, a_t1, ay
    cdef double complex pr = 0, phtw = 0, acc, y = 0, coef, ratio, a_t3, gi, cw
    for i in range(m):
        pn2 = pn2 + _cabs2(p[i])
        rn2 = rn2 + _cabs2(r[i])
        pr = pr + p[i].conjugate() * r[i]
        acc = 0
        for d in range(d_rank):
            acc = acc + t_mat[i, d] * w[d]
        phtw = phtw + p[i].conjugate() * acc
    for d in range(d_rank):
        w2 = w2 + _cabs2(w[d])
    if pn2 < _TOL:
        raise _NsgError("zero signature estimate")
    if w2 < _TOL:
        raise _NsgError("zero reduced-rank filter; constraint unreachable")
    for d in range(d_rank):
        acc = 0
        for i in range(m):
            acc = acc + t_mat[i, d].conjugate() * r[i]
        y = y + w[d].conjugate() * acc
    a_t1 = w2 * (rn2 - _cabs2(pr) / pn2)
    a_t3 = (phtw - v) / (w2 * pn2)
    if a_t1 > _TOL:
        ay = abs(y)
        if ay < _Y_FLOOR:
            ay = _Y_FLOOR
        coef = mu_t0 * y.conjugate() * ((ay - 1.0) / (ay * a_t1))
        ratio = pr / pn2
        for i in range(m):
            gi = coef * (r[i] - ratio * p[i]) + a_t3 * p[i]
            for d in range(d_rank):
                t_mat[i, d] = t_mat[i, d] - gi * w[d].conjugate()
    else:
        for i in range(m):
            gi = a_t3 * p[i]
            for d in range(d_rank):
                t_mat[i, d] = t_mat[i, d] - gi * w[d].conjugate()
    return 0


cdef int _nsg_filter(double complex[:, ::1] t_mat, double complex[::1] w,
                     double complex[::1] r, double complex[::1] p,
                     double v, double mu_w0,
                     double complex[::1] rbar, double complex[::1] tp) except -1:
    cdef Py_ssize_t m = t_mat.shape[0], d_rank = t_mat.shape[1], i, d
    cdef double tp2 = 0, rb2 = 0, a_w1, ay
    cdef double complex s = 0, wtp = 0, y = 0, a_w3, coef, sc
    for d in range(d_rank):
        rbar[d] = 0
        tp[d] = 0
    for i in range(m):
        for d in range(d_rank):
            rbar[d] = rbar[d] + t_mat[i, d].conjugate() * r[i]
            tp[d] = tp[d] + t_mat[i, d].conjugate() * p[i]
    for d in range(d_rank):
        tp2 = tp2 + _cabs2(tp[d])
        rb2 = rb2 + _cabs2(rbar[d])
        s = s + rbar[d].conjugate() * tp[d]
        wtp = wtp + w[d].conjugate() * tp[d]
        y = y + w[d].conjugate() * rbar[d]
    if tp2 < _TOL:
        raise _NsgError("T^H p ~ 0: constraint unsatisfiable in the subspace")
    a_w1 = rb2 - _cabs2(s) / tp2
    a_w3 = (wtp.conjugate() - v) / tp2
    if a_w1 > _TOL:
        ay = abs(y)
        if ay < _Y_FLOOR:
            ay = _Y_FLOOR
        coef = mu_w0 * y.conjugate() * ((ay - 1.0) / (ay * a_w1))
        sc = s.conjugate() / tp2
        for d in range(d_rank):
            w[d] = w[d] - coef * (rbar[d] - sc * tp[d]) - a_w3 * tp[d]
    else:
        for d in range(d_rank):
            w[d] = w[d] - a_w3 * tp[d]
    return 0


def nsg_symbol(double complex[:, ::1] t_mat, double complex[::1] w,
               double complex[::1] r, double complex[::1] p,
               double v, double mu_t0, double mu_w0, int c_max):
    cdef double complex y0 = _output(t_mat, w, r)
    cdef Py_ssize_t d_rank = t_mat.shape[1]
    cdef double complex[::1] rbar = np.empty(d_rank, dtype=np.complex128)
    cdef double complex[::1] tp = np.empty(d_rank, dtype=np.complex128)
    cdef int c
    for c in range(c_max):
        _nsg_transform(t_mat, w, r, p, v, mu_t0)
        _nsg_filter(t_mat, w, r, p, v, mu_w0, rbar, tp)
    return complex(y0)


def fr_nsg_symbol(double complex[::1] w, double complex[::1] r,
                  double complex[::1] p, double v, double mu_w0):
    cdef Py_ssize_t m = w.shape[0], i
    cdef double pn2 = 0, rn2 = 0, a_w1, ay
    cdef double complex y = 0, s = 0, wp = 0, a_w3, coef, sc
    for i in range(m):
        pn2 = pn2 + _cabs2(p[i])
        rn2 = rn2 + _cabs2(r[i])
        y = y + w[i].conjugate() * r[i]
        s = s + r[i].conjugate() * p[i]
        wp = wp + w[i].conjugate() * p[i]
    if pn2 < _TOL:
        raise _NsgError("zero signature estimate")
    cdef double complex y0 = y
    a_w1 = rn2 - _cabs2(s) / pn2
    a_w3 = (wp.conjugate() - v) / pn2
    if a_w1 > _TOL:
        ay = abs(y)
        if ay < _Y_FLOOR:
            ay = _Y_FLOOR
        coef = mu_w0 * y.conjugate() * ((ay - 1.0) / (ay * a_w1))
        sc = s.conjugate() / pn2
        for i in range(m):
            w[i] = w[i] - coef * (r[i] - sc * p[i]) - a_w3 * p[i]
    else:
        for i in range(m):
            w[i] = w[i] - a_w3 * p[i]
    return complex(y0)


def rls_pre(double complex[:, ::1] t_mat, double complex[::1] w,
            double complex[:, ::1] ry_inv, double complex[:, ::1] rt_inv,
            double complex[::1] d_bar, double complex[::1] rbar_out,
            double complex[::1] r, double alpha, int conventional):
    cdef Py_ssize_t m = t_mat.shape[0], d_rank = t_mat.shape[1], i, d
    cdef double complex acc, y = 0, cy
    cdef int flags = 0
    for d in range(d_rank):
        acc = 0
        for i in range(m):
            acc = acc + t_mat[i, d].conjugate() * r[i]
        rbar_out[d] = acc
        y = y + w[d].conjugate() * acc
    cy = y.conjugate()
    if conventional:
        for d in range(d_rank):
            d_bar[d] = alpha * d_bar[d] + rbar_out[d] * cy
    else:
        for d in range(d_rank):
            d_bar[d] = d_bar[d] + alpha * rbar_out[d] * cy
    cdef double complex[::1] u_m = np.empty(m, dtype=np.complex128)
    cdef double complex[::1] kappa_m = np.empty(m, dtype=np.complex128)
    for i in range(m):
        u_m[i] = y * r[i]
    if _rank1_inv(ry_inv, u_m, alpha, kappa_m):
        flags |= FLAG_RY_SKIPPED
    cdef double complex[::1] u_d = np.empty(d_rank, dtype=np.complex128)
    cdef double complex[::1] kappa_d = np.empty(d_rank, dtype=np.complex128)
    for d in range(d_rank):
        u_d[d] = y * rbar_out[d]
    if _rank1_inv(rt_inv, u_d, alpha, kappa_d):
        flags |= FLAG_RT_SKIPPED
    return complex(y), flags


def rls_adapt(double complex[:, ::1] t_mat, double complex[::1] w,
              double complex[:, ::1] ry_inv, double complex[:, ::1] rt_inv,
              double complex[::1] d_bar, double complex[:, ::1] v_r,
              double complex[::1] rbar, double complex y,
              double complex[::1] r, double complex[::1] p,
              double alpha, double v, double w_clamp):
    cdef Py_ssize_t m = t_mat.shape[0], d_rank = t_mat.shape[1], i, j, d, dd
    cdef double e = _cabs2(y) - 1.0
    cdef double complex wr = 0, re_w, inner, cwd, acc
    cdef int flags = 0

    for d in range(d_rank):
        wr = wr + rbar[d].conjugate() * w[d]
    for d in range(d_rank):
        re_w = wr - rbar[d].conjugate() * w[d]
        inner = e * re_w - w[d] * rbar[d].conjugate()
        cwd = w[d].conjugate() * inner
        for i in range(m):
            v_r[d, i] = alpha * v_r[d, i] + cwd * r[i]

    cdef double complex[::1] q = np.empty(m, dtype=np.complex128)
    cdef double complex prp = 0
    for i in range(m):
        acc = 0
        for j in range(m):
            acc = acc + ry_inv[i, j] * p[j]
        q[i] = acc
    for i in range(m):
        prp = prp + p[i].conjugate() * q[i]
    if abs(prp) < _TOL:
        raise _RlsError("p^H R_y^-1 p ~ 0: column solve impossible")

    cdef double complex[::1] tp = np.empty(d_rank, dtype=np.complex128)
    cdef double complex[::1] t_new = np.empty(m, dtype=np.complex128)
    cdef double complex wd, w_pd, v_rp, num, lam_half, ti
    cdef double wd2, nrm2, nrm
    for d in range(d_rank):
        wd = w[d]
        if abs(wd) < w_clamp:
            flags |= FLAG_COLUMN_CLAMPED
            continue
        wd2 = _cabs2(wd)
        for dd in range(d_rank):
            acc = 0
            for i in range(m):
                acc = acc + t_mat[i, dd].conjugate() * p[i]
            tp[dd] = acc
        w_pd = 0
        for dd in range(d_rank):
            w_pd = w_pd + w[dd].conjugate() * tp[dd]
        w_pd = w_pd - wd.conjugate() * tp[d]
        v_rp = 0
        for i in range(m):
            v_rp = v_rp + v_r[d, i].conjugate() * q[i]
        num = wd.conjugate() * v_rp + (v - w_pd) * wd2
        lam_half = (num / (-wd2 * prp)).conjugate()
        nrm2 = 0
        for i in range(m):
            acc = 0
            for j in range(m):
                acc = acc + ry_inv[i, j] * v_r[d, j]
            ti = -(lam_half * wd.conjugate() * q[i] + acc) / wd2
            t_new[i] = ti
            nrm2 = nrm2 + _cabs2(ti)
        if nrm2 == 0.0:
            flags |= FLAG_COLUMN_ZERO
            continue
        nrm = sqrt(nrm2)
        for i in range(m):
            t_mat[i, d] = t_new[i] / nrm

    # constrained filter solve on the refreshed transform
    cdef double complex[::1] z = np.empty(d_rank, dtype=np.complex128)
    cdef double complex den = 0, dz = 0, lam
    for dd in range(d_rank):
        acc = 0
        for i in range(m):
            acc = acc + t_mat[i, dd].conjugate() * p[i]
        tp[dd] = acc
    for d in range(d_rank):
        acc = 0
        for j in range(d_rank):
            acc = acc + rt_inv[d, j] * tp[j]
        z[d] = acc
    for d in range(d_rank):
        den = den + tp[d].conjugate() * z[d]
        dz = dz + d_bar[d].conjugate() * z[d]
    if abs(den) < _TOL:
        raise _RlsError("p^H T R_T^-1 T^H p ~ 0: filter solve impossible")
    lam = ((dz - v) / den).conjugate()
    for d in range(d_rank):
        acc = 0
        for j in range(d_rank):
            acc = acc + rt_inv[d, j] * d_bar[j]
        w[d] = acc - lam * z[d]
    return flags


def fr_rls_pre(double complex[::1] w, double complex[:, ::1] ry_inv,
               double complex[::1] d_bar, double complex[::1] r,
               double alpha, int conventional):
    cdef Py_ssize_t m = w.shape[0], i
    cdef double complex y = 0, cy
    cdef int flags = 0
    for i in range(m):
        y = y + w[i].conjugate() * r[i]
    cy = y.conjugate()
    if conventional:
        for i in range(m):
            d_bar[i] = alpha * d_bar[i] + r[i] * cy
    else:
        for i in range(m):
            d_bar[i] = d_bar[i] + alpha * r[i] * cy
    cdef double complex[::1] u = np.empty(m, dtype=np.complex128)
    cdef double complex[::1] kappa = np.empty(m, dtype=np.complex128)
    for i in range(m):
        u[i] = y * r[i]
    if _rank1_inv(ry_inv, u, alpha, kappa):
        flags |= FLAG_RY_SKIPPED
    return complex(y), flags


def fr_rls_adapt(double complex[::1] w, double complex[:, ::1] ry_inv,
                 double complex[::1] d_bar, double complex[::1] p, double v):
    cdef Py_ssize_t m = w.shape[0], i, j
    cdef double complex acc, den = 0, dz = 0, lam
    cdef double complex[::1] z = np.empty(m, dtype=np.complex128)
    for i in range(m):
        acc = 0
        for j in range(m):
            acc = acc + ry_inv[i, j] * p[j]
        z[i] = acc
    for i in range(m):
        den = den + p[i].conjugate() * z[i]
        dz = dz + d_bar[i].conjugate() * z[i]
    if abs(den) < _TOL:
        raise _RlsError("p^H R^-1 p ~ 0: filter solve impossible")
    lam = ((dz - v) / den).conjugate()
    for i in range(m):
        acc = 0
        for j in range(m):
            acc = acc + ry_inv[i, j] * d_bar[j]
        w[i] = acc - lam * z[i]
    return 0
