# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the pure-numpy kernels in `pure`.

Matrix-vector products are sequential dot products, and the per-step
grouping of additions matches the pure implementation, so both backends
agree to floating-point rounding.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline void _matvec(const double[:, ::1] m, const double* v, double* out,
                         Py_ssize_t rows, Py_ssize_t cols) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(rows):
        acc = 0.0
        for j in range(cols):
            acc += m[i, j] * v[j]
        out[i] = acc


def sim_noiseless(const double[:, ::1] a, const double[:, ::1] b, const double[:, ::1] k_bar,
                  const double[:, ::1] s, const double[:, ::1] w, const double[::1] x1):
    cdef Py_ssize_t n = s.shape[0]
    cdef Py_ssize_t d1 = a.shape[0]
    cdef Py_ssize_t d2 = b.shape[1]
    x_arr = np.empty((n + 1, d1))
    u_arr = np.empty((n, d2))
    cdef double[:, ::1] x = x_arr
    cdef double[:, ::1] u = u_arr
    tmp_arr = np.empty(2 * d1 + d2)
    cdef double[::1] tmp = tmp_arr
    cdef double* ax = &tmp[0]
    cdef double* bu = &tmp[d1]
    cdef double* ks = &tmp[2 * d1]
    cdef Py_ssize_t t, i
    with nogil:
        for i in range(d1):
            x[0, i] = x1[i]
        for t in range(n):
            _matvec(k_bar, &x[t, 0], ks, d2, d1)
            for i in range(d2):
                u[t, i] = s[t, i] - ks[i]
            _matvec(a, &x[t, 0], ax, d1, d1)
            _matvec(b, &u[t, 0], bu, d1, d2)
            for i in range(d1):
                x[t + 1, i] = ax[i] + bu[i] + w[t, i]
    return x_arr, u_arr


def sim_noisy(const double[:, ::1] a, const double[:, ::1] b, const double[:, ::1] k_bar,
              const double[:, ::1] l_c, const double[:, ::1] d_c,
              const double[:, ::1] s, const double[:, ::1] w, const double[:, ::1] q,
              const double[::1] x1):
    cdef Py_ssize_t n = s.shape[0]
    cdef Py_ssize_t d1 = a.shape[0]
    cdef Py_ssize_t d2 = b.shape[1]
    cdef Py_ssize_t d3 = d_c.shape[0]
    x_arr = np.empty((n + 1, d1))
    xc_arr = np.empty((n + 1, d1))
    u_arr = np.empty((n, d2))
    o_arr = np.empty((n + 1, d3))
    cdef double[:, ::1] x = x_arr
    cdef double[:, ::1] xc = xc_arr
    cdef double[:, ::1] u = u_arr
    cdef double[:, ::1] o = o_arr
    tmp_arr = np.empty(4 * d1 + d2 + 2 * d3)
    cdef double[::1] tmp = tmp_arr
    cdef double* ax = &tmp[0]
    cdef double* bu = &tmp[d1]
    cdef double* xp = &tmp[2 * d1]
    cdef double* lres = &tmp[3 * d1]
    cdef double* ks = &tmp[4 * d1]
    cdef double* dcx = &tmp[4 * d1 + d2]
    cdef double* resid = &tmp[4 * d1 + d2 + d3]
    cdef Py_ssize_t t, i
    with nogil:
        for i in range(d1):
            x[0, i] = x1[i]
        _matvec(d_c, &x[0, 0], dcx, d3, d1)
        for i in range(d3):
            o[0, i] = dcx[i] + q[0, i]
        _matvec(l_c, &o[0, 0], lres, d1, d3)
        for i in range(d1):
            xc[0, i] = lres[i]
        for t in range(n):
            _matvec(k_bar, &xc[t, 0], ks, d2, d1)
            for i in range(d2):
                u[t, i] = s[t, i] - ks[i]
            _matvec(a, &x[t, 0], ax, d1, d1)
            _matvec(b, &u[t, 0], bu, d1, d2)
            for i in range(d1):
                x[t + 1, i] = ax[i] + bu[i] + w[t, i]
            _matvec(d_c, &x[t + 1, 0], dcx, d3, d1)
            for i in range(d3):
                o[t + 1, i] = dcx[i] + q[t + 1, i]
            _matvec(a, &xc[t, 0], ax, d1, d1)
            for i in range(d1):
                xp[i] = ax[i] + bu[i]
            _matvec(d_c, xp, dcx, d3, d1)
            for i in range(d3):
                resid[i] = o[t + 1, i] - dcx[i]
            _matvec(l_c, resid, lres, d1, d3)
            for i in range(d1):
                xc[t + 1, i] = xp[i] + lres[i]
    return x_arr, xc_arr, u_arr, o_arr


def kf_innovations(const double[:, ::1] a, const double[:, ::1] d, const double[:, ::1] l,
                   const double[:, ::1] z, u_pred, const double[::1] rho1):
    cdef Py_ssize_t n = z.shape[0] - 1
    cdef Py_ssize_t drho = a.shape[0]
    cdef Py_ssize_t dz = d.shape[0]
    innov_arr = np.empty((n, dz))
    rho_arr = np.empty((n + 1, drho))
    cdef double[:, ::1] innov = innov_arr
    cdef double[:, ::1] rho = rho_arr
    cdef const double[:, ::1] up
    cdef bint have_up = u_pred is not None
    if have_up:
        up = u_pred
    else:
        up = np.empty((1, drho))
    tmp_arr = np.empty(2 * drho + dz)
    cdef double[::1] tmp = tmp_arr
    cdef double* pred = &tmp[0]
    cdef double* lcor = &tmp[drho]
    cdef double* dp = &tmp[2 * drho]
    cdef Py_ssize_t t, i
    with nogil:
        for i in range(drho):
            rho[0, i] = rho1[i]
        for t in range(n):
            _matvec(a, &rho[t, 0], pred, drho, drho)
            if have_up:
                for i in range(drho):
                    pred[i] = pred[i] + up[t, i]
            _matvec(d, pred, dp, dz, drho)
            for i in range(dz):
                innov[t, i] = z[t + 1, i] - dp[i]
            _matvec(l, &innov[t, 0], lcor, drho, dz)
            for i in range(drho):
                rho[t + 1, i] = pred[i] + lcor[i]
    return innov_arr, rho_arr


def linear_recursion(const double[:, ::1] m, const double[:, ::1] g, const double[::1] x0):
    cdef Py_ssize_t n = g.shape[0]
    cdef Py_ssize_t d = m.shape[0]
    x_arr = np.empty((n + 1, d))
    cdef double[:, ::1] x = x_arr
    tmp_arr = np.empty(d)
    cdef double[::1] tmp = tmp_arr
    cdef double* mx = &tmp[0]
    cdef Py_ssize_t t, i
    with nogil:
        for i in range(d):
            x[0, i] = x0[i]
        for t in range(n):
            _matvec(m, &x[t, 0], mx, d, d)
            for i in range(d):
                x[t + 1, i] = mx[i] + g[t, i]
    return x_arr
