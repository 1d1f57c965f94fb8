# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled tridiagonal and Crank-Nicolson marching kernels.

Thomas elimination without pivoting; callers detect the reported pivot
failure and rescue the offending system with a pivoted solve.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef int _thomas(const double* dl, const double* d, const double* du,
                 const double* rhs, double* out, double* cp, double* dp,
                 Py_ssize_t n, double pivot_tol) noexcept nogil:
    cdef Py_ssize_t j
    cdef double denom = d[0]
    if denom < pivot_tol and denom > -pivot_tol:
        return 0
    cp[0] = du[0] / denom
    dp[0] = rhs[0] / denom
    for j in range(1, n):
        denom = d[j] - dl[j] * cp[j - 1]
        if denom < pivot_tol and denom > -pivot_tol:
            return <int> j
        cp[j] = du[j] / denom
        dp[j] = (rhs[j] - dl[j] * dp[j - 1]) / denom
    out[n - 1] = dp[n - 1]
    for j in range(n - 2, -1, -1):
        out[j] = dp[j] - cp[j] * out[j + 1]
    return -1


def thomas(double[::1] dl, double[::1] d, double[::1] du, double[::1] rhs,
           double[::1] out, double pivot_tol):
    """Solve one system in place; return failing pivot row or -1."""
    cdef Py_ssize_t n = d.shape[0]
    cdef cnp.ndarray[double, ndim=1] cp = np.empty(n)
    cdef cnp.ndarray[double, ndim=1] dp = np.empty(n)
    cdef int status
    with nogil:
        status = _thomas(&dl[0], &d[0], &du[0], &rhs[0], &out[0],
                         <double*> cp.data, <double*> dp.data, n, pivot_tol)
    return status


def thomas_batch(double[:, ::1] dl, double[:, ::1] d, double[:, ::1] du,
                 double[:, ::1] rhs, double[:, ::1] out,
                 long long[::1] fails, double pivot_tol):
    """Solve K systems; fails[i] gets the failing row or -1. Returns failure count."""
    cdef Py_ssize_t k = d.shape[0]
    cdef Py_ssize_t n = d.shape[1]
    cdef cnp.ndarray[double, ndim=1] cp = np.empty(n)
    cdef cnp.ndarray[double, ndim=1] dp = np.empty(n)
    cdef Py_ssize_t i
    cdef int status
    cdef int n_fail = 0
    with nogil:
        for i in range(k):
            status = _thomas(&dl[i, 0], &d[i, 0], &du[i, 0], &rhs[i, 0],
                             &out[i, 0], <double*> cp.data, <double*> dp.data,
                             n, pivot_tol)
            fails[i] = status
            if status >= 0:
                n_fail += 1
    return n_fail


def cn_march(double[:, ::1] zeroth, double[:, ::1] first, double[:, ::1] second,
             double[::1] v0, double h, double k, double bval, double pivot_tol):
    """Full Crank-Nicolson march; returns (field, fail_step).

    fail_step is -1 on success, otherwise the first time level whose
    tridiagonal solve hit a near-zero pivot (rows below it are valid).
    """
    cdef Py_ssize_t n_steps = zeroth.shape[0] - 1
    cdef Py_ssize_t m1 = zeroth.shape[1]
    cdef Py_ssize_t m = m1 - 2
    cdef cnp.ndarray[double, ndim=2] field = np.empty((n_steps + 1, m1))
    cdef double[:, ::1] fv = field
    cdef cnp.ndarray[double, ndim=1] work = np.empty(5 * m)
    cdef double* lower = <double*> work.data
    cdef double* diag = lower + m
    cdef double* upper = diag + m
    cdef double* rhs = upper + m
    cdef double* sol = rhs + m
    cdef cnp.ndarray[double, ndim=1] cp = np.empty(m)
    cdef cnp.ndarray[double, ndim=1] dp = np.empty(m)
    cdef Py_ssize_t i, j
    cdef double lam, mu, kh = 0.5 * k
    cdef double inv_h2 = 1.0 / (h * h)
    cdef double inv_2h = 0.5 / h
    cdef int status
    cdef Py_ssize_t fail_step = -1

    for j in range(m1):
        fv[0, j] = v0[j]
    with nogil:
        for i in range(n_steps):
            for j in range(m):
                lam = second[i + 1, j + 1] * inv_h2
                mu = first[i + 1, j + 1] * inv_2h
                lower[j] = -kh * (lam - mu)
                diag[j] = 1.0 + kh * (2.0 * lam - zeroth[i + 1, j + 1])
                upper[j] = -kh * (lam + mu)
                lam = second[i, j + 1] * inv_h2
                mu = first[i, j + 1] * inv_2h
                rhs[j] = fv[i, j + 1] + kh * (
                    zeroth[i, j + 1] * fv[i, j + 1]
                    + mu * (fv[i, j + 2] - fv[i, j])
                    + lam * (fv[i, j + 2] - 2.0 * fv[i, j + 1] + fv[i, j])
                )
            rhs[0] -= lower[0] * bval
            rhs[m - 1] -= upper[m - 1] * bval
            status = _thomas(lower, diag, upper, rhs, sol,
                             <double*> cp.data, <double*> dp.data, m, pivot_tol)
            if status >= 0:
                fail_step = i + 1
                break
            fv[i + 1, 0] = bval
            fv[i + 1, m1 - 1] = bval
            for j in range(m):
                fv[i + 1, j + 1] = sol[j]
    return field, fail_step
