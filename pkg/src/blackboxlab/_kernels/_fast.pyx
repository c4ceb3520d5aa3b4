# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled implementation of the numerical kernels.

Same contracts as ``_ref``; plain C loops, no BLAS. Written for small dense
problems (n up to a few thousand) where per-call overhead of composing numpy
primitives dominates; see benchmarks/bench_backends.py.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, sqrt

cnp.import_array()

BACKEND_NAME = "compiled"

M_LOG_2PI = 1.8378770664093453


def ard_kernel_matrix(x, phi, sf2):
    """Gram matrix of the anisotropic squared-exponential kernel, no noise."""
    cdef const double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] pv = np.ascontiguousarray(phi, dtype=np.float64)
    cdef double s = sf2
    cdef Py_ssize_t n = xv.shape[0], d = xv.shape[1]
    if pv.shape[0] != d:
        raise ValueError("point and length-scale dimensions disagree")
    out = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] kv = out
    cdef Py_ssize_t i, j, k
    cdef double acc, t
    for i in range(n):
        kv[i, i] = s
        for j in range(i):
            acc = 0.0
            for k in range(d):
                t = (xv[i, k] - xv[j, k]) / pv[k]
                acc += t * t
            t = s * exp(-0.5 * acc)
            kv[i, j] = t
            kv[j, i] = t
    return out


def ard_kernel_cross(x, z, phi, sf2):
    cdef const double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[:, ::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef const double[::1] pv = np.ascontiguousarray(phi, dtype=np.float64)
    cdef double s = sf2
    cdef Py_ssize_t n = xv.shape[0], m = zv.shape[0], d = xv.shape[1]
    if zv.shape[1] != d or pv.shape[0] != d:
        raise ValueError("point and length-scale dimensions disagree")
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] kv = out
    cdef Py_ssize_t i, j, k
    cdef double acc, t
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for k in range(d):
                t = (xv[i, k] - zv[j, k]) / pv[k]
                acc += t * t
            kv[i, j] = s * exp(-0.5 * acc)
    return out


def cholesky_jitter(a, jitter):
    """Lower Cholesky factor of a + jitter*I; ArithmeticError if not SPD."""
    cdef const double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double jit = jitter
    cdef Py_ssize_t n = av.shape[0]
    if av.shape[1] != n:
        raise ValueError("matrix must be square")
    out = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] lv = out
    cdef Py_ssize_t i, j, k
    cdef double acc
    for i in range(n):
        for j in range(i + 1):
            acc = av[i, j]
            if i == j:
                acc += jit
            for k in range(j):
                acc -= lv[i, k] * lv[j, k]
            if i == j:
                if acc <= 0.0:
                    raise ArithmeticError(
                        "matrix not positive definite after jitter"
                    )
                lv[i, j] = sqrt(acc)
            else:
                lv[i, j] = acc / lv[j, j]
    return out


def solve_lower(l, b):
    """Solve l @ x = b for lower-triangular l (b: vector or matrix)."""
    barr = np.asarray(b, dtype=np.float64)
    if barr.ndim == 1:
        return _solve_lower_mat(l, barr[:, None])[:, 0]
    return _solve_lower_mat(l, barr)


def solve_upper_t(l, b):
    """Solve l.T @ x = b for lower-triangular l."""
    barr = np.asarray(b, dtype=np.float64)
    if barr.ndim == 1:
        return _solve_upper_t_mat(l, barr[:, None])[:, 0]
    return _solve_upper_t_mat(l, barr)


cdef _check_diagonal(const double[:, ::1] lv):
    cdef Py_ssize_t i
    for i in range(lv.shape[0]):
        if lv[i, i] == 0.0:
            raise ZeroDivisionError("zero on triangular diagonal")


def _solve_lower_mat(l, b):
    cdef const double[:, ::1] lv = np.ascontiguousarray(l, dtype=np.float64)
    cdef Py_ssize_t n = lv.shape[0]
    out = np.array(b, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] xv = out
    if lv.shape[1] != n or xv.shape[0] != n:
        raise ValueError("triangular factor and right-hand side disagree")
    cdef Py_ssize_t m = xv.shape[1]
    cdef Py_ssize_t i, j, c
    cdef double acc
    _check_diagonal(lv)
    for c in range(m):
        for i in range(n):
            acc = xv[i, c]
            for j in range(i):
                acc -= lv[i, j] * xv[j, c]
            xv[i, c] = acc / lv[i, i]
    return out


def _solve_upper_t_mat(l, b):
    cdef const double[:, ::1] lv = np.ascontiguousarray(l, dtype=np.float64)
    cdef Py_ssize_t n = lv.shape[0]
    out = np.array(b, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] xv = out
    if lv.shape[1] != n or xv.shape[0] != n:
        raise ValueError("triangular factor and right-hand side disagree")
    cdef Py_ssize_t m = xv.shape[1]
    cdef Py_ssize_t i, j, c
    cdef double acc
    _check_diagonal(lv)
    for c in range(m):
        for i in range(n - 1, -1, -1):
            acc = xv[i, c]
            for j in range(i + 1, n):
                acc -= lv[j, i] * xv[j, c]
            xv[i, c] = acc / lv[i, i]
    return out


def posterior_batch(train_x, chol, alpha, test_x, phi, sf2, mean):
    """Posterior mean and raw (unclamped) variance at a batch of points."""
    cdef const double[:, ::1] xv = np.ascontiguousarray(train_x, dtype=np.float64)
    cdef const double[:, ::1] lv = np.ascontiguousarray(chol, dtype=np.float64)
    cdef const double[::1] av = np.ascontiguousarray(alpha, dtype=np.float64)
    cdef const double[:, ::1] zv = np.ascontiguousarray(test_x, dtype=np.float64)
    cdef const double[::1] pv = np.ascontiguousarray(phi, dtype=np.float64)
    cdef double s = sf2, m0 = mean
    cdef Py_ssize_t n = xv.shape[0], nt = zv.shape[0], d = xv.shape[1]
    if zv.shape[1] != d or pv.shape[0] != d:
        raise ValueError("point and length-scale dimensions disagree")
    if lv.shape[0] != n or lv.shape[1] != n or av.shape[0] != n:
        raise ValueError("factor/weight sizes disagree with the training set")
    means = np.empty(nt, dtype=np.float64)
    variances = np.empty(nt, dtype=np.float64)
    cdef double[::1] mv = means
    cdef double[::1] vv = variances
    kstar_buf = np.empty(n, dtype=np.float64)
    cdef double[::1] ks = kstar_buf
    cdef Py_ssize_t t, i, j, k
    cdef double acc, u, ssq
    for t in range(nt):
        acc = m0
        for i in range(n):
            u = 0.0
            for k in range(d):
                ssq = (xv[i, k] - zv[t, k]) / pv[k]
                u += ssq * ssq
            ks[i] = s * exp(-0.5 * u)
            acc += ks[i] * av[i]
        mv[t] = acc
        # forward solve L v = k*, accumulating ||v||^2 in place
        ssq = 0.0
        for i in range(n):
            u = ks[i]
            for j in range(i):
                u -= lv[i, j] * ks[j]
            u /= lv[i, i]
            ks[i] = u
            ssq += u * u
        vv[t] = s - ssq
    return means, variances


def lml_value(train_x, train_y, phi, sf2, sn2, mean, jitter):
    """Log marginal likelihood only; cheaper than the gradient version."""
    cdef const double[::1] yv = np.ascontiguousarray(train_y, dtype=np.float64)
    cdef double m0 = mean
    cdef Py_ssize_t n = yv.shape[0]
    if np.asarray(train_x).shape[0] != n:
        raise ValueError("training data sizes disagree")
    ksig = ard_kernel_matrix(train_x, phi, sf2)
    chol = cholesky_jitter(ksig, sn2 + jitter)
    cdef const double[:, ::1] lv = chol
    work = np.empty(n, dtype=np.float64)
    cdef double[::1] wv = work
    cdef Py_ssize_t i, j
    cdef double acc, value = 0.0
    for i in range(n):
        acc = yv[i] - m0
        for j in range(i):
            acc -= lv[i, j] * wv[j]
        wv[i] = acc / lv[i, i]
        value -= 0.5 * wv[i] * wv[i]
        value -= log(lv[i, i])
    value -= 0.5 * n * M_LOG_2PI
    return value


def lml_value_grad(train_x, train_y, phi, sf2, sn2, mean, jitter):
    """Log marginal likelihood and gradient over log-hyperparameters.

    Gradient layout: (log phi_1, ..., log phi_d, log sf2, log sn2).
    Raises ArithmeticError when the jittered Gram matrix is not SPD.
    """
    cdef const double[:, ::1] xv = np.ascontiguousarray(train_x, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(train_y, dtype=np.float64)
    cdef const double[::1] pv = np.ascontiguousarray(phi, dtype=np.float64)
    cdef double s = sf2, noise = sn2, m0 = mean, jit = jitter
    cdef Py_ssize_t n = xv.shape[0], d = xv.shape[1]
    if yv.shape[0] != n or pv.shape[0] != d:
        raise ValueError("training data and length-scale dimensions disagree")

    ksig = ard_kernel_matrix(train_x, phi, sf2)
    chol = cholesky_jitter(ksig, noise + jit)
    cdef double[:, ::1] kv = ksig
    cdef double[:, ::1] lv = chol

    cdef Py_ssize_t i, j, k
    cdef double acc

    # alpha = K^{-1} (y - m) via the two triangular solves
    alpha = np.empty(n, dtype=np.float64)
    cdef double[::1] av = alpha
    for i in range(n):
        acc = yv[i] - m0
        for j in range(i):
            acc -= lv[i, j] * av[j]
        av[i] = acc / lv[i, i]
    for i in range(n - 1, -1, -1):
        acc = av[i]
        for j in range(i + 1, n):
            acc -= lv[j, i] * av[j]
        av[i] = acc / lv[i, i]

    cdef double value = 0.0
    for i in range(n):
        value -= 0.5 * (yv[i] - m0) * av[i]
        value -= log(lv[i, i])
    value -= 0.5 * n * M_LOG_2PI

    # K^{-1} = V^T V with V = L^{-1} (column-wise forward solves of I)
    vinv = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] vv = vinv
    for k in range(n):
        for i in range(k, n):
            acc = 1.0 if i == k else 0.0
            for j in range(k, i):
                acc -= lv[i, j] * vv[j, k]
            vv[i, k] = acc / lv[i, i]

    grad = np.zeros(d + 2, dtype=np.float64)
    cdef double[::1] gv = grad
    cdef double bij, kij, diff, trace_b = 0.0, sum_bk = 0.0
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for k in range(max(i, j), n):
                acc += vv[k, i] * vv[k, j]
            bij = av[i] * av[j] - acc
            if i == j:
                trace_b += bij
            kij = kv[i, j]
            sum_bk += bij * kij
            bij *= kij
            for k in range(d):
                diff = xv[i, k] - xv[j, k]
                gv[k] += bij * diff * diff / (pv[k] * pv[k])
    for k in range(d):
        gv[k] *= 0.5
    gv[d] = 0.5 * sum_bk
    gv[d + 1] = 0.5 * noise * trace_b
    return value, grad
