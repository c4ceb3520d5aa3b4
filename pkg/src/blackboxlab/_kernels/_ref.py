"""Numpy implementation of the numerical kernels.

This is the fallback backend: same contracts as the compiled extension in
``_fast.pyx``, selected at import time by the package ``__init__``. Failure
signalling is deliberately primitive (ArithmeticError for a failed
factorization, ZeroDivisionError for a singular triangular diagonal) so both
backends can raise identically without importing the public error types.
"""

import numpy as np
from scipy.linalg import solve_triangular

BACKEND_NAME = "python"


def ard_kernel_matrix(x, phi, sf2):
    """Gram matrix of the anisotropic squared-exponential kernel, no noise."""
    x = np.asarray(x, dtype=float)
    scaled = x / phi
    sq = np.sum(scaled**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (scaled @ scaled.T)
    np.maximum(d2, 0.0, out=d2)
    return sf2 * np.exp(-0.5 * d2)


def ard_kernel_cross(x, z, phi, sf2):
    x = np.asarray(x, dtype=float) / phi
    z = np.asarray(z, dtype=float) / phi
    d2 = (
        np.sum(x**2, axis=1)[:, None]
        + np.sum(z**2, axis=1)[None, :]
        - 2.0 * (x @ z.T)
    )
    np.maximum(d2, 0.0, out=d2)
    return sf2 * np.exp(-0.5 * d2)


def cholesky_jitter(a, jitter):
    """Lower Cholesky factor of a + jitter*I; ArithmeticError if not SPD."""
    a = np.asarray(a, dtype=float)
    if jitter != 0.0:
        a = a + jitter * np.eye(a.shape[0])
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise ArithmeticError("matrix not positive definite after jitter") from None


def solve_lower(l, b):
    """Solve l @ x = b for lower-triangular l."""
    l = np.asarray(l, dtype=float)
    if np.any(np.diag(l) == 0.0):
        raise ZeroDivisionError("zero on triangular diagonal")
    return solve_triangular(l, np.asarray(b, dtype=float), lower=True)


def solve_upper_t(l, b):
    """Solve l.T @ x = b for lower-triangular l."""
    l = np.asarray(l, dtype=float)
    if np.any(np.diag(l) == 0.0):
        raise ZeroDivisionError("zero on triangular diagonal")
    return solve_triangular(l, np.asarray(b, dtype=float), lower=True, trans="T")


def posterior_batch(train_x, chol, alpha, test_x, phi, sf2, mean):
    """Posterior mean and raw (unclamped) variance at a batch of points."""
    kstar = ard_kernel_cross(train_x, test_x, phi, sf2)
    means = mean + kstar.T @ alpha
    v = solve_triangular(chol, kstar, lower=True)
    variances = sf2 - np.sum(v * v, axis=0)
    return means, variances


def lml_value(train_x, train_y, phi, sf2, sn2, mean, jitter):
    """Log marginal likelihood only; cheaper than the gradient version."""
    x = np.asarray(train_x, dtype=float)
    y = np.asarray(train_y, dtype=float)
    n = x.shape[0]
    ksig = ard_kernel_matrix(x, phi, sf2)
    chol = cholesky_jitter(ksig, sn2 + jitter)
    r = y - mean
    v = solve_lower(chol, r)
    return (
        -0.5 * float(v @ v)
        - float(np.sum(np.log(np.diag(chol))))
        - 0.5 * n * np.log(2.0 * np.pi)
    )


def lml_value_grad(train_x, train_y, phi, sf2, sn2, mean, jitter):
    """Log marginal likelihood and its gradient over log-hyperparameters.

    Gradient layout: (log phi_1, ..., log phi_d, log sf2, log sn2).
    Raises ArithmeticError when the jittered Gram matrix is not SPD.
    """
    x = np.asarray(train_x, dtype=float)
    y = np.asarray(train_y, dtype=float)
    n, d = x.shape
    ksig = ard_kernel_matrix(x, phi, sf2)
    chol = cholesky_jitter(ksig, sn2 + jitter)
    r = y - mean
    alpha = solve_upper_t(chol, solve_lower(chol, r))
    value = (
        -0.5 * float(r @ alpha)
        - float(np.sum(np.log(np.diag(chol))))
        - 0.5 * n * np.log(2.0 * np.pi)
    )

    linv = solve_triangular(chol, np.eye(n), lower=True)
    kinv = linv.T @ linv
    b = np.outer(alpha, alpha) - kinv

    grad = np.empty(d + 2)
    bk = b * ksig
    for j in range(d):
        diff = x[:, j][:, None] - x[:, j][None, :]
        grad[j] = 0.5 * float(np.sum(bk * diff**2)) / phi[j] ** 2
    grad[d] = 0.5 * float(np.sum(bk))
    grad[d + 1] = 0.5 * sn2 * float(np.trace(b))
    return value, grad
