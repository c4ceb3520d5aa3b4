"""Dense symmetric-positive-definite factorization and triangular solves.

Matrices are plain float64 numpy arrays (row-major, shape checked at the
boundary). Only factor-and-solve is exposed; there is intentionally no
inverse. Work is delegated to the selected kernel backend (compiled or
numpy, see ``blackboxlab._kernels``).
"""

from __future__ import annotations

import numpy as np

from . import _kernels

__all__ = [
    "NotSquare",
    "NotSymmetric",
    "NotPositiveDefinite",
    "SingularDiagonal",
    "default_jitter",
    "cholesky",
    "solve_lower",
    "solve_upper_t",
    "solve_spd",
]

SYMMETRY_RTOL = 1e-12


class NotSquare(ValueError):
    pass


class NotSymmetric(ValueError):
    pass


class NotPositiveDefinite(ArithmeticError):
    """A pivot <= 0 was met after adding the requested jitter."""


class SingularDiagonal(ZeroDivisionError):
    """Triangular solve met an exactly zero diagonal entry."""


def _as_square(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSquare(f"expected a square matrix, got shape {a.shape}")
    return a


def default_jitter(a) -> float:
    """Diagonal regularization: 1e-10 * mean of the diagonal of ``a``.

    Doubles as the numerical noise floor for kernels with no noise term.
    """
    a = _as_square(a)
    return 1e-10 * float(np.trace(a)) / a.shape[0]


def cholesky(a, jitter: float = 0.0) -> np.ndarray:
    """Lower-triangular L with L @ L.T = a + jitter*I.

    ``a`` must be symmetric to within 1e-12 relative tolerance; the strictly
    lower triangle is the one factored.
    """
    a = _as_square(a)
    if jitter < 0.0:
        raise ValueError("jitter must be nonnegative")
    scale = float(np.max(np.abs(a))) or 1.0
    if np.max(np.abs(a - a.T)) > SYMMETRY_RTOL * scale:
        raise NotSymmetric("matrix is not symmetric within 1e-12 relative tolerance")
    try:
        return _kernels.cholesky_jitter(a, jitter)
    except ArithmeticError as exc:
        raise NotPositiveDefinite(str(exc)) from None


def solve_lower(l, b) -> np.ndarray:
    """Solve l @ x = b by forward substitution; l lower-triangular."""
    l = _as_square(l)
    try:
        return _kernels.solve_lower(l, b)
    except ZeroDivisionError as exc:
        raise SingularDiagonal(str(exc)) from None


def solve_upper_t(l, b) -> np.ndarray:
    """Solve l.T @ x = b by back substitution; l lower-triangular."""
    l = _as_square(l)
    try:
        return _kernels.solve_upper_t(l, b)
    except ZeroDivisionError as exc:
        raise SingularDiagonal(str(exc)) from None


def solve_spd(a, b, jitter: float = 0.0) -> np.ndarray:
    """Solve (a + jitter*I) @ x = b through one factorization and two
    triangular solves."""
    chol = cholesky(a, jitter)
    return solve_upper_t(chol, solve_lower(chol, b))
