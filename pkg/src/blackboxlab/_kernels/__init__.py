"""Numerical kernel backend selection.

The hot inner loops (squared-exponential Gram matrices, Cholesky
factorization, triangular solves, marginal-likelihood gradients, batched
posterior queries) exist twice: a compiled Cython extension (``_fast``) and
a numpy fallback (``_ref``). The compiled backend is used when the extension
built; set ``BLACKBOXLAB_BACKEND=python`` or ``=compiled`` to force one.

Both backends implement identical contracts; results agree to floating-point
round-off but are not bitwise identical (different summation orders), so
reproducibility guarantees hold per backend. ``benchmarks/bench_backends.py``
compares their throughput.
"""

import os

from . import _ref

_requested = os.environ.get("BLACKBOXLAB_BACKEND")

if _requested == "python":
    _impl = _ref
elif _requested == "compiled":
    from . import _fast as _impl  # noqa: F401  (ImportError here is intentional)
else:
    try:
        from . import _fast as _impl
    except ImportError:
        _impl = _ref

BACKEND = _impl.BACKEND_NAME

ard_kernel_matrix = _impl.ard_kernel_matrix
ard_kernel_cross = _impl.ard_kernel_cross
cholesky_jitter = _impl.cholesky_jitter
solve_lower = _impl.solve_lower
solve_upper_t = _impl.solve_upper_t
posterior_batch = _impl.posterior_batch
lml_value = _impl.lml_value
lml_value_grad = _impl.lml_value_grad
