#!/usr/bin/env python3
"""Throughput comparison of the compiled and numpy kernel backends.

Micro benchmarks time the backend functions directly on representative
problem sizes (the surrogate loop lives at n <= a few hundred training
points); the macro benchmark reruns a full Bayesian-optimization run in a
subprocess per backend via BLACKBOXLAB_BACKEND.

Usage: python benchmarks/bench_backends.py [--macro-budget N]
"""

import argparse
import os
import subprocess
import sys
import time
import timeit

import numpy as np

from blackboxlab._kernels import _ref

try:
    from blackboxlab._kernels import _fast
except ImportError:
    _fast = None


def make_case(n, d, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.random((n, d))
    y = np.sin(3 * x[:, 0]) + 0.1 * rng.normal(size=n)
    phi = np.full(d, 0.4)
    k = _ref.ard_kernel_matrix(x, phi, 1.0) + 1e-6 * np.eye(n)
    chol = _ref.cholesky_jitter(k, 0.0)
    alpha = _ref.solve_upper_t(chol, _ref.solve_lower(chol, y))
    z = rng.random((256, d))
    return dict(x=x, y=y, phi=phi, k=k, chol=chol, alpha=alpha, z=z)


def micro_benchmarks(case, n, d):
    return {
        f"kernel_matrix (n={n}, d={d})": lambda impl: impl.ard_kernel_matrix(
            case["x"], case["phi"], 1.0
        ),
        f"cholesky (n={n})": lambda impl: impl.cholesky_jitter(case["k"], 1e-10),
        f"triangular solve (n={n})": lambda impl: impl.solve_lower(case["chol"], case["y"]),
        f"lml value+grad (n={n}, d={d})": lambda impl: impl.lml_value_grad(
            case["x"], case["y"], case["phi"], 1.0, 1e-4, 0.0, 1e-10
        ),
        f"posterior batch (n={n}, m=256)": lambda impl: impl.posterior_batch(
            case["x"], case["chol"], case["alpha"], case["z"], case["phi"], 1.0, 0.0
        ),
    }


def time_callable(fn, min_runtime=0.2):
    fn()  # warm up
    number, elapsed = 1, 0.0
    while True:
        elapsed = timeit.timeit(fn, number=number)
        if elapsed >= min_runtime or number > 10**6:
            return elapsed / number
        number = max(number * 4, int(number * min_runtime / max(elapsed, 1e-9)))


def run_micro():
    rows = []
    for n, d in ((30, 2), (120, 4)):
        case = make_case(n, d)
        for label, fn in micro_benchmarks(case, n, d).items():
            ref_t = time_callable(lambda: fn(_ref))
            if _fast is not None:
                fast_t = time_callable(lambda: fn(_fast))
                rows.append((label, ref_t, fast_t))
            else:
                rows.append((label, ref_t, None))
    return rows


MACRO_SNIPPET = """
import time
import blackboxlab
from blackboxlab import bayesopt, bench
from blackboxlab.core import RngStream

landscape = bench.sphere(2)
budget = {budget}
config = bayesopt.BoConfig(init_design_size=8, iterations=budget - 8)
start = time.perf_counter()
trace = bayesopt.bo_run(landscape.fitness(budget), landscape.domain, config, RngStream(0))
print(blackboxlab.BACKEND, time.perf_counter() - start, trace.best_value)
"""


def run_macro(budget):
    out = {}
    for backend in ("python", "compiled") if _fast is not None else ("python",):
        env = dict(os.environ, BLACKBOXLAB_BACKEND=backend)
        proc = subprocess.run(
            [sys.executable, "-c", MACRO_SNIPPET.format(budget=budget)],
            capture_output=True,
            text=True,
            env=env,
        )
        if proc.returncode != 0:
            raise RuntimeError(proc.stderr)
        name, seconds, best = proc.stdout.split()
        assert name == backend
        out[backend] = (float(seconds), float(best))
    return out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--macro-budget", type=int, default=60)
    args = parser.parse_args()

    if _fast is None:
        print("compiled backend not built; micro benchmarks cover numpy only\n")

    width = 36
    print(f"{'micro benchmark':<{width}} {'numpy':>12} {'compiled':>12} {'speedup':>9}")
    for label, ref_t, fast_t in run_micro():
        ref_s = f"{ref_t * 1e6:9.1f} us"
        if fast_t is None:
            print(f"{label:<{width}} {ref_s:>12} {'-':>12} {'-':>9}")
        else:
            print(
                f"{label:<{width}} {ref_s:>12} {fast_t * 1e6:9.1f} us "
                f"{ref_t / fast_t:8.1f}x"
            )

    print(f"\nmacro: bo_run on sphere(2), budget {args.macro_budget}")
    macro = run_macro(args.macro_budget)
    for backend, (seconds, best) in macro.items():
        print(f"  {backend:>8}: {seconds:6.2f} s (best {best:.2e})")
    if len(macro) == 2:
        print(f"  speedup: {macro['python'][0] / macro['compiled'][0]:.1f}x")


if __name__ == "__main__":
    main()
