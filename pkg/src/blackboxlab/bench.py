"""Benchmark landscapes and the experiment runner.

The landscape suite covers the standard hardness axes: a smooth bowl
(sphere), a rugged multimodal surface (rastrigin), a neutral landscape with
an isolated narrow optimum (needle), and a piecewise-constant staircase with
a jump ridge (step_discontinuous) on which a smoothness prior has nothing to
grip. Everything is maximized; known optima and success thresholds are part
of each landscape.

The runner executes algorithm x landscape x seed grids with one RNG stream
per run, so paired-seed comparisons (e.g. sign tests against pure random
search) are exact and reruns are deterministic row for row.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy.stats import binomtest

from .core import Algorithm, BoxDomain, FitnessFunction, RngStream, run_algorithm
from .reporting import fmt

__all__ = [
    "Landscape",
    "ExperimentResult",
    "sphere",
    "rastrigin",
    "needle",
    "step_discontinuous",
    "landscape_by_name",
    "run_experiment",
    "dimensionality_sweep",
    "sign_test",
    "summarize",
    "results_csv_text",
]


@dataclass(frozen=True)
class Landscape:
    """A named test fitness with its domain, documented optimum location,
    optimal value, and the success threshold used by the harness."""

    name: str
    dimension: int
    domain: BoxDomain
    known_best: float
    threshold: float
    best_point: np.ndarray
    value: object  # picklable callable point -> float

    def __post_init__(self):
        if self.threshold > self.known_best:
            raise ValueError("threshold cannot exceed the known best value")

    def fitness(self, budget: int | None = None) -> FitnessFunction:
        """A fresh budgeted oracle; one instance per run."""
        return FitnessFunction(self.domain, self.value, budget=budget)


def _first_primes(n: int) -> list[int]:
    primes: list[int] = []
    candidate = 2
    while len(primes) < n:
        if all(candidate % p for p in primes):
            primes.append(candidate)
        candidate += 1
    return primes


def _irrational_unit_point(d: int) -> np.ndarray:
    """Interior point with irrational coordinates 1/sqrt(p), p prime; kept
    away from the domain center so initial designs cannot align with it."""
    return 1.0 / np.sqrt(np.array(_first_primes(d), dtype=float))


def _sphere_value(x):
    x = np.asarray(x, dtype=float)
    return -float(np.dot(x, x))


def _rastrigin_value(x):
    x = np.asarray(x, dtype=float)
    return -float(10.0 * x.size + np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x)))


def _needle_value(x, center, width):
    x = np.asarray(x, dtype=float)
    return 1.0 if float(np.max(np.abs(x - center))) < width else 0.0


def _step_value(x, center, cell_width, ridge_pos, jump):
    x = np.asarray(x, dtype=float)
    level = math.floor(float(np.linalg.norm(x - center)) / cell_width)
    return -float(level) - (jump if x[0] > ridge_pos else 0.0)


def sphere(d: int, threshold: float = -0.01) -> Landscape:
    """-sum(x_i^2) on [-5, 5]^d: the smooth, unimodal control case."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    domain = BoxDomain(np.full(d, -5.0), np.full(d, 5.0))
    return Landscape(
        name="sphere",
        dimension=d,
        domain=domain,
        known_best=0.0,
        threshold=threshold,
        best_point=np.zeros(d),
        value=_sphere_value,
    )


def rastrigin(d: int, threshold: float = -1.0) -> Landscape:
    """-(10d + sum(x_i^2 - 10 cos 2 pi x_i)) on [-5.12, 5.12]^d: rugged,
    with a regular lattice of local optima around the global one at 0."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    domain = BoxDomain(np.full(d, -5.12), np.full(d, 5.12))
    return Landscape(
        name="rastrigin",
        dimension=d,
        domain=domain,
        known_best=0.0,
        threshold=threshold,
        best_point=np.zeros(d),
        value=_rastrigin_value,
    )


def needle(d: int, width: float = 0.05) -> Landscape:
    """1 inside a max-norm box of half-width ``width`` around a fixed
    irrational interior point of [0, 1]^d, 0 everywhere else. The success
    volume fraction is (2 * width)^d; outside the needle the landscape is
    perfectly neutral."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if width <= 0:
        raise ValueError("width must be positive")
    center = _irrational_unit_point(d)
    if np.any(center - width <= 0.0) or np.any(center + width >= 1.0):
        raise ValueError("needle peak must be fully interior")
    domain = BoxDomain(np.zeros(d), np.ones(d))
    return Landscape(
        name="needle",
        dimension=d,
        domain=domain,
        known_best=1.0,
        threshold=1.0,
        best_point=center,
        value=partial(_needle_value, center=center, width=width),
    )


STEP_CELL_WIDTH = 1.2
STEP_RIDGE_POS = 2.6
STEP_JUMP = 2.5


def step_discontinuous(d: int) -> Landscape:
    """A bowl seen through a floor quantizer, plus a jump ridge.

    f(x) = -floor(||x - c|| / 1.2) - 2.5 * [x_1 > 2.6] on [-5, 5]^d: fitness
    is constant on each (ring, ridge-side) cell, drops by exactly 1 per ring
    and by exactly 2.5 across the ridge. The unique best plateau is the
    innermost ball (value 0, radius 1.2 around c); within every plateau
    there is no gradient information at all.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    center = 2.0 * _irrational_unit_point(d) - 1.0
    domain = BoxDomain(np.full(d, -5.0), np.full(d, 5.0))
    return Landscape(
        name="step",
        dimension=d,
        domain=domain,
        known_best=0.0,
        threshold=0.0,
        best_point=center,
        value=partial(
            _step_value,
            center=center,
            cell_width=STEP_CELL_WIDTH,
            ridge_pos=STEP_RIDGE_POS,
            jump=STEP_JUMP,
        ),
    )


def landscape_by_name(name: str, dimension: int) -> Landscape:
    factories = {
        "sphere": sphere,
        "rastrigin": rastrigin,
        "needle": needle,
        "step": step_discontinuous,
    }
    if name not in factories:
        raise ValueError(f"unknown landscape {name!r} (have {sorted(factories)})")
    return factories[name](dimension)


@dataclass(frozen=True)
class ExperimentResult:
    """One run of one algorithm on one landscape with one seed.

    ``evaluations_to_threshold`` is the 1-based index of the first
    evaluation whose best-so-far reached the landscape threshold, or None
    for a DNF within the budget.
    """

    algorithm: str
    landscape: str
    dimension: int
    seed: int
    budget: int
    evaluations_to_threshold: int | None
    final_best: float

    def sort_key(self):
        return (self.algorithm, self.landscape, self.dimension, self.seed)


def evaluations_to_threshold(best_so_far: np.ndarray, threshold: float) -> int | None:
    hits = np.nonzero(best_so_far >= threshold)[0]
    return int(hits[0]) + 1 if hits.size else None


def _run_one(name: str, algorithm: Algorithm, landscape: Landscape, seed: int, budget: int) -> ExperimentResult:
    trace = run_algorithm(
        algorithm, landscape.fitness(budget), landscape.domain, budget, RngStream(seed)
    )
    return ExperimentResult(
        algorithm=name,
        landscape=landscape.name,
        dimension=landscape.dimension,
        seed=seed,
        budget=budget,
        evaluations_to_threshold=evaluations_to_threshold(
            trace.best_so_far, landscape.threshold
        ),
        final_best=trace.best_value,
    )


def run_experiment(algorithms, landscapes, seeds, budget: int, jobs: int = 1) -> list[ExperimentResult]:
    """Full algorithm x landscape x seed grid.

    ``algorithms`` is a list of (name, Algorithm) pairs. Runs are
    independent (one RNG stream and one fitness instance each) and may be
    spread over ``jobs`` worker processes; the returned rows are in
    canonical sorted order either way.
    """
    if not algorithms or not landscapes or not seeds:
        raise ValueError("algorithms, landscapes, and seeds must be nonempty")
    tasks = [
        (name, algorithm, landscape, int(seed), budget)
        for name, algorithm in algorithms
        for landscape in landscapes
        for seed in seeds
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one_star, tasks))
    else:
        results = [_run_one(*task) for task in tasks]
    return sorted(results, key=ExperimentResult.sort_key)


def _run_one_star(task):
    return _run_one(*task)


def dimensionality_sweep(algorithm_factory, landscape_family, dims, seeds, budget: int):
    """Median evaluations-to-threshold per dimension.

    ``algorithm_factory()`` builds a fresh Algorithm, ``landscape_family(d)``
    the landscape at each dimension. DNFs are counted at budget+1; when they
    are the majority the median is reported as "DNF-majority" instead of a
    number.
    """
    dims = list(dims)
    if not dims or sorted(dims) != dims:
        raise ValueError("dims must be nonempty and ascending")
    rows = []
    for d in dims:
        landscape = landscape_family(d)
        results = [
            _run_one("sweep", algorithm_factory(), landscape, seed, budget)
            for seed in seeds
        ]
        evals = np.array(
            [
                r.evaluations_to_threshold if r.evaluations_to_threshold is not None else budget + 1
                for r in results
            ],
            dtype=float,
        )
        dnf = sum(r.evaluations_to_threshold is None for r in results)
        row = {
            "dimension": d,
            "dnf_fraction": dnf / len(results),
            "median_evals": (
                "DNF-majority" if dnf * 2 > len(results) else float(np.median(evals))
            ),
        }
        rows.append(row)
    return rows


def sign_test(a, b) -> dict:
    """Paired two-sided sign test on evaluations-to-threshold sequences.

    Lower is better; None (DNF) counts as budget+1 on both sides, so
    DNF-vs-DNF pairs become ties and are discarded, as usual for the sign
    test. Returns wins for a, wins for b, ties, and the p-value (1.0 when
    every pair ties).
    """
    if len(a) != len(b):
        raise ValueError("paired samples must have equal length")
    wins_a = sum(x < y for x, y in zip(a, b))
    wins_b = sum(y < x for x, y in zip(a, b))
    ties = len(a) - wins_a - wins_b
    n = wins_a + wins_b
    p_value = 1.0 if n == 0 else float(binomtest(wins_a, n, 0.5).pvalue)
    return {"wins_a": wins_a, "wins_b": wins_b, "ties": ties, "p_value": p_value}


def _effective_evals(result: ExperimentResult) -> int:
    if result.evaluations_to_threshold is None:
        return result.budget + 1
    return result.evaluations_to_threshold


def summarize(results, baseline: str = "random") -> dict:
    """Per-cell medians plus paired sign-test verdicts against a baseline.

    Verdicts: "better-than-baseline" / "worse-than-baseline" when the
    two-sided sign test is significant at 0.05, otherwise "parity".
    """
    cells: dict[tuple, list[ExperimentResult]] = {}
    for result in results:
        cells.setdefault((result.algorithm, result.landscape, result.dimension), []).append(result)

    summary: dict = {"cells": {}, "comparisons": {}}
    for (algorithm, landscape, dimension), rows in sorted(cells.items()):
        evals = np.array([_effective_evals(r) for r in rows], dtype=float)
        dnf = sum(r.evaluations_to_threshold is None for r in rows)
        key = f"{algorithm}|{landscape}|{dimension}"
        summary["cells"][key] = {
            "runs": len(rows),
            "dnf": dnf,
            "median_evals": (
                "DNF-majority" if dnf * 2 > len(rows) else float(np.median(evals))
            ),
            "median_final_best": float(np.median([r.final_best for r in rows])),
        }

    by_algorithm: dict[str, dict] = {}
    for (algorithm, landscape, dimension), rows in cells.items():
        by_algorithm.setdefault(algorithm, {})[(landscape, dimension)] = rows
    base = by_algorithm.get(baseline, {})
    for algorithm, per_landscape in sorted(by_algorithm.items()):
        if algorithm == baseline:
            continue
        for (landscape, dimension), rows in sorted(per_landscape.items()):
            base_rows = base.get((landscape, dimension))
            if not base_rows:
                continue
            paired_a = {r.seed: _effective_evals(r) for r in rows}
            paired_b = {r.seed: _effective_evals(r) for r in base_rows}
            shared = sorted(set(paired_a) & set(paired_b))
            if not shared:
                continue
            test = sign_test([paired_a[s] for s in shared], [paired_b[s] for s in shared])
            if test["p_value"] <= 0.05 and test["wins_a"] > test["wins_b"]:
                verdict = "better-than-baseline"
            elif test["p_value"] <= 0.05 and test["wins_b"] > test["wins_a"]:
                verdict = "worse-than-baseline"
            else:
                verdict = "parity"
            summary["comparisons"][f"{algorithm}|{landscape}|{dimension}"] = {
                "baseline": baseline,
                "pairs": len(shared),
                **test,
                "verdict": verdict,
            }
    return summary


def results_csv_text(results) -> str:
    lines = ["algorithm,landscape,dimension,seed,evals_to_threshold,final_best"]
    for r in results:
        evals = "DNF" if r.evaluations_to_threshold is None else str(r.evaluations_to_threshold)
        lines.append(
            f"{r.algorithm},{r.landscape},{r.dimension},{r.seed},{evals},{fmt(r.final_best)}"
        )
    return "\n".join(lines) + "\n"
