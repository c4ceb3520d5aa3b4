"""Black-box optimization toolkit.

Search algorithms as sampling processes over box domains, a Gaussian-process
surrogate with expected-improvement infill, classic metaheuristic baselines,
an exact no-free-lunch verifier on finite function classes, and a benchmark
harness with deterministic seeded runs.
"""

from ._kernels import BACKEND
from .core import (
    Algorithm,
    AlgorithmState,
    BoxDomain,
    BudgetExhausted,
    Dataset,
    DimensionMismatch,
    EmptyInterval,
    FitnessFunction,
    OutOfDomain,
    RngStream,
    RunTrace,
    StateNotInitialized,
    append_observation,
    evaluate,
    make_box_domain,
    run_algorithm,
    step_algorithm,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "__version__",
    "Algorithm",
    "AlgorithmState",
    "BoxDomain",
    "BudgetExhausted",
    "Dataset",
    "DimensionMismatch",
    "EmptyInterval",
    "FitnessFunction",
    "OutOfDomain",
    "RngStream",
    "RunTrace",
    "StateNotInitialized",
    "append_observation",
    "evaluate",
    "make_box_domain",
    "run_algorithm",
    "step_algorithm",
]
