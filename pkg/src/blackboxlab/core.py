"""Shared domain types: box search spaces, budgeted fitness evaluation,
ordered sample datasets, run traces, and the seeded RNG contract.

Conventions used throughout the toolkit:

* Maximization everywhere. Benchmarks that are usually minimized are wrapped
  by negation at the landscape layer.
* One ``RngStream`` per run. Streams are derived from a master seed through
  ``RngStream.child``; see the class docstring for the exact split rule.
* Points proposed outside the box are clamped to the boundary by the run
  driver before evaluation, and the clamp is recorded on the trace.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DimensionMismatch",
    "EmptyInterval",
    "OutOfDomain",
    "BudgetExhausted",
    "StateNotInitialized",
    "RngStream",
    "BoxDomain",
    "make_box_domain",
    "FitnessFunction",
    "evaluate",
    "Dataset",
    "append_observation",
    "RunTrace",
    "Algorithm",
    "AlgorithmState",
    "step_algorithm",
    "run_algorithm",
]


class DimensionMismatch(ValueError):
    """Vectors/points of incompatible length."""


class EmptyInterval(ValueError):
    """Box bound with lower[i] >= upper[i]."""


class OutOfDomain(ValueError):
    """Evaluation requested at a point outside the search box."""


class BudgetExhausted(RuntimeError):
    """Fitness call past the configured evaluation budget."""


class StateNotInitialized(RuntimeError):
    """Algorithm stepped with a state that was not produced by init_state."""


class RngStream:
    """Deterministic random stream with a documented split rule.

    The generator family is fixed: counter-based Philox-4x64, seeded through
    ``numpy.random.SeedSequence(seed, spawn_key=path)``. Identical
    ``(seed, path)`` gives an identical draw sequence on every platform.

    ``child(i)`` derives an independent substream by appending ``i`` to the
    spawn path; parallel runs must each own a distinct child and never share
    a stream.
    """

    GENERATOR_FAMILY = "philox-4x64"

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        if not 0 <= int(seed) < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        self.seed = int(seed)
        self.path = tuple(int(p) for p in path)
        self.generator = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(self.seed, spawn_key=self.path))
        )

    def child(self, index: int) -> "RngStream":
        return RngStream(self.seed, self.path + (int(index),))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, path={self.path})"


@dataclass(frozen=True)
class BoxDomain:
    """Hyper-rectangle search space: lower[i] <= x[i] <= upper[i], elementwise.

    Bounds must be strictly ordered in every dimension; zero-width dimensions
    are rejected at construction.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.ndim != 1 or upper.ndim != 1:
            raise DimensionMismatch("bounds must be 1-D vectors")
        if lower.shape != upper.shape:
            raise DimensionMismatch(
                f"bound lengths differ: {lower.shape[0]} vs {upper.shape[0]}"
            )
        if lower.size < 1:
            raise DimensionMismatch("domain needs at least one dimension")
        if not np.all(lower < upper):
            bad = int(np.argmin(upper - lower))
            raise EmptyInterval(
                f"lower[{bad}]={lower[bad]} must be < upper[{bad}]={upper[bad]}"
            )
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dimension(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != self.lower.shape:
            raise DimensionMismatch(
                f"point has dimension {x.size}, domain has {self.dimension}"
            )
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def clamp(self, x) -> tuple[np.ndarray, bool]:
        """Project a point onto the box. Returns (point, was_clamped)."""
        x = np.asarray(x, dtype=float)
        if x.shape != self.lower.shape:
            raise DimensionMismatch(
                f"point has dimension {x.size}, domain has {self.dimension}"
            )
        clipped = np.clip(x, self.lower, self.upper)
        return clipped, bool(np.any(clipped != x))

    def sample_uniform(self, rng: RngStream, n: int = 1) -> np.ndarray:
        """n i.i.d. uniform points, shape (n, dimension)."""
        u = rng.generator.random((n, self.dimension))
        return self.lower + u * self.width


def make_box_domain(lower, upper) -> BoxDomain:
    return BoxDomain(np.asarray(lower, dtype=float), np.asarray(upper, dtype=float))


class FitnessFunction:
    """Black-box fitness oracle with call accounting and an optional budget.

    Only input->output pairs are observable. Every evaluation increments
    ``call_count`` by exactly one; a call past the budget raises
    ``BudgetExhausted`` before the wrapped evaluator runs.

    The counter is not synchronized: one instance serves exactly one run.
    Independent runs get independent instances (see Landscape.fitness()).
    """

    def __init__(self, domain: BoxDomain, evaluator, budget: int | None = None):
        if budget is not None and budget < 1:
            raise ValueError("budget must be a positive integer")
        self.domain = domain
        self.evaluator = evaluator
        self.budget = budget
        self.call_count = 0

    def __call__(self, x) -> float:
        return evaluate(self, x)

    @property
    def remaining(self) -> int | None:
        if self.budget is None:
            return None
        return self.budget - self.call_count


def evaluate(f: FitnessFunction, x) -> float:
    """One black-box oracle call: domain check, budget check, count, evaluate."""
    x = np.asarray(x, dtype=float)
    if not f.domain.contains(x):
        raise OutOfDomain(f"point {x.tolist()} outside the search box")
    if f.budget is not None and f.call_count >= f.budget:
        raise BudgetExhausted(f"budget of {f.budget} evaluations spent")
    f.call_count += 1
    return float(f.evaluator(x))


class Dataset:
    """Ordered sample of (x, y) observations; index = iteration counter."""

    def __init__(self):
        self._xs: list[np.ndarray] = []
        self._ys: list[float] = []

    def __len__(self) -> int:
        return len(self._ys)

    @property
    def records(self) -> list[tuple[np.ndarray, float]]:
        return list(zip(self._xs, self._ys))

    def append(self, x, y: float):
        x = np.array(x, dtype=float, copy=True)
        x.flags.writeable = False
        self._xs.append(x)
        self._ys.append(float(y))

    def x_array(self) -> np.ndarray:
        """All points as an (n, d) array; (0, 0) when empty."""
        if not self._xs:
            return np.empty((0, 0))
        return np.vstack(self._xs)

    def y_array(self) -> np.ndarray:
        return np.asarray(self._ys, dtype=float)


def append_observation(d: Dataset, x, y: float) -> Dataset:
    d.append(x, y)
    return d


@dataclass
class RunTrace:
    """Evaluation history of one run, with the running maximum of y.

    ``best_so_far[i] = max(y[0..i])``; monotone nondecreasing by
    construction. ``clamped`` lists indices of evaluations whose proposal was
    projected onto the box by the driver.
    """

    dataset: Dataset
    best_so_far: np.ndarray
    seed: int
    clamped: tuple[int, ...] = ()

    @classmethod
    def from_dataset(cls, dataset: Dataset, seed: int, clamped=()) -> "RunTrace":
        ys = dataset.y_array()
        best = np.maximum.accumulate(ys) if ys.size else ys
        return cls(dataset=dataset, best_so_far=best, seed=int(seed), clamped=tuple(clamped))

    def __len__(self) -> int:
        return len(self.dataset)

    @property
    def best_value(self) -> float:
        if len(self.dataset) == 0:
            raise ValueError("empty trace has no best value")
        return float(self.best_so_far[-1])


@dataclass
class AlgorithmState:
    """Base state for the step interface. Subclasses add algorithm fields.

    ``evaluated`` tracks how many dataset records the algorithm has already
    consumed, so a step can locate the fitness values of its own proposals.
    """

    domain: BoxDomain
    evaluated: int = 0
    _initialized: bool = field(default=True, repr=False)


class Algorithm:
    """A search algorithm as a sampling process.

    Each step maps the current sample (the dataset) plus random state to one
    or more new candidate points; the batch size is the algorithm's own
    choice. Implementations must be deterministic given (state, dataset, rng
    position) and must not evaluate the fitness themselves -- the run driver
    owns evaluation, clamping, and budget accounting.
    """

    name = "algorithm"

    def init_state(self, domain: BoxDomain, rng: RngStream) -> AlgorithmState:
        raise NotImplementedError

    def step(
        self, state: AlgorithmState, dataset: Dataset, rng: RngStream
    ) -> tuple[np.ndarray, AlgorithmState]:
        """Return (points, new_state); points has shape (k, d) with k >= 1."""
        raise NotImplementedError


def step_algorithm(
    algorithm: Algorithm, state: AlgorithmState, dataset: Dataset, rng: RngStream
) -> tuple[np.ndarray, AlgorithmState]:
    """Checked step: rejects states that did not come from init_state."""
    if not isinstance(state, AlgorithmState) or not getattr(state, "_initialized", False):
        raise StateNotInitialized(f"{algorithm.name} state was not initialized")
    points, new_state = algorithm.step(state, dataset, rng)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] < 1 or points.shape[1] != state.domain.dimension:
        raise DimensionMismatch(
            f"step produced shape {points.shape}, expected (k>=1, {state.domain.dimension})"
        )
    return points, new_state


def run_algorithm(
    algorithm: Algorithm,
    f: FitnessFunction,
    domain: BoxDomain,
    budget: int,
    rng: RngStream,
    observer=None,
) -> RunTrace:
    """Drive an algorithm against a fitness function for exactly ``budget``
    evaluations (fewer only if the fitness's own budget runs out first).

    Out-of-box proposals are clamped to the boundary and the indices of
    clamped evaluations recorded. ``observer``, when given, is called as
    ``observer(state)`` after each step's proposals have been evaluated;
    used for diagnostics, never by the algorithms themselves.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    state = algorithm.init_state(domain, rng)
    dataset = Dataset()
    clamped: list[int] = []
    while len(dataset) < budget:
        points, state = step_algorithm(algorithm, state, dataset, rng)
        for point in points:
            if len(dataset) >= budget:
                break
            x, was_clamped = domain.clamp(point)
            y = evaluate(f, x)
            dataset.append(x, y)
            if was_clamped:
                clamped.append(len(dataset) - 1)
        state.evaluated = len(dataset)
        if observer is not None:
            observer(state)
    return RunTrace.from_dataset(dataset, seed=rng.seed, clamped=clamped)
