"""Baseline samplers under the shared step interface: pure random search,
simulated annealing, a genetic algorithm, and a covariance-adapting
evolution strategy.

These are deliberately simplified, testable implementations, not tuned
reference codes. Selection in the GA and ES is rank-based throughout, so the
sequence of evaluated points is invariant under any strictly increasing
transform of the fitness values. Each sampler encodes an implicit assumption
about the fitness landscape; the configs make that assumption explicit
(mutation scales, cooling schedules, covariance learning rates).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .core import (
    Algorithm,
    AlgorithmState,
    BoxDomain,
    Dataset,
    FitnessFunction,
    RngStream,
    RunTrace,
    run_algorithm,
)

__all__ = [
    "SaConfig",
    "GaConfig",
    "EsConfig",
    "RandomSearch",
    "SimulatedAnnealing",
    "GeneticAlgorithm",
    "EvolutionStrategy",
    "random_search",
    "simulated_annealing",
    "genetic_algorithm",
    "evolution_strategy",
    "covariance_axis_ratio",
]


class RandomSearch(Algorithm):
    """One i.i.d. uniform point per step: the no-prior baseline."""

    name = "random"

    def init_state(self, domain: BoxDomain, rng: RngStream) -> AlgorithmState:
        return AlgorithmState(domain=domain)

    def step(self, state, dataset, rng):
        return state.domain.sample_uniform(rng, 1), state


@dataclass(frozen=True)
class SaConfig:
    initial_temp: float = 1.0
    cooling_rate: float = 0.98
    step_scale: float = 0.1  # Gaussian proposal sigma as a fraction of domain width

    def __post_init__(self):
        if self.initial_temp <= 0:
            raise ValueError("initial_temp must be positive")
        if not 0.0 < self.cooling_rate < 1.0:
            raise ValueError("cooling_rate must lie in (0, 1)")
        if self.step_scale <= 0:
            raise ValueError("step_scale must be positive")


@dataclass
class SaState(AlgorithmState):
    current_x: np.ndarray | None = None
    current_y: float = -np.inf
    temperature: float = 1.0


class SimulatedAnnealing(Algorithm):
    """Metropolis acceptance of Gaussian moves with geometric cooling.

    Maximization: a move with gain >= 0 is always accepted, a loss with
    probability exp(gain / T); the temperature is multiplied by the cooling
    rate after every proposal.
    """

    name = "sa"

    def __init__(self, config: SaConfig | None = None):
        self.config = config if config is not None else SaConfig()

    def init_state(self, domain: BoxDomain, rng: RngStream) -> SaState:
        return SaState(domain=domain, temperature=self.config.initial_temp)

    @staticmethod
    def acceptance_probability(gain: float, temperature: float) -> float:
        if gain >= 0:
            return 1.0
        if temperature <= 0:
            return 0.0
        return float(np.exp(gain / temperature))

    def step(self, state: SaState, dataset: Dataset, rng: RngStream):
        gen = rng.generator
        if len(dataset) == 0:
            return state.domain.sample_uniform(rng, 1), state

        # settle the fate of the previous proposal now that its y is known
        x_prop, y_prop = dataset.records[-1]
        if state.current_x is None:
            state.current_x, state.current_y = x_prop, y_prop
        else:
            gain = y_prop - state.current_y
            if gen.random() < self.acceptance_probability(gain, state.temperature):
                state.current_x, state.current_y = x_prop, y_prop
        state.temperature *= self.config.cooling_rate

        sigma = self.config.step_scale * state.domain.width
        move = gen.standard_normal(state.domain.dimension) * sigma
        return (state.current_x + move)[None, :], state


@dataclass(frozen=True)
class GaConfig:
    population: int = 20
    crossover_rate: float = 0.9
    mutation_rate: float = 0.2
    mutation_sigma: float = 0.05  # per-gene Gaussian sigma as a fraction of width
    elitism: int = 1
    tournament_size: int = 3

    def __post_init__(self):
        if self.population < 2 or self.population % 2 != 0:
            raise ValueError("population must be a positive even integer")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValueError("crossover_rate must lie in [0, 1]")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")
        if self.mutation_sigma <= 0:
            raise ValueError("mutation_sigma must be positive")
        if not 0 <= self.elitism < self.population:
            raise ValueError("elitism must be < population")
        if not 1 <= self.tournament_size <= self.population:
            raise ValueError("tournament_size must be <= population")


@dataclass
class GaState(AlgorithmState):
    generation: int = 0
    generation_start: int = 0


class GeneticAlgorithm(Algorithm):
    """Generational GA: tournament selection, uniform crossover, per-gene
    Gaussian mutation, elitism. Works on the evaluated (clamped) individuals
    read back from the dataset; offspring are clamped before proposal."""

    name = "ga"

    def __init__(self, config: GaConfig | None = None):
        self.config = config if config is not None else GaConfig()

    def init_state(self, domain: BoxDomain, rng: RngStream) -> GaState:
        return GaState(domain=domain)

    def _tournament(self, gen, ys: np.ndarray) -> int:
        entrants = gen.integers(0, ys.size, size=self.config.tournament_size)
        return int(entrants[np.argmax(ys[entrants])])

    def step(self, state: GaState, dataset: Dataset, rng: RngStream):
        config = self.config
        gen = rng.generator
        domain = state.domain
        pop = config.population
        if len(dataset) == 0:
            state.generation = 1
            return domain.sample_uniform(rng, pop), state

        start = state.generation_start
        parents = dataset.x_array()[start : start + pop]
        ys = dataset.y_array()[start : start + pop]

        children = []
        # stable order of fitness ranks; ties keep dataset order
        elite_order = np.argsort(-ys, kind="stable")[: config.elitism]
        children.extend(parents[i].copy() for i in elite_order)

        sigma = config.mutation_sigma * domain.width
        while len(children) < pop:
            i, j = self._tournament(gen, ys), self._tournament(gen, ys)
            a, b = parents[i].copy(), parents[j].copy()
            if gen.random() < config.crossover_rate:
                mask = gen.random(domain.dimension) < 0.5
                a[mask], b[mask] = b[mask], a[mask].copy()
            for child in (a, b):
                mutate = gen.random(domain.dimension) < config.mutation_rate
                child[mutate] += gen.standard_normal(int(np.sum(mutate))) * sigma[mutate]
                if len(children) < pop:
                    children.append(np.clip(child, domain.lower, domain.upper))

        state.generation += 1
        state.generation_start = start + pop
        return np.vstack(children), state


@dataclass(frozen=True)
class EsConfig:
    offspring: int = 12  # lambda
    parents: int = 3  # mu, the selected fraction
    initial_sigma: float = 0.3  # step size as a fraction of the largest width
    covariance_learning_rate: float = 0.25

    def __post_init__(self):
        if self.offspring < 2:
            raise ValueError("offspring must be >= 2")
        if not 1 <= self.parents <= self.offspring:
            raise ValueError("parents must be in [1, offspring]")
        if self.initial_sigma <= 0:
            raise ValueError("initial_sigma must be positive")
        if not 0.0 < self.covariance_learning_rate <= 1.0:
            raise ValueError("covariance_learning_rate must lie in (0, 1]")


@dataclass
class EsState(AlgorithmState):
    mean: np.ndarray | None = None
    sigma: float = 0.0
    cov: np.ndarray | None = None
    generation: int = 0
    generation_start: int = 0
    prev_best: float = np.nan


class EvolutionStrategy(Algorithm):
    """(mu, lambda) evolution strategy with a rank-mu covariance update.

    A trimmed-down covariance adaptation: offspring are drawn from
    Normal(mean, sigma^2 C); the mean moves to the average of the mu best;
    C is an exponential moving average of the scatter of the selected steps,
    renormalized to trace d so sigma alone carries the scale; sigma follows
    a 1/5-style success rule, counting offspring that beat the previous
    generation's best. No evolution paths and no weighted recombination.
    """

    name = "es"

    SIGMA_UP = 1.22
    SIGMA_DOWN = 0.82
    TARGET_SUCCESS = 0.2

    def __init__(self, config: EsConfig | None = None):
        self.config = config if config is not None else EsConfig()

    def init_state(self, domain: BoxDomain, rng: RngStream) -> EsState:
        d = domain.dimension
        return EsState(
            domain=domain,
            mean=domain.sample_uniform(rng, 1)[0],
            sigma=self.config.initial_sigma * float(np.max(domain.width)),
            cov=np.eye(d),
        )

    def _sample_offspring(self, state: EsState, gen) -> np.ndarray:
        d = state.domain.dimension
        cov = state.cov
        for attempt in range(6):
            try:
                chol = linalg.cholesky(cov, linalg.default_jitter(cov))
                break
            except linalg.NotPositiveDefinite:
                cov = cov + (10.0 ** (attempt - 8)) * np.eye(d)
        else:
            cov, chol = np.eye(d), np.eye(d)
        state.cov = cov
        z = gen.standard_normal((self.config.offspring, d))
        return state.mean + state.sigma * (z @ chol.T)

    def step(self, state: EsState, dataset: Dataset, rng: RngStream):
        config = self.config
        gen = rng.generator
        d = state.domain.dimension

        if len(dataset) > 0:
            start = state.generation_start
            xs = dataset.x_array()[start : start + config.offspring]
            ys = dataset.y_array()[start : start + config.offspring]
            order = np.argsort(-ys, kind="stable")[: config.parents]

            steps = (xs[order] - state.mean) / state.sigma
            scatter = steps.T @ steps / config.parents
            lr = config.covariance_learning_rate
            cov = (1.0 - lr) * state.cov + lr * scatter
            cov = 0.5 * (cov + cov.T)
            trace = float(np.trace(cov))
            if trace > 0:
                cov *= d / trace
            state.cov = cov
            state.mean = np.mean(xs[order], axis=0)

            if np.isfinite(state.prev_best):
                success = float(np.mean(ys > state.prev_best))
                state.sigma *= self.SIGMA_UP if success > self.TARGET_SUCCESS else self.SIGMA_DOWN
                width = float(np.max(state.domain.width))
                state.sigma = float(np.clip(state.sigma, 1e-12 * width, 10.0 * width))
            state.prev_best = float(np.max(ys))
            state.generation_start = start + config.offspring

        state.generation += 1
        return self._sample_offspring(state, gen), state


def covariance_axis_ratio(cov: np.ndarray) -> float:
    """sqrt(largest/smallest eigenvalue): the principal-axis length ratio."""
    eigenvalues = np.linalg.eigvalsh(np.asarray(cov, dtype=float))
    smallest = max(float(eigenvalues[0]), 1e-300)
    return float(np.sqrt(eigenvalues[-1] / smallest))


def random_search(f: FitnessFunction, domain: BoxDomain, budget: int, rng: RngStream) -> RunTrace:
    return run_algorithm(RandomSearch(), f, domain, budget, rng)


def simulated_annealing(
    f: FitnessFunction, domain: BoxDomain, config: SaConfig, budget: int, rng: RngStream
) -> RunTrace:
    return run_algorithm(SimulatedAnnealing(config), f, domain, budget, rng)


def genetic_algorithm(
    f: FitnessFunction, domain: BoxDomain, config: GaConfig, budget: int, rng: RngStream
) -> RunTrace:
    if budget < config.population:
        raise ValueError("budget must cover at least one generation")
    return run_algorithm(GeneticAlgorithm(config), f, domain, budget, rng)


def evolution_strategy(
    f: FitnessFunction, domain: BoxDomain, config: EsConfig, budget: int, rng: RngStream
) -> RunTrace:
    if budget < config.offspring:
        raise ValueError("budget must cover at least one generation")
    return run_algorithm(EvolutionStrategy(config), f, domain, budget, rng)
