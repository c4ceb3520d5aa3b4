"""Sampler behavior: uniformity, Metropolis acceptance frequencies,
generational GA semantics, covariance adaptation, and the rank-invariance
property shared by GA and ES."""

import math
from itertools import combinations

import numpy as np
import pytest

from blackboxlab.core import Dataset, FitnessFunction, RngStream, make_box_domain, run_algorithm
from blackboxlab.metaheuristics import (
    EsConfig,
    EvolutionStrategy,
    GaConfig,
    GeneticAlgorithm,
    RandomSearch,
    SaConfig,
    SimulatedAnnealing,
    covariance_axis_ratio,
    evolution_strategy,
    genetic_algorithm,
    random_search,
    simulated_annealing,
)


def sphere_fitness(domain):
    return FitnessFunction(domain, lambda x: -float(x @ x))


class TestRandomSearch:
    def test_budget_one(self):
        domain = make_box_domain([0.0], [1.0])
        trace = random_search(sphere_fitness(domain), domain, 1, RngStream(0))
        assert len(trace) == 1

    def test_subset_success_probability_by_enumeration(self):
        # drawing k=5 distinct cells out of m=10: the chance of covering the
        # single best cell is k/m, verified by full enumeration of subsets
        m, k = 10, 5
        subsets = list(combinations(range(m), k))
        containing = sum(1 for s in subsets if 0 in s)
        assert containing / len(subsets) == k / m

    def test_uniformity_kolmogorov_smirnov(self):
        domain = make_box_domain([0.0], [1.0])
        f = FitnessFunction(domain, lambda x: 0.0)
        trace = random_search(f, domain, 10_000, RngStream(123))
        draws = np.sort(trace.dataset.x_array()[:, 0])
        n = draws.size
        grid = np.arange(1, n + 1) / n
        ks = float(np.max(np.maximum(grid - draws, draws - (grid - 1 / n))))
        assert ks < 1.63 / math.sqrt(n)  # 1% critical value


class TestSimulatedAnnealing:
    def test_acceptance_probability_values(self):
        assert SimulatedAnnealing.acceptance_probability(0.0, 1.0) == 1.0
        assert SimulatedAnnealing.acceptance_probability(0.5, 1.0) == 1.0
        assert SimulatedAnnealing.acceptance_probability(-1.0, 1.0) == pytest.approx(
            math.exp(-1.0), rel=1e-12
        )

    def _acceptance_frequency(self, gain, temperature, trials, seed=0):
        """Drive the real step() against a fixed (gain, T) decision."""
        domain = make_box_domain([0.0], [1.0])
        algo = SimulatedAnnealing(SaConfig(initial_temp=temperature))
        rng = RngStream(seed)
        accepted = 0
        for _ in range(trials):
            state = algo.init_state(domain, rng)
            state.current_x = np.array([0.5])
            state.current_y = 0.0
            state.temperature = temperature
            dataset = Dataset()
            dataset.append([0.25], gain)  # pending proposal with y = gain
            algo.step(state, dataset, rng)
            accepted += state.current_y == gain
        return accepted / trials

    def test_acceptance_frequency_matches_formula(self):
        trials = 100_000
        p = math.exp(-1.0)
        observed = self._acceptance_frequency(-1.0, 1.0, trials)
        sigma = math.sqrt(p * (1 - p) / trials)
        assert abs(observed - p) < 3 * sigma

    def test_frozen_system_rejects(self):
        observed = self._acceptance_frequency(-1.0, 1e-12, 2000)
        assert observed < 0.001

    def test_cooling_schedule_geometric(self):
        domain = make_box_domain([0.0], [1.0])
        config = SaConfig(initial_temp=2.0, cooling_rate=0.5)
        algo = SimulatedAnnealing(config)
        f = FitnessFunction(domain, lambda x: float(x[0]))
        state = algo.init_state(domain, RngStream(0))
        dataset = Dataset()
        rng = RngStream(0)
        # the first step only proposes the start point; cooling happens once
        # per acceptance decision afterwards
        for step_index in range(4):
            points, state = algo.step(state, dataset, rng)
            x, _ = domain.clamp(points[0])
            dataset.append(x, f(x))
            expected = 2.0 * 0.5 ** max(0, step_index)
            assert state.temperature == pytest.approx(expected)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SaConfig(cooling_rate=1.0)
        with pytest.raises(ValueError):
            SaConfig(initial_temp=0.0)


class TestGeneticAlgorithm:
    def test_crossover_of_identical_parents_is_identity(self):
        domain = make_box_domain([0.0, 0.0], [1.0, 1.0])
        config = GaConfig(population=4, crossover_rate=1.0, mutation_rate=0.0, elitism=0)
        algo = GeneticAlgorithm(config)
        state = algo.init_state(domain, RngStream(0))
        dataset = Dataset()
        point = np.array([0.3, 0.7])
        for _ in range(4):
            dataset.append(point, 1.0)
        state.generation = 1
        children, _ = algo.step(state, dataset, RngStream(0))
        np.testing.assert_array_equal(children, np.tile(point, (4, 1)))

    def test_elitism_generation_best_monotone(self):
        domain = make_box_domain([-5.12, -5.12], [5.12, 5.12])
        config = GaConfig(population=10, elitism=1)

        def rugged(x):
            return -float(10 * 2 + np.sum(x * x - 10 * np.cos(2 * np.pi * x)))

        f = FitnessFunction(domain, rugged)
        trace = genetic_algorithm(f, domain, config, budget=200, rng=RngStream(3))
        ys = trace.dataset.y_array().reshape(-1, 10)
        generation_best = ys.max(axis=1)
        assert np.all(np.diff(generation_best) >= 0)

    def test_finds_sphere_optimum_statistically(self):
        domain = make_box_domain([-5.0, -5.0], [5.0, 5.0])
        config = GaConfig(population=20)
        hits = 0
        for seed in range(20):
            f = sphere_fitness(domain)
            trace = genetic_algorithm(f, domain, config, budget=1000, rng=RngStream(seed))
            if trace.best_value >= -0.1:
                hits += 1
        assert hits >= 18

    def test_budget_must_cover_generation(self):
        domain = make_box_domain([0.0], [1.0])
        with pytest.raises(ValueError):
            genetic_algorithm(sphere_fitness(domain), domain, GaConfig(population=10), 5, RngStream(0))

    def test_mid_generation_truncation(self):
        domain = make_box_domain([0.0], [1.0])
        config = GaConfig(population=4)
        f = FitnessFunction(domain, lambda x: float(x[0]))
        trace = genetic_algorithm(f, domain, config, budget=10, rng=RngStream(1))
        assert len(trace) == 10  # 2 full generations + 2 of the third

    def test_config_validation(self):
        with pytest.raises(ValueError):
            GaConfig(population=5)  # odd
        with pytest.raises(ValueError):
            GaConfig(elitism=20, population=20)
        with pytest.raises(ValueError):
            GaConfig(tournament_size=30, population=20)


class TestEvolutionStrategy:
    def test_one_generation_accounting(self):
        domain = make_box_domain([0.0, 0.0], [1.0, 1.0])
        config = EsConfig(offspring=4, parents=2)
        f = sphere_fitness(domain)
        trace = evolution_strategy(f, domain, config, budget=4, rng=RngStream(0))
        assert len(trace) == 4
        assert f.call_count == 4

    def _axis_ratios(self, value, seeds, generations, config):
        domain = make_box_domain([-5.0, -5.0], [5.0, 5.0])
        budget = config.offspring * generations
        out = []
        for seed in seeds:
            ratios = []
            f = FitnessFunction(domain, value)
            run_algorithm(
                EvolutionStrategy(config),
                f,
                domain,
                budget,
                RngStream(seed),
                observer=lambda s: ratios.append(covariance_axis_ratio(s.cov)),
            )
            out.append(ratios)
        return out

    def test_near_isotropic_on_sphere(self):
        config = EsConfig()
        histories = self._axis_ratios(lambda x: -float(x @ x), range(10), 31, config)
        conditions = [r[30] ** 2 for r in histories]  # condition = ratio^2
        assert float(np.median(conditions)) < 10.0

    def test_learns_stretched_quadratic_axes(self):
        config = EsConfig()

        def stretched(x):
            return -float(x[0] ** 2 + 100.0 * x[1] ** 2)

        histories = self._axis_ratios(stretched, range(10), 50, config)
        adapted = sum(1 for ratios in histories if max(ratios) > 2.0)
        assert adapted >= 6

    def test_config_validation(self):
        with pytest.raises(ValueError):
            EsConfig(parents=13, offspring=12)
        with pytest.raises(ValueError):
            EsConfig(covariance_learning_rate=0.0)


class TestSharedProperties:
    @pytest.mark.parametrize("budget", [1, 7, 20])
    def test_budget_honored_exactly(self, budget):
        domain = make_box_domain([0.0, 0.0], [1.0, 1.0])
        algos = [
            RandomSearch(),
            SimulatedAnnealing(SaConfig()),
            GeneticAlgorithm(GaConfig(population=4)),
            EvolutionStrategy(EsConfig(offspring=4, parents=2)),
        ]
        for algo in algos:
            f = sphere_fitness(domain)
            trace = run_algorithm(algo, f, domain, budget, RngStream(5))
            assert len(trace) == budget
            assert f.call_count == budget

    @pytest.mark.parametrize(
        "algo_factory",
        [
            lambda: RandomSearch(),
            lambda: SimulatedAnnealing(SaConfig()),
            lambda: GeneticAlgorithm(GaConfig(population=6)),
            lambda: EvolutionStrategy(EsConfig(offspring=6, parents=2)),
        ],
    )
    def test_reproducible_per_seed(self, algo_factory):
        domain = make_box_domain([-1.0, -1.0], [1.0, 1.0])

        def run():
            f = sphere_fitness(domain)
            return run_algorithm(algo_factory(), f, domain, 18, RngStream(42))

        a, b = run(), run()
        np.testing.assert_array_equal(a.dataset.x_array(), b.dataset.x_array())
        np.testing.assert_array_equal(a.best_so_far, b.best_so_far)

    @pytest.mark.parametrize(
        "algo_factory",
        [
            lambda: GeneticAlgorithm(GaConfig(population=6)),
            lambda: EvolutionStrategy(EsConfig(offspring=6, parents=2)),
        ],
    )
    def test_rank_based_selection_monotone_invariance(self, algo_factory):
        # a strictly increasing transform of y must leave the sequence of
        # evaluated points untouched for rank-based algorithms
        domain = make_box_domain([-2.0, -2.0], [2.0, 2.0])

        def base(x):
            return -float(x @ x)

        def transformed(x):
            return math.exp(0.5 * base(x)) * 3.0 - 7.0

        xs = []
        for value in (base, transformed):
            f = FitnessFunction(domain, value)
            trace = run_algorithm(algo_factory(), f, domain, 30, RngStream(77))
            xs.append(trace.dataset.x_array())
        np.testing.assert_array_equal(xs[0], xs[1])
