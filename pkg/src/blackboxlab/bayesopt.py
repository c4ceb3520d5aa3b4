"""Bayesian optimization: Latin hypercube initial design, GP surrogate,
acquisition maximization, infill, repeat.

The acquisition is expected improvement by default (upper confidence bound
available for ablation). The true fitness is never touched while the
acquisition is being maximized; it is spent only on the infill point itself.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr

from . import gp, linalg
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
    "BoConfig",
    "latin_hypercube",
    "expected_improvement",
    "upper_confidence_bound",
    "maximize_acquisition",
    "BayesianOptimization",
    "bo_run",
]

ACQUISITIONS = ("expected_improvement", "upper_confidence_bound")


@dataclass(frozen=True)
class BoConfig:
    """Loop controls.

    ``xi=None`` uses the adaptive offset 0.01*|best| at each infill;
    ``refit_every=k`` re-optimizes hyperparameters every k-th infill and
    reuses them in between (the Gram factor is always rebuilt on all data).
    """

    init_design_size: int = 8
    iterations: int = 30
    acquisition: str = "expected_improvement"
    xi: float | None = None
    ucb_beta: float = 2.0
    acq_multistarts: int = 32
    acq_local_steps: int = 50
    refit_every: int = 1
    fit: gp.GpFitConfig | None = None

    def __post_init__(self):
        if self.init_design_size < 2:
            raise ValueError("init_design_size must be >= 2")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.acquisition not in ACQUISITIONS:
            raise ValueError(f"acquisition must be one of {ACQUISITIONS}")
        if self.xi is not None and self.xi < 0:
            raise ValueError("xi must be nonnegative")
        if self.ucb_beta <= 0:
            raise ValueError("ucb_beta must be positive")
        if min(self.acq_multistarts, self.acq_local_steps, self.refit_every) < 1:
            raise ValueError("acq_multistarts, acq_local_steps, refit_every must be >= 1")


def latin_hypercube(n: int, domain: BoxDomain, rng: RngStream) -> np.ndarray:
    """n stratified points, shape (n, d): in every dimension exactly one
    point falls in each of the n equal-width strata."""
    if n < 1:
        raise ValueError("n must be >= 1")
    gen = rng.generator
    d = domain.dimension
    points = np.empty((n, d))
    for j in range(d):
        strata = gen.permutation(n)
        offsets = gen.random(n)
        points[:, j] = domain.lower[j] + (strata + offsets) * (domain.width[j] / n)
    return points


def expected_improvement(mean, variance, best, xi=0.0):
    """Closed-form E[max(Y - best - xi, 0)] for Y ~ Normal(mean, variance).

    Vectorized over mean/variance; returns a scalar for scalar input. With
    zero variance this degenerates to max(mean - best - xi, 0).
    """
    mean = np.asarray(mean, dtype=float)
    variance = np.asarray(variance, dtype=float)
    if np.any(variance < 0):
        raise ValueError("variance must be nonnegative")
    sigma = np.sqrt(variance)
    delta = mean - best - xi
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, delta / np.where(sigma > 0, sigma, 1.0), 0.0)
        pdf = np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)
        ei = np.where(sigma > 0, delta * ndtr(z) + sigma * pdf, np.maximum(delta, 0.0))
    out = np.maximum(ei, 0.0)
    return float(out) if out.ndim == 0 else out


def upper_confidence_bound(mean, variance, beta=2.0):
    mean = np.asarray(mean, dtype=float)
    variance = np.asarray(variance, dtype=float)
    out = mean + beta * np.sqrt(variance)
    return float(out) if out.ndim == 0 else out


def _acquisition_batch(model, points, best, config: BoConfig):
    means, variances = model.posterior_batch(points)
    if config.acquisition == "expected_improvement":
        xi = 0.01 * abs(best) if config.xi is None else config.xi
        return expected_improvement(means, variances, best, xi)
    return upper_confidence_bound(means, variances, config.ucb_beta)


def maximize_acquisition(
    model: gp.GpModel, domain: BoxDomain, config: BoConfig, rng: RngStream
) -> np.ndarray:
    """Multistart compass search for the acquisition maximizer.

    All multistart trajectories advance in lockstep; every probe of every
    trajectory competes for the returned point, ties broken by probe order,
    so the result is deterministic and its acquisition value is >= every
    value seen during the search.
    """
    best_y = float(np.max(model.train_y))
    m, d = config.acq_multistarts, domain.dimension

    current = domain.sample_uniform(rng, m)
    values = _acquisition_batch(model, current, best_y, config)
    top = int(np.argmax(values))
    top_value, top_point = values[top], current[top].copy()

    deltas = np.full(m, 0.25 * float(np.max(domain.width)))
    offsets = np.concatenate([np.eye(d), -np.eye(d)])  # (2d, d) probe pattern
    for _ in range(config.acq_local_steps):
        probes = current[:, None, :] + deltas[:, None, None] * offsets[None, :, :]
        np.clip(probes, domain.lower, domain.upper, out=probes)
        flat = probes.reshape(m * 2 * d, d)
        probe_values = _acquisition_batch(model, flat, best_y, config).reshape(m, 2 * d)

        cand = int(np.argmax(probe_values))
        if probe_values.flat[cand] > top_value:
            top_value = probe_values.flat[cand]
            top_point = flat[cand].copy()

        col = np.argmax(probe_values, axis=1)
        row_best = probe_values[np.arange(m), col]
        improved = row_best > values
        current[improved] = probes[np.arange(m), col][improved]
        values[improved] = row_best[improved]
        deltas[~improved] *= 0.5
    return top_point


@dataclass
class BoState(AlgorithmState):
    step_index: int = 0
    hyper: gp.GpHyperparams | None = None
    infills: int = 0


class BayesianOptimization(Algorithm):
    """The surrogate loop under the unified sampler interface: the first
    step proposes the whole initial design, each later step one infill."""

    name = "bo"

    def __init__(self, config: BoConfig | None = None):
        self.config = config if config is not None else BoConfig()

    def init_state(self, domain: BoxDomain, rng: RngStream) -> BoState:
        return BoState(domain=domain)

    def _fit_config(self, domain: BoxDomain) -> gp.GpFitConfig:
        fit = self.config.fit
        if fit is None:
            return gp.GpFitConfig(domain=domain)
        if fit.domain is None:
            return replace(fit, domain=domain)
        return fit

    def _build_model(self, dataset: Dataset, hyper: gp.GpHyperparams) -> gp.GpModel:
        # near-duplicate infills can defeat the default jitter; back off by
        # inflating the noise floor rather than failing the run
        noise = hyper.noise_variance
        for _ in range(8):
            try:
                return gp.GpModel.build(dataset.x_array(), dataset.y_array(), hyper)
            except linalg.NotPositiveDefinite:
                noise = max(noise, 1e-12 * hyper.signal_variance) * 10.0
                hyper = replace(hyper, noise_variance=noise)
        raise linalg.NotPositiveDefinite("surrogate Gram matrix stayed singular")

    def step(self, state: BoState, dataset: Dataset, rng: RngStream):
        config = self.config
        stream = rng.child(state.step_index)
        if state.step_index == 0:
            state.step_index = 1
            return latin_hypercube(config.init_design_size, state.domain, stream), state

        ys = dataset.y_array()
        if float(np.ptp(ys)) == 0.0:
            # constant observations: the posterior ranks nothing and the
            # acquisition surface is numerical noise, so fall back to a
            # uniform draw (no information = random search)
            state.step_index += 1
            state.infills += 1
            return state.domain.sample_uniform(stream.child(1), 1), state

        if state.hyper is None or state.infills % config.refit_every == 0:
            model = gp.gp_fit(dataset, self._fit_config(state.domain), stream.child(0))
            state.hyper = model.hyper
        else:
            model = self._build_model(dataset, state.hyper)
        point = maximize_acquisition(model, state.domain, config, stream.child(1))
        state.step_index += 1
        state.infills += 1
        return point[None, :], state


def bo_run(
    f: FitnessFunction, domain: BoxDomain, config: BoConfig, rng: RngStream
) -> RunTrace:
    """Full loop: trace of exactly init_design_size + iterations evaluations
    (a tighter fitness budget raises BudgetExhausted from the oracle)."""
    total = config.init_design_size + config.iterations
    return run_algorithm(BayesianOptimization(config), f, domain, total, rng)
