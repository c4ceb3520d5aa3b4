"""Gaussian-process surrogate: anisotropic squared-exponential kernel,
posterior mean/variance, log marginal likelihood with analytic gradient, and
multistart hyperparameter fitting.

The kernel is k(xi, xj) = sf2 * exp(-0.5 * sum_d ((xi_d - xj_d) / phi_d)^2)
with one length scale per input dimension. The amplitude ``sf2`` and noise
``sn2`` generalize the pure correlation kernel (their sf2=1, sn2=0 special
case); a correlation-only kernel cannot fit data of arbitrary scale. The
prior mean is a fitted constant (the training-y mean), so far from all data
the posterior reverts to it and the variance reverts to sf2.

Hyperparameters are always optimized in log-space, which keeps them positive
without constraints.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, linalg
from .core import BoxDomain, Dataset, DimensionMismatch, RngStream

__all__ = [
    "InsufficientData",
    "GpHyperparams",
    "GpModel",
    "GpFitConfig",
    "kernel_ard_sqexp",
    "kernel_matrix",
    "gp_posterior",
    "log_marginal_likelihood",
    "gp_fit",
]

MODEL_SCHEMA = "blackboxlab-gp-model/1"


class InsufficientData(ValueError):
    """Fitting needs at least two observations."""


@dataclass(frozen=True)
class GpHyperparams:
    """Kernel and mean parameters: all length scales and the signal variance
    strictly positive, noise variance nonnegative."""

    length_scales: np.ndarray
    signal_variance: float = 1.0
    noise_variance: float = 1e-8
    prior_mean: float = 0.0

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.length_scales, dtype=float))
        if ls.ndim != 1 or not np.all(ls > 0):
            raise ValueError("length_scales must be a vector of positive reals")
        if not self.signal_variance > 0:
            raise ValueError("signal_variance must be positive")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be nonnegative")
        ls.flags.writeable = False
        object.__setattr__(self, "length_scales", ls)
        object.__setattr__(self, "signal_variance", float(self.signal_variance))
        object.__setattr__(self, "noise_variance", float(self.noise_variance))
        object.__setattr__(self, "prior_mean", float(self.prior_mean))

    @property
    def dimension(self) -> int:
        return self.length_scales.size


def kernel_ard_sqexp(xi, xj, hyper: GpHyperparams) -> float:
    """Covariance between two points; symmetric in its arguments."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    xj = np.atleast_1d(np.asarray(xj, dtype=float))
    if xi.shape != xj.shape or xi.size != hyper.dimension:
        raise DimensionMismatch(
            f"points of dimension {xi.size}/{xj.size} vs {hyper.dimension} length scales"
        )
    z = (xi - xj) / hyper.length_scales
    return hyper.signal_variance * float(np.exp(-0.5 * np.dot(z, z)))


def _as_points(xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    if xs.ndim == 1:
        xs = xs[:, None]
    return xs


def kernel_matrix(xs, hyper: GpHyperparams) -> np.ndarray:
    """Gram matrix of the kernel over a point list (noise not included)."""
    xs = _as_points(xs)
    if xs.shape[0] < 1:
        raise DimensionMismatch("need at least one point")
    if xs.shape[1] != hyper.dimension:
        raise DimensionMismatch(
            f"points of dimension {xs.shape[1]} vs {hyper.dimension} length scales"
        )
    return _kernels.ard_kernel_matrix(xs, hyper.length_scales, hyper.signal_variance)


@dataclass(frozen=True)
class GpModel:
    """Fitted surrogate: training data, hyperparameters, and the Cholesky
    factor / weight vector of the noisy Gram matrix.

    ``chol`` factors K + (noise_variance + jitter) * I and
    ``alpha = (K + sn2 I)^-1 (y - prior_mean)``; both are recomputable from
    the rest of the fields (and are, on deserialization).
    """

    train_x: np.ndarray
    train_y: np.ndarray
    hyper: GpHyperparams
    chol: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    jitter: float = 0.0

    @classmethod
    def build(cls, train_x, train_y, hyper: GpHyperparams, jitter: float | None = None) -> "GpModel":
        train_x = _as_points(train_x)
        train_y = np.asarray(train_y, dtype=float)
        if train_x.shape[0] != train_y.size:
            raise DimensionMismatch("train_x and train_y lengths differ")
        noisy = kernel_matrix(train_x, hyper)
        noisy[np.diag_indices_from(noisy)] += hyper.noise_variance
        if jitter is None:
            jitter = linalg.default_jitter(noisy)
        chol = linalg.cholesky(noisy, jitter)
        alpha = linalg.solve_upper_t(chol, linalg.solve_lower(chol, train_y - hyper.prior_mean))
        return cls(
            train_x=train_x,
            train_y=train_y,
            hyper=hyper,
            chol=chol,
            alpha=alpha,
            jitter=float(jitter),
        )

    @property
    def size(self) -> int:
        return self.train_y.size

    def posterior(self, x) -> tuple[float, float]:
        return gp_posterior(self, x)

    def posterior_batch(self, xs) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean/variance at many points, shape (m,) each."""
        xs = _as_points(xs)
        if xs.shape[1] != self.hyper.dimension:
            raise DimensionMismatch(
                f"query dimension {xs.shape[1]} vs model dimension {self.hyper.dimension}"
            )
        means, variances = _kernels.posterior_batch(
            self.train_x,
            self.chol,
            self.alpha,
            xs,
            self.hyper.length_scales,
            self.hyper.signal_variance,
            self.hyper.prior_mean,
        )
        variances = _clamp_variance(variances, self.hyper.signal_variance)
        # variance on the order of the factorization jitter is an artifact
        # of regularization, not information; report it as exactly zero so
        # noiseless models interpolate with zero uncertainty
        floor = min(100.0 * self.jitter, 1e-6 * self.hyper.signal_variance)
        variances[variances <= floor] = 0.0
        return means, variances

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema": MODEL_SCHEMA,
                "train_x": self.train_x.tolist(),
                "train_y": self.train_y.tolist(),
                "hyperparameters": {
                    "length_scales": self.hyper.length_scales.tolist(),
                    "signal_variance": self.hyper.signal_variance,
                    "noise_variance": self.hyper.noise_variance,
                    "prior_mean": self.hyper.prior_mean,
                },
                "jitter": self.jitter,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "GpModel":
        doc = json.loads(text)
        if doc.get("schema") != MODEL_SCHEMA:
            raise ValueError(f"unknown model schema {doc.get('schema')!r}")
        h = doc["hyperparameters"]
        hyper = GpHyperparams(
            length_scales=np.asarray(h["length_scales"], dtype=float),
            signal_variance=h["signal_variance"],
            noise_variance=h["noise_variance"],
            prior_mean=h["prior_mean"],
        )
        return cls.build(
            np.asarray(doc["train_x"], dtype=float),
            np.asarray(doc["train_y"], dtype=float),
            hyper,
            jitter=doc["jitter"],
        )


def _clamp_variance(variances, signal_variance):
    """Round-off below zero is clamped; anything further negative is a bug."""
    floor = -1e-8 * max(1.0, signal_variance)
    bad = np.min(variances) if np.size(variances) else 0.0
    if bad < floor:
        raise RuntimeError(
            f"posterior variance {bad} below the consistency floor {floor}"
        )
    return np.maximum(variances, 0.0)


def gp_posterior(model: GpModel, x) -> tuple[float, float]:
    """Posterior mean and variance at one point.

    mean = m + k*^T alpha, variance = k(x,x) - ||L^-1 k*||^2, clamped at 0.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    means, variances = model.posterior_batch(x[None, :])
    return float(means[0]), float(variances[0])


def log_marginal_likelihood(
    train_x, train_y, hyper: GpHyperparams, jitter: float | None = None
) -> tuple[float, np.ndarray]:
    """Log marginal likelihood of the data under the GP prior, with its
    gradient over (log phi_1..phi_d, log sf2, log sn2).

    value = -1/2 (y-m)^T alpha - sum(log diag L) - n/2 log 2pi. The prior
    mean is treated as fixed (not part of the gradient).
    """
    train_x = _as_points(train_x)
    train_y = np.asarray(train_y, dtype=float)
    if train_x.shape[0] != train_y.size:
        raise DimensionMismatch("train_x and train_y lengths differ")
    if train_x.shape[0] < 1:
        raise InsufficientData("need at least one observation")
    if train_x.shape[1] != hyper.dimension:
        raise DimensionMismatch(
            f"points of dimension {train_x.shape[1]} vs {hyper.dimension} length scales"
        )
    if jitter is None:
        jitter = 1e-10 * (hyper.signal_variance + hyper.noise_variance)
    try:
        return _kernels.lml_value_grad(
            train_x,
            train_y,
            hyper.length_scales,
            hyper.signal_variance,
            hyper.noise_variance,
            hyper.prior_mean,
            jitter,
        )
    except ArithmeticError as exc:
        raise linalg.NotPositiveDefinite(str(exc)) from None


@dataclass(frozen=True)
class GpFitConfig:
    """Multistart settings for hyperparameter fitting.

    Initializations are drawn log-uniform: length scales in
    ``length_scale_range`` times the per-dimension width, signal variance in
    ``signal_range`` times the y-variance, noise in ``noise_range`` times the
    y-variance. ``domain`` supplies the widths; without it they fall back to
    the per-dimension span of the training inputs.
    """

    domain: BoxDomain | None = None
    multistarts: int = 8
    max_steps: int = 40
    grad_tol: float = 1e-4
    length_scale_range: tuple[float, float] = (1e-2, 1e1)
    signal_range: tuple[float, float] = (1e-2, 1e2)
    noise_range: tuple[float, float] = (1e-8, 1e-1)


def _ascend(theta, widths, yscale, train_x, train_y, mean, config):
    """Gradient ascent with backtracking line search on the LML, in
    log-hyperparameter space. Returns (best value, best theta)."""
    d = widths.size
    lo = np.concatenate([np.log(1e-3 * widths), [np.log(1e-6 * yscale), np.log(1e-10 * yscale)]])
    hi = np.concatenate([np.log(1e3 * widths), [np.log(1e6 * yscale), np.log(1.0 * yscale)]])
    theta = np.clip(theta, lo, hi)

    def args_of(t):
        sf2, sn2 = float(np.exp(t[d])), float(np.exp(t[d + 1]))
        phi = np.exp(t[:d])
        return phi, sf2, sn2, mean, 1e-10 * (sf2 + sn2)

    def value_only(t):
        # cheap form for line-search candidates
        try:
            return _kernels.lml_value(train_x, train_y, *args_of(t))
        except ArithmeticError:
            return -np.inf

    def value_grad(t):
        try:
            return _kernels.lml_value_grad(train_x, train_y, *args_of(t))
        except ArithmeticError:
            return -np.inf, np.zeros(d + 2)

    value, grad = value_grad(theta)
    if not np.isfinite(value):
        return value, theta
    step = 0.5
    for _ in range(config.max_steps):
        if np.max(np.abs(grad)) < config.grad_tol * max(1.0, abs(value)):
            break
        accepted = False
        t = step
        for _ in range(30):
            candidate = np.clip(theta + t * grad, lo, hi)
            move = candidate - theta
            if np.max(np.abs(move)) < 1e-14:
                break
            cand_value = value_only(candidate)
            if np.isfinite(cand_value) and cand_value > value + 1e-4 * float(grad @ move):
                theta, value = candidate, cand_value
                _, grad = value_grad(candidate)
                step = min(t * 2.0, 4.0)
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
    return value, theta


def gp_fit(dataset: Dataset, config: GpFitConfig | None = None, rng: RngStream | None = None) -> GpModel:
    """Fit hyperparameters by maximizing the log marginal likelihood from
    multistart log-uniform initializations; deterministic given the seed.

    The returned model's LML is >= the LML of every initialization tried.
    """
    if config is None:
        config = GpFitConfig()
    if rng is None:
        rng = RngStream(0)
    if len(dataset) < 2:
        raise InsufficientData(f"need >= 2 observations, got {len(dataset)}")

    train_x = dataset.x_array()
    train_y = dataset.y_array()
    d = train_x.shape[1]
    mean = float(np.mean(train_y))

    if config.domain is not None:
        widths = config.domain.width.astype(float)
    else:
        span = np.ptp(train_x, axis=0)
        widths = np.where(span > 0, span, 1.0)
    yvar = float(np.var(train_y))
    yscale = max(yvar, 1e-12)

    gen = rng.generator
    best_value, best_theta = -np.inf, None
    for _ in range(config.multistarts):
        log_phi = np.log(widths) + np.log(config.length_scale_range[0]) + gen.random(d) * (
            np.log(config.length_scale_range[1]) - np.log(config.length_scale_range[0])
        )
        log_sf2 = np.log(yscale) + np.log(config.signal_range[0]) + gen.random() * (
            np.log(config.signal_range[1]) - np.log(config.signal_range[0])
        )
        log_sn2 = np.log(yscale) + np.log(config.noise_range[0]) + gen.random() * (
            np.log(config.noise_range[1]) - np.log(config.noise_range[0])
        )
        theta0 = np.concatenate([log_phi, [log_sf2, log_sn2]])
        value, theta = _ascend(theta0, widths, yscale, train_x, train_y, mean, config)
        if value > best_value:
            best_value, best_theta = value, theta

    if best_theta is None or not np.isfinite(best_value):
        # pathologically degenerate data: fall back to a flat prior model
        best_theta = np.concatenate([np.log(widths), [np.log(yscale), np.log(yscale * 1e-6)]])

    hyper = GpHyperparams(
        length_scales=np.exp(best_theta[:d]),
        signal_variance=float(np.exp(best_theta[d])),
        noise_variance=float(np.exp(best_theta[d + 1])),
        prior_mean=mean,
    )
    return GpModel.build(train_x, train_y, hyper)
