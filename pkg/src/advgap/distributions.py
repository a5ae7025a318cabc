"""Data models: the (theta*, sigma)-Gaussian and (theta*, tau)-Bernoulli mixtures.

Both models draw a label y uniformly from {-1, +1} and then a point whose
distribution depends on ``y * theta_star``.  Samplers are pure functions of
``(params, n, seed)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np

from .rng import RngSeed, as_seed


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GaussianModelParams:
    theta_star: np.ndarray
    sigma: float

    kind = "gaussian"

    def __post_init__(self):
        theta = _frozen(np.atleast_1d(self.theta_star))
        if theta.ndim != 1 or theta.size < 1:
            raise ValueError("theta_star must be a non-empty vector")
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta_star must be finite")
        sigma = float(self.sigma)
        if not np.isfinite(sigma) or sigma <= 0:
            raise ValueError(f"sigma must be a positive finite number, got {self.sigma!r}")
        object.__setattr__(self, "theta_star", theta)
        object.__setattr__(self, "sigma", sigma)

    @property
    def d(self) -> int:
        return self.theta_star.size

    @property
    def noise(self) -> float:
        return self.sigma


@dataclass(frozen=True, eq=False)
class BernoulliModelParams:
    theta_star: np.ndarray
    tau: float

    kind = "bernoulli"

    def __post_init__(self):
        theta = _frozen(np.atleast_1d(self.theta_star))
        if theta.ndim != 1 or theta.size < 1:
            raise ValueError("theta_star must be a non-empty vector")
        if not np.all(np.abs(theta) == 1.0):
            raise ValueError("Bernoulli theta_star must have every coordinate in {-1, +1}")
        tau = float(self.tau)
        if not 0.0 < tau < 0.5:
            raise ValueError(f"tau must lie in (0, 1/2), got {self.tau!r}")
        object.__setattr__(self, "theta_star", theta)
        object.__setattr__(self, "tau", tau)

    @property
    def d(self) -> int:
        return self.theta_star.size

    @property
    def noise(self) -> float:
        return self.tau


ModelParams = Union[GaussianModelParams, BernoulliModelParams]


@dataclass(frozen=True, eq=False)
class LabeledSample:
    x: np.ndarray
    y: int


@dataclass(frozen=True, eq=False)
class Dataset:
    """n labeled points; ``X`` has shape (n, d) and ``y`` holds +-1 labels."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = _frozen(np.atleast_2d(self.X))
        y = _frozen(np.atleast_1d(self.y), dtype=np.int64)
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{X.shape[0]} points but {y.shape[0]} labels")
        if not np.all(np.abs(y) == 1):
            raise ValueError("labels must be -1 or +1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return self.y.shape[0]

    def __iter__(self) -> Iterator[LabeledSample]:
        for x, y in zip(self.X, self.y):
            yield LabeledSample(x, int(y))

    def __getitem__(self, i) -> LabeledSample:
        return LabeledSample(self.X[i], int(self.y[i]))

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def oriented(self) -> np.ndarray:
        """The class-oriented points z_i = y_i * x_i."""
        return self.y[:, None] * self.X

    def head(self, n: int) -> "Dataset":
        return Dataset(self.X[:n], self.y[:n])


@dataclass(frozen=True)
class PosteriorParams:
    """Gaussian posterior over theta* under the N(0, I) prior.

    ``var_prime`` and ``predictive_var`` are per-coordinate variances; the
    covariances are these times the identity.
    """

    mu_prime: np.ndarray
    var_prime: float
    predictive_var: float
    n: int


def _labels(n: int, rng: np.random.Generator) -> np.ndarray:
    return 2 * rng.integers(0, 2, size=n) - 1


def draw_gaussian(params: GaussianModelParams, n: int, rng: np.random.Generator):
    y = _labels(n, rng)
    X = y[:, None] * params.theta_star + params.sigma * rng.standard_normal((n, params.d))
    return X, y


def draw_bernoulli(params: BernoulliModelParams, n: int, rng: np.random.Generator):
    y = _labels(n, rng)
    agree = rng.random((n, params.d)) < 0.5 + params.tau
    X = np.where(agree, 1.0, -1.0) * (y[:, None] * params.theta_star)
    return X, y


def draw(params: ModelParams, n: int, rng: np.random.Generator):
    """Draw ``(X, y)`` arrays from an explicit generator."""
    if isinstance(params, GaussianModelParams):
        return draw_gaussian(params, n, rng)
    if isinstance(params, BernoulliModelParams):
        return draw_bernoulli(params, n, rng)
    raise TypeError(f"unknown model parameters {type(params).__name__}")


def draw_oriented_sum(params: ModelParams, m: int, rng: np.random.Generator) -> np.ndarray:
    """Sum of m oriented samples y_i x_i, drawn from its exact distribution.

    The weighted-mean learner only sees this sum, so sweeps over nested
    training sets can draw it incrementally without materialising the points.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m == 0:
        return np.zeros(params.d)
    if isinstance(params, GaussianModelParams):
        return m * params.theta_star + params.sigma * np.sqrt(m) * rng.standard_normal(params.d)
    agree = rng.binomial(m, 0.5 + params.tau, size=params.d)
    return params.theta_star * (2.0 * agree - m)


def sample_gaussian(params: GaussianModelParams, n: int, seed) -> Dataset:
    if n < 1:
        raise ValueError("n must be at least 1")
    X, y = draw_gaussian(params, n, as_seed(seed).generator())
    return Dataset(X, y)


def sample_bernoulli(params: BernoulliModelParams, n: int, seed) -> Dataset:
    if n < 1:
        raise ValueError("n must be at least 1")
    X, y = draw_bernoulli(params, n, as_seed(seed).generator())
    return Dataset(X, y)


def sample(params: ModelParams, n: int, seed) -> Dataset:
    if isinstance(params, GaussianModelParams):
        return sample_gaussian(params, n, seed)
    return sample_bernoulli(params, n, seed)


def draw_prior_theta(model_kind: str, d: int, seed) -> np.ndarray:
    """theta ~ N(0, I) for the Gaussian model, uniform on {-1, +1}^d for Bernoulli."""
    if d < 1:
        raise ValueError("d must be at least 1")
    rng = seed if isinstance(seed, np.random.Generator) else as_seed(seed).generator()
    if model_kind == "gaussian":
        return rng.standard_normal(d)
    if model_kind == "bernoulli":
        return 2.0 * rng.integers(0, 2, size=d) - 1.0
    raise ValueError(f"unknown model kind {model_kind!r}")


def fixed_theta(model_kind: str, d: int) -> np.ndarray:
    """All-ones mean vector: ||theta||_2 = sqrt(d) and ||theta||_1 = d."""
    if model_kind not in ("gaussian", "bernoulli"):
        raise ValueError(f"unknown model kind {model_kind!r}")
    return np.ones(d)


def make_params(model_kind: str, theta_star, noise: float) -> ModelParams:
    if model_kind == "gaussian":
        return GaussianModelParams(theta_star, noise)
    if model_kind == "bernoulli":
        return BernoulliModelParams(theta_star, noise)
    raise ValueError(f"unknown model kind {model_kind!r}")


def gaussian_posterior(sigma: float, oriented_samples) -> PosteriorParams:
    """Posterior of theta* ~ N(0, I) given z_i ~ N(theta*, sigma^2 I).

    mu' = sum(z_i) / (sigma^2 + n), var' = sigma^2 / (sigma^2 + n), and a
    fresh class-oriented point has predictive variance var' + sigma^2.
    """
    if isinstance(oriented_samples, Dataset):
        Z = oriented_samples.oriented()
    else:
        Z = np.atleast_2d(np.asarray(oriented_samples, dtype=float))
    n = Z.shape[0]
    if n < 1 or Z.size == 0:
        raise ValueError("posterior needs at least one sample")
    return posterior_from_sum(sigma, Z.sum(axis=0), n)


def posterior_from_sum(sigma: float, z_sum: np.ndarray, n: int) -> PosteriorParams:
    if n < 1:
        raise ValueError("posterior needs at least one sample")
    s2 = float(sigma) ** 2
    var = s2 / (s2 + n)
    mu = _frozen(np.asarray(z_sum, dtype=float) / (s2 + n))
    return PosteriorParams(mu, var, var + s2, n)
