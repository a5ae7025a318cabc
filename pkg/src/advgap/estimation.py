"""Monte Carlo estimates of standard and robust error.

Trials are cut into fixed-size blocks; block ``b`` draws its test points from
the stream ``seed.generator(b)`` and PGD restarts from ``seed.generator(b, 1)``.
Blocks run on a thread pool and their error counts are summed in block order,
so the estimate depends on the seed and never on the thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from .attacks import (PerturbationBudget, apply_universal, optimal_attack, pgd_attack,
                      universal_perturbation)
from .classifiers import LinearClassifier, learn_weighted_mean
from .distributions import (Dataset, GaussianModelParams, ModelParams, draw, draw_gaussian,
                            gaussian_posterior)
from .rng import as_seed

ATTACK_KINDS = ("optimal", "pgd", "universal")
_Z95 = stats.norm.ppf(0.975)
_BLOCK_FLOATS = 1 << 21


@dataclass(frozen=True)
class ErrorEstimate:
    p_hat: float
    trials: int
    std_err: float
    ci95: tuple
    kind: str = "exact"
    extras: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not 0.0 <= self.p_hat <= 1.0:
            raise ValueError(f"p_hat must lie in [0, 1], got {self.p_hat}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        lo, hi = self.ci95
        if not 0.0 <= lo <= hi <= 1.0:
            raise ValueError(f"malformed ci95 {self.ci95}")

    @classmethod
    def from_counts(cls, errors: int, trials: int, kind: str = "exact", **extras) -> "ErrorEstimate":
        p = errors / trials
        se = math.sqrt(p * (1.0 - p) / trials)
        return cls(p, trials, se, confidence_interval(p, trials), kind, extras)

    def to_dict(self) -> dict:
        return {"p_hat": self.p_hat, "trials": self.trials, "std_err": self.std_err,
                "ci95": list(self.ci95), "kind": self.kind, **self.extras}


def confidence_interval(p: float, trials: int, std_err: float | None = None) -> tuple:
    """Normal-approximation 95% interval, Wilson score when either count is below 10."""
    if std_err is None and (p * trials < 10 or (1.0 - p) * trials < 10):
        z2 = _Z95 ** 2
        centre = (p + z2 / (2 * trials)) / (1 + z2 / trials)
        half = _Z95 * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials ** 2)) / (1 + z2 / trials)
        lo, hi = centre - half, centre + half
    else:
        se = math.sqrt(p * (1 - p) / trials) if std_err is None else std_err
        lo, hi = p - _Z95 * se, p + _Z95 * se
    # the interval must contain p even after rounding
    return (float(min(max(0.0, lo), p)), float(max(min(1.0, hi), p)))


def block_size(d: int) -> int:
    return max(1, min(8192, _BLOCK_FLOATS // max(d, 1)))


def _blocks(trials: int, d: int):
    size = block_size(d)
    return [(b, min(size, trials - b * size)) for b in range((trials + size - 1) // size)]


def _run_blocks(fn: Callable[[int, int], int], trials: int, d: int, threads: int) -> int:
    blocks = _blocks(trials, d)
    if threads <= 1 or len(blocks) == 1:
        counts = [fn(b, m) for b, m in blocks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            counts = list(pool.map(lambda bm: fn(*bm), blocks))
    return int(sum(counts))


def _check(clf: LinearClassifier, params: ModelParams, trials: int):
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if clf.d != params.d:
        raise ValueError(f"dimension mismatch: classifier has d={clf.d}, model has d={params.d}")


def mc_standard_error(clf: LinearClassifier, params: ModelParams, trials: int, seed=0,
                      threads: int = 1) -> ErrorEstimate:
    """Fraction of fresh points with margin <= 0."""
    _check(clf, params, trials)
    seed = as_seed(seed)

    def block(b, m):
        X, y = draw(params, m, seed.generator(b))
        return int(np.count_nonzero(y * clf.scores(X) <= 0))

    return ErrorEstimate.from_counts(_run_blocks(block, trials, params.d, threads), trials, "exact")


def mc_robust_error(clf: LinearClassifier, params: ModelParams, budget: PerturbationBudget,
                    attack: str = "optimal", trials: int = 10_000, seed=0, threads: int = 1,
                    delta=None, pgd_steps: int = 20, pgd_loss: str = "neg_margin") -> ErrorEstimate:
    """Fraction of fresh points the chosen attack pushes to margin <= 0.

    The test points are the ones ``mc_standard_error`` draws for the same seed.
    The optimal attack is exact (dual-norm for plain classifiers, coordinate
    search through the threshold map otherwise); "pgd" and "universal" give
    lower-bound estimates.
    """
    _check(clf, params, trials)
    if attack not in ATTACK_KINDS:
        raise ValueError(f"attack must be one of {ATTACK_KINDS}, got {attack!r}")
    if attack == "pgd" and clf.thresholded:
        raise ValueError("PGD cannot attack a thresholded classifier")
    if attack == "universal":
        if delta is None:
            raise ValueError("the universal attack needs a perturbation vector delta")
        delta = np.asarray(delta, dtype=float)
        if delta.shape != (params.d,):
            raise ValueError(f"delta must have shape ({params.d},)")
        if budget.distance(delta, 0.0) > budget.epsilon * (1 + 1e-12):
            raise ValueError("delta lies outside the perturbation budget")
    seed = as_seed(seed)

    def block(b, m):
        X, y = draw(params, m, seed.generator(b))
        if attack == "optimal":
            res = optimal_attack(clf, X, budget, y)
        elif attack == "pgd":
            res = pgd_attack(pgd_loss, clf, X, budget, steps=pgd_steps, seed=seed.generator(b, 1), y=y)
        else:
            res = apply_universal(clf, X, delta, y)
        return int(np.count_nonzero(res.misclassified))

    kind = "exact" if attack == "optimal" else "lower-bound"
    errors = _run_blocks(block, trials, params.d, threads)
    return ErrorEstimate.from_counts(errors, trials, kind, attack=attack, epsilon=budget.epsilon)


def expected_robust_error_lower_experiment(learner: Callable[[Dataset], LinearClassifier] | None,
                                           n: int, d: int, sigma: float, epsilon: float,
                                           theta_draws: int = 500, trials_per_theta: int = 200,
                                           seed=0, threads: int = 1,
                                           exceeded: str = "zero") -> ErrorEstimate:
    """E_theta E_S E_y P_x[learned classifier errs on x - y * mu'] under theta ~ N(0, I).

    Draws where ||mu'||_inf > epsilon contribute 0 (``exceeded="zero"``) or are
    scored without perturbation (``exceeded="clean"``).  Errors are correlated
    within a theta draw, so ``std_err`` is the standard error of the mean of
    the per-draw error rates.
    """
    if theta_draws < 1 or trials_per_theta < 1:
        raise ValueError("theta_draws and trials_per_theta must be at least 1")
    if n < 1:
        raise ValueError("n must be at least 1")
    if exceeded not in ("zero", "clean"):
        raise ValueError("exceeded must be 'zero' or 'clean'")
    learner = learner or learn_weighted_mean
    seed = as_seed(seed)
    budget = PerturbationBudget(epsilon)

    def one(t):
        rng = seed.generator(t)
        theta = rng.standard_normal(d)
        params = GaussianModelParams(theta, sigma)
        train = Dataset(*draw_gaussian(params, n, rng))
        clf = learner(train)
        delta, within = universal_perturbation(gaussian_posterior(sigma, train), budget)
        X, y = draw_gaussian(params, trials_per_theta, rng)
        if within:
            errs = apply_universal(clf, X, delta, y).misclassified
        elif exceeded == "clean":
            errs = y * clf.scores(X) <= 0
        else:
            return 0.0, True
        return float(np.mean(errs)), not within

    if threads <= 1:
        out = [one(t) for t in range(theta_draws)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(one, range(theta_draws)))
    rates = np.array([r for r, _ in out])
    exceeded_rate = float(np.mean([e for _, e in out]))
    p = float(rates.mean())
    se = float(rates.std(ddof=1) / math.sqrt(theta_draws)) if theta_draws > 1 else 0.0
    total = theta_draws * trials_per_theta
    return ErrorEstimate(p, total, se, confidence_interval(p, total, se), "lower-bound",
                         {"budget_exceeded_rate": exceeded_rate, "theta_draws": theta_draws,
                          "trials_per_theta": trials_per_theta, "std_err_kind": "per-theta cluster",
                          "binomial_std_err": math.sqrt(p * (1 - p) / total)})


def lower_bound_mc(n: int, sigma: float, epsilon: float, d: int, trials: int = 100_000,
                   seed=0) -> ErrorEstimate:
    """1/2 * P_v[sqrt(n / (sigma^2 + n)) ||v||_inf <= eps], v ~ N(0, I_d), by sampling v."""
    seed = as_seed(seed)
    scale = math.sqrt(n / (sigma * sigma + n))

    def block(b, m):
        v = seed.generator(b).standard_normal((m, d))
        return int(np.count_nonzero(scale * np.max(np.abs(v), axis=1) <= epsilon))

    hits = _run_blocks(block, trials, d, 1)
    q = ErrorEstimate.from_counts(hits, trials)
    return ErrorEstimate(0.5 * q.p_hat, trials, 0.5 * q.std_err,
                         (0.5 * q.ci95[0], 0.5 * q.ci95[1]), "exact")
