"""Adversaries: exact worst case for linear models, the universal
posterior-mean shift, and sign-gradient PGD.

All attacks accept a single point (``x`` of shape (d,), scalar ``y``) or a
batch (``x`` of shape (m, d), ``y`` of shape (m,)).  A point counts as
misclassified when its worst margin is <= 0: the adversary wins ties.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifiers import LinearClassifier, threshold_map
from .distributions import Dataset, LabeledSample, PosteriorParams
from .rng import as_seed

NORM_KINDS = ("linf", "l2")
LOSS_KINDS = ("neg_margin", "logistic")
# float ties: a worst margin this small relative to its terms is treated as exactly 0
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class PerturbationBudget:
    epsilon: float
    norm_kind: str = "linf"

    def __post_init__(self):
        eps = float(self.epsilon)
        if not np.isfinite(eps) or eps < 0:
            raise ValueError(f"epsilon must be a nonnegative finite number, got {self.epsilon!r}")
        if self.norm_kind not in NORM_KINDS:
            raise ValueError(f"norm_kind must be one of {NORM_KINDS}, got {self.norm_kind!r}")
        object.__setattr__(self, "epsilon", eps)

    def dual_norm(self, w) -> float:
        """||w||_* for the budget norm: l1 for linf, l2 for l2."""
        w = np.asarray(w, dtype=float)
        return float(np.abs(w).sum()) if self.norm_kind == "linf" else float(np.linalg.norm(w))

    def distance(self, a, b) -> np.ndarray:
        diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        if self.norm_kind == "linf":
            return np.max(np.abs(diff), axis=-1)
        return np.linalg.norm(diff, axis=-1)


@dataclass(frozen=True, eq=False)
class AttackResult:
    x_prime: np.ndarray
    worst_margin: np.ndarray | float
    misclassified: np.ndarray | bool


def _unpack(sample, y):
    if isinstance(sample, LabeledSample):
        return np.asarray(sample.x, dtype=float), sample.y
    if isinstance(sample, Dataset):
        return sample.X, sample.y
    if y is None:
        raise ValueError("labels required")
    return np.asarray(sample, dtype=float), y


def _result(x_prime, worst, single: bool) -> AttackResult:
    worst = np.asarray(worst, dtype=float)
    mis = worst <= 0
    if single:
        return AttackResult(x_prime.reshape(-1), float(worst.reshape(-1)[0]), bool(mis.reshape(-1)[0]))
    return AttackResult(x_prime, worst, mis)


def _check_dims(clf: LinearClassifier, x: np.ndarray):
    if x.shape[-1] != clf.d:
        raise ValueError(f"dimension mismatch: classifier has d={clf.d}, input has {x.shape[-1]}")


def optimal_linear_attack(clf: LinearClassifier, sample, budget: PerturbationBudget, y=None) -> AttackResult:
    """Exact minimiser of the margin over the budget ball (dual-norm attack).

    For linf the perturbation is -y * eps * sign(w), with sign(0) = 0, and the
    minimum margin is <w, y x> - eps * ||w||_1; for l2 it is <w, y x> - eps * ||w||_2.
    """
    if clf.thresholded:
        raise ValueError("dual-norm attack does not apply through thresholding; use threshold_attack")
    x, y = _unpack(sample, y)
    _check_dims(clf, x)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    Y = np.atleast_1d(np.asarray(y, dtype=float))
    eps = budget.epsilon
    if budget.norm_kind == "linf":
        direction = np.sign(clf.w)
    else:
        direction = clf.w / np.linalg.norm(clf.w)
    x_prime = X - eps * Y[:, None] * direction
    clean = Y * (X @ clf.w)
    cost = eps * budget.dual_norm(clf.w)
    worst = clean - cost
    worst = np.where(np.abs(worst) <= TIE_RTOL * (np.abs(clean) + cost), 0.0, worst)
    return _result(x_prime, worst, single)


def threshold_attack(clf: LinearClassifier, sample, budget: PerturbationBudget, y=None) -> AttackResult:
    """Exact linf worst case for f_w composed with the threshold map.

    Coordinate i can be driven to either sign only when [x_i - eps, x_i + eps]
    straddles the threshold (contains a negative number and a nonnegative one);
    otherwise T(x'_i) is pinned.  The adversary sets every free coordinate
    against the label.
    """
    if not clf.thresholded:
        raise ValueError("threshold_attack expects a thresholded classifier")
    if budget.norm_kind != "linf":
        raise ValueError("threshold_attack supports linf budgets only")
    x, y = _unpack(sample, y)
    _check_dims(clf, x)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    Y = np.atleast_1d(np.asarray(y, dtype=float))
    eps = budget.epsilon
    lo, hi = X - eps, X + eps
    free = (lo < 0) & (hi >= 0)
    want = -Y[:, None] * np.sign(clf.w)  # desired T value; 0 where w_i = 0
    pos_choice = np.clip(0.0, lo, hi)
    x_prime = np.where(free & (want > 0), pos_choice, X)
    x_prime = np.where(free & (want < 0), lo, x_prime)
    worst = Y * (threshold_map(x_prime) @ clf.w)
    return _result(x_prime, worst, single)


def optimal_attack(clf: LinearClassifier, sample, budget: PerturbationBudget, y=None) -> AttackResult:
    """Exact worst-case attack for either preprocessing mode."""
    if clf.thresholded:
        return threshold_attack(clf, sample, budget, y)
    return optimal_linear_attack(clf, sample, budget, y)


def universal_perturbation(posterior: PosteriorParams, budget: PerturbationBudget):
    """The shift delta = mu' and whether it fits in the linf budget (boundary included).

    A test point of class y is attacked as x - y * delta, which moves both
    class-conditional posterior predictives onto the origin.
    """
    if budget.norm_kind != "linf":
        raise ValueError("the universal perturbation is defined for linf budgets")
    delta = np.asarray(posterior.mu_prime, dtype=float)
    within = bool(np.max(np.abs(delta)) <= budget.epsilon)
    return delta, within


def apply_universal(clf: LinearClassifier, sample, delta, y=None) -> AttackResult:
    x, y = _unpack(sample, y)
    _check_dims(clf, x)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    Y = np.atleast_1d(np.asarray(y, dtype=float))
    x_prime = X - Y[:, None] * np.asarray(delta, dtype=float)
    worst = Y * clf.scores(x_prime)
    return _result(x_prime, worst, single)


def _loss_grad_sign(loss_kind: str, clf: LinearClassifier, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    # d/dx of -y<w,x> is -y w; the logistic loss log(1 + exp(-y<w,x>)) scales it by expit(-y<w,x>)
    grad = -Y[:, None] * clf.w
    if loss_kind == "logistic":
        m = Y * (X @ clf.w)
        grad = grad * (0.5 * (1.0 + np.tanh(-0.5 * m)))[:, None]
    return np.sign(grad)


def pgd_attack(loss_kind: str, clf: LinearClassifier, sample, budget: PerturbationBudget,
               steps: int = 20, step_size: float | None = None, random_init: bool = True,
               seed=0, y=None) -> AttackResult:
    """Sign-gradient ascent on the loss with projection onto the linf ball.

    ``step_size`` defaults to 2.5 * eps / steps.  Returns the iterate with the
    smallest margin seen (the starting point included).
    """
    if loss_kind not in LOSS_KINDS:
        raise ValueError(f"loss_kind must be one of {LOSS_KINDS}, got {loss_kind!r}")
    if clf.thresholded:
        raise ValueError("PGD is undefined for thresholded classifiers (the gradient vanishes almost everywhere)")
    if budget.norm_kind != "linf":
        raise ValueError("PGD supports linf budgets only")
    if steps < 1:
        raise ValueError("steps must be at least 1")
    x, y = _unpack(sample, y)
    _check_dims(clf, x)
    single = x.ndim == 1
    X0 = np.atleast_2d(x)
    Y = np.atleast_1d(np.asarray(y, dtype=float))
    eps = budget.epsilon
    lam = 2.5 * eps / steps if step_size is None else float(step_size)
    if lam <= 0 and eps > 0:
        raise ValueError("step_size must be positive")
    lo, hi = X0 - eps, X0 + eps

    if random_init and eps > 0:
        rng = seed if isinstance(seed, np.random.Generator) else as_seed(seed).generator()
        Xt = np.clip(X0 + rng.uniform(-eps, eps, size=X0.shape), lo, hi)
    else:
        Xt = X0.copy()
    best = Xt.copy()
    best_m = Y * (Xt @ clf.w)
    for _ in range(steps):
        Xt = np.clip(Xt + lam * _loss_grad_sign(loss_kind, clf, Xt, Y), lo, hi)
        m = Y * (Xt @ clf.w)
        better = m < best_m
        best[better] = Xt[better]
        best_m = np.where(better, m, best_m)
    return _result(best, best_m, single)
