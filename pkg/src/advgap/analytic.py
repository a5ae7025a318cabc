"""Exact error probabilities of linear classifiers in both data models.

Misclassification is the event ``worst-case margin <= 0`` throughout, so the
Bernoulli formulas count ties as errors.  Phi is scipy's ``ndtr``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .attacks import TIE_RTOL, PerturbationBudget
from .distributions import BernoulliModelParams, GaussianModelParams

MAX_ENUMERATION_DIM = 24


def normal_cdf(x):
    return special.ndtr(x)


def _weights(w) -> np.ndarray:
    w = np.asarray(w, dtype=float).ravel()
    if not np.any(w != 0):
        raise ValueError("weight vector must be nonzero")
    return w


def _noise_scale(w: np.ndarray) -> float:
    """l2 norm of w: <w, g> ~ N(0, sigma^2 ||w||_2^2) for isotropic noise g."""
    return float(np.linalg.norm(w))


def gaussian_robust_error(w, params: GaussianModelParams, budget: PerturbationBudget) -> float:
    """Phi((eps * ||w||_* - <w, theta*>) / (sigma * ||w||_2))."""
    w = _weights(w)
    if w.size != params.d:
        raise ValueError(f"dimension mismatch: w has {w.size} entries, model has d={params.d}")
    shift = budget.epsilon * budget.dual_norm(w) - float(w @ params.theta_star)
    return float(normal_cdf(shift / (params.sigma * _noise_scale(w))))


def gaussian_standard_error(w, params: GaussianModelParams) -> float:
    """Phi(-<w, theta*> / (sigma * ||w||_2)); identical to the robust error at eps = 0."""
    return gaussian_robust_error(w, params, PerturbationBudget(0.0))


def gaussian_lower_bound(n: int, sigma: float, epsilon: float, d: int) -> float:
    """1/2 * P_v[sqrt(n / (sigma^2 + n)) ||v||_inf <= eps] for v ~ N(0, I_d).

    Closed form: 1/2 * (2 Phi(eps * sqrt((sigma^2 + n) / n)) - 1)^d.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    a = epsilon * math.sqrt((sigma * sigma + n) / n)
    per_coord = math.erf(a / math.sqrt(2.0))  # = 2 Phi(a) - 1
    return 0.5 * per_coord ** d


def _snap_tie_threshold(total_abs: float) -> float:
    return TIE_RTOL * max(total_abs, 1.0)


def _half_table(a: np.ndarray, p: float):
    """Margins and probabilities of all agreement patterns for one block of coordinates."""
    margins = np.zeros(1)
    probs = np.ones(1)
    for ai in a:
        margins = np.concatenate([margins + ai, margins - ai])
        probs = np.concatenate([probs * p, probs * (1.0 - p)])
    return margins, probs


def _bernoulli_enumerate(w: np.ndarray, params: BernoulliModelParams, eps: float) -> float:
    # margin <w, y x> = sum_i a_i s_i with a_i = w_i theta_i and s_i = +1 iff coordinate i agrees
    a = w * params.theta_star
    p = 0.5 + params.tau
    threshold = eps * np.abs(w).sum()
    tol = _snap_tie_threshold(np.abs(w).sum() * (1.0 + eps))
    half = a.size // 2
    m_lo, p_lo = _half_table(a[:half], p)
    m_hi, p_hi = _half_table(a[half:], p)
    order = np.argsort(m_lo, kind="stable")
    m_lo, p_lo = m_lo[order], p_lo[order]
    cum = np.concatenate([[0.0], np.cumsum(p_lo)])
    idx = np.searchsorted(m_lo, threshold - m_hi + tol, side="right")
    return float(np.dot(p_hi, cum[idx]))


def _bernoulli_binomial(w: np.ndarray, params: BernoulliModelParams, eps: float) -> float:
    # constant |w_i| = c: margin = c * sign-agreement count and error iff 2K - d <= eps * d
    a = w * params.theta_star
    d = a.size
    # coordinates with w_i theta_i = -c agree with the classifier when x_i disagrees with theta*
    n_neg = int(np.count_nonzero(a < 0))
    p = 0.5 + params.tau
    kmax = math.floor(d * (1.0 + eps) / 2.0 + 1e-9)
    if n_neg == 0:
        return float(stats.binom.cdf(kmax, d, p))
    # general signs: K = K_pos + (n_neg - K_neg') with independent binomials
    k_pos = np.arange(d - n_neg + 1)
    pmf_pos = stats.binom.pmf(k_pos, d - n_neg, p)
    k_neg = np.arange(n_neg + 1)
    pmf_flip = stats.binom.pmf(k_neg, n_neg, 1.0 - p)
    total = np.add.outer(k_pos, k_neg)
    return float(np.sum(np.outer(pmf_pos, pmf_flip)[total <= kmax]))


def bernoulli_error_exact(w, params: BernoulliModelParams, budget: PerturbationBudget | None = None,
                          method: str = "auto") -> float:
    """P[<w, y x> - eps * ||w||_1 <= 0] under the Bernoulli model.

    ``method`` is "binomial" (constant |w_i|, any d), "enumerate" (any w,
    d <= 24) or "auto".
    """
    budget = budget or PerturbationBudget(0.0)
    if budget.norm_kind != "linf":
        raise ValueError("bernoulli_error_exact handles linf budgets")
    w = _weights(w)
    if w.size != params.d:
        raise ValueError(f"dimension mismatch: w has {w.size} entries, model has d={params.d}")
    constant = bool(np.all(np.abs(w) == np.abs(w[0])))
    if method == "auto":
        method = "binomial" if constant else "enumerate"
    if method == "binomial":
        if not constant:
            raise ValueError("binomial path requires constant |w_i|")
        return _bernoulli_binomial(w, params, budget.epsilon)
    if method == "enumerate":
        if w.size > MAX_ENUMERATION_DIM:
            raise ValueError(f"enumeration limited to d <= {MAX_ENUMERATION_DIM} (got d={w.size})")
        return _bernoulli_enumerate(w, params, budget.epsilon)
    raise ValueError(f"unknown method {method!r}")


def log_odds_bernoulli(oriented_coordinate_samples, tau: float) -> float:
    """log P[theta=+1 | S] / P[theta=-1 | S] = tau_hat * sum(z_i), exp(tau_hat) = (1+2tau)/(1-2tau)."""
    if not 0.0 < tau < 0.5:
        raise ValueError(f"tau must lie in (0, 1/2), got {tau!r}")
    z = np.asarray(oriented_coordinate_samples, dtype=float)
    tau_hat = math.log1p(2 * tau) - math.log1p(-2 * tau)
    return float(tau_hat * z.sum(axis=-1)) if z.ndim <= 1 else tau_hat * z.sum(axis=-1)


@dataclass(frozen=True)
class LinearBestEps:
    robust_error_bound: float  # eps < tau, classifier theta*
    nonrobust_error_lower: float  # eps > 3 tau, classifier theta*
    any_linear_lower: float  # eps > 3 tau, any linear classifier


def linear_besteps_bounds(params: BernoulliModelParams) -> LinearBestEps:
    tail = 2.0 * math.exp(-params.tau ** 2 * params.d / 2.0)
    return LinearBestEps(tail, 1.0 - tail, 1.0 / 6.0)
