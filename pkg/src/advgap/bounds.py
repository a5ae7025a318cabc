"""Catalog of the concentration and sample-complexity bounds, evaluated numerically.

Each entry maps a parameter dict to ``(value, failure_prob)``; ``failure_prob``
is None where the statement carries no failure probability.  Constants are
kept exactly as stated (64, 8 log d, 5000, 15, 30), not tightened.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .analytic import gaussian_lower_bound


class UnknownBoundError(KeyError):
    pass


class MissingParameterError(ValueError):
    pass


@dataclass(frozen=True)
class BoundSpec:
    name: str
    params: dict
    value: float
    failure_prob: float | None = None

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"bound {self.name} evaluated to a non-finite value")
        if self.failure_prob is not None and not 0.0 <= self.failure_prob <= 1.0:
            object.__setattr__(self, "failure_prob", min(1.0, max(0.0, self.failure_prob)))

    def to_dict(self) -> dict:
        return {"name": self.name, "params": dict(self.params), "value": self.value,
                "failure_prob": "n/a" if self.failure_prob is None else self.failure_prob}


@dataclass(frozen=True)
class _Entry:
    required: tuple
    fn: Callable
    optional: dict = field(default_factory=dict)
    doc: str = ""


def _gauss_fail(d, sigma):
    return 2.0 * math.exp(-d / (8.0 * (sigma ** 2 + 1.0)))


def _unit_ip_ratio(n, sigma):
    return (2.0 * math.sqrt(n) - 1.0) / (2.0 * math.sqrt(n) + 4.0 * sigma)


def _fact_gaussian_norm(p):
    base = p["sigma"] * math.sqrt(p["d"]) if p.get("d") is not None else 0.0
    return base + p["t"], math.exp(-p["t"] ** 2 / (2.0 * p["sigma"] ** 2))


def _lemma_gaussian_norm(p):
    s, d, n, delta = p["sigma"], p["d"], p["n"], p["delta"]
    return p["mu_norm"] + s * (math.sqrt(d) + math.sqrt(2.0 * math.log(1.0 / delta))) / math.sqrt(n), delta


def _lemma_gaussian_norm2(p):
    return (1.0 + 2.0 * p["sigma"] / math.sqrt(p["n"])) * math.sqrt(p["d"]), math.exp(-p["d"] / 2.0)


def _lemma_gaussian_ip1(p):
    m, s = p["mu_norm"], p["sigma"]
    return m * m - s * m * math.sqrt(2.0 * math.log(1.0 / p["delta"]) / p["n"]), p["delta"]


def _lemma_unit_ip(p):
    return _unit_ip_ratio(p["n"], p["sigma"]) * math.sqrt(p["d"]), _gauss_fail(p["d"], p["sigma"])


def _lemma_gaussian_classification(p):
    ip, rho = p["ip"], p["rho"]
    if ip < rho or rho < 0:
        raise ValueError("requires <w, mu> >= rho >= 0")
    return math.exp(-(ip - rho) ** 2 / (2.0 * p["sigma"] ** 2)), None


def _thm_gaussian_standard(p):
    n, s, d = p["n"], p["sigma"], p["d"]
    value = math.exp(-((2 * math.sqrt(n) - 1) ** 2) * d / (2 * (2 * math.sqrt(n) + 4 * s) ** 2 * s ** 2))
    return value, _gauss_fail(d, s)


def _cor_single_sample(p):
    sigma_max = p["d"] ** 0.25 / (5.0 * math.sqrt(math.log(1.0 / p["beta"])))
    return sigma_max, _gauss_fail(p["d"], sigma_max)


def _lemma_robustupper(p):
    gap = p["ip"] - p["eps"] * p["dual_norm"]
    if gap < 0:
        raise ValueError("requires <w, theta*> >= eps * ||w||_*")
    return math.exp(-gap ** 2 / (2.0 * p["sigma"] ** 2)), None


def _thm_gausslinf(p):
    n, s, d, beta = p["n"], p["sigma"], p["d"], p["beta"]
    eps_max = _unit_ip_ratio(n, s) - s * math.sqrt(2.0 * math.log(1.0 / beta)) / math.sqrt(d)
    return eps_max, _gauss_fail(d, s)


def _cor_gausslinf_n(p):
    eps, d = p["eps"], p["d"]
    if eps > 0.25:
        raise ValueError("stated for eps <= 1/4")
    n = 1.0 if eps <= 0.25 * d ** -0.25 else 64.0 * eps ** 2 * math.sqrt(d)
    fail = _gauss_fail(d, p["sigma"]) if p.get("sigma") is not None else None
    return n, fail


def _cor_gaussian_robust_n(p):
    return p["eps"] ** 2 * p["sigma"] ** 2 / (8.0 * math.log(p["d"])), None


def _cor_gaussian_robust_error(p):
    return (1.0 - 1.0 / p["d"]) / 2.0, None


def _thm_gauss_linf_lower(p):
    return gaussian_lower_bound(int(p["n"]), p["sigma"], p["eps"], int(p["d"])), None


def _lemma_bernoulli_ip1(p):
    d = p["d"]
    return 2.0 * p["tau"] * d - math.sqrt(2.0 * d * math.log(1.0 / p["delta"])), p["delta"]


def _lemma_bernoulli_unit_ip(p):
    t, d = p["tau"], p["d"]
    return t * math.sqrt(d), math.exp(-t * t * d / 2.0)


def _lemma_bernoulli_classification(p):
    return math.exp(-2.0 * p["tau"] ** 2 * p["ip"] ** 2), None


def _thm_bernoulli_standard(p):
    t, d = p["tau"], p["d"]
    return math.exp(-2.0 * t ** 4 * d), math.exp(-t * t * d / 2.0)


def _cor_bernoulli_single_sample(p):
    d = p["d"]
    tau_min = (math.log(1.0 / p["beta"]) / (2.0 * d)) ** 0.25
    return tau_min, math.exp(-tau_min ** 2 * d / 2.0)


def _lemma_bb_one_d(p):
    t, n, delta = p["tau"], p["n"], p["delta"]
    if t > 0.25 or n > 1.0 / t ** 2:
        raise ValueError("stated for tau <= 1/4 and n <= 1/tau^2")
    return 15.0 * t * math.sqrt(2.0 * n * math.log(2.0 / delta)), delta


def _besteps_tail(p):
    return 2.0 * math.exp(-p["tau"] ** 2 * p["d"] / 2.0)


def _thm_bern_lin_lb_n(p):
    eps, g, t, d = p["eps"], p["gamma"], p["tau"], p["d"]
    return eps ** 2 * g ** 2 / (5000.0 * t ** 4 * math.log(4.0 * d / g)), None


def _bern_an(p):
    return 30.0 * p["tau"] ** 2 * math.sqrt(2.0 * p["n"] * math.log(4.0 * p["d"] / p["gamma"])), None


CATALOG: dict[str, _Entry] = {
    "fact_gaussian_norm": _Entry(("sigma", "t"), _fact_gaussian_norm, {"d": None},
                                 "P[||z||_2 >= sigma sqrt(d) + t] <= exp(-t^2 / 2 sigma^2); value is sigma sqrt(d) + t (t alone without d)"),
    "lemma_gaussian_norm": _Entry(("sigma", "d", "n", "delta", "mu_norm"), _lemma_gaussian_norm, {},
                                  "high-probability upper bound on ||z_bar||_2"),
    "lemma_gaussian_norm2": _Entry(("sigma", "d", "n"), _lemma_gaussian_norm2, {},
                                   "||z_bar||_2 <= (1 + 2 sigma / sqrt(n)) sqrt(d) w.p. 1 - exp(-d/2)"),
    "lemma_gaussian_ip1": _Entry(("sigma", "n", "delta", "mu_norm"), _lemma_gaussian_ip1, {},
                                 "lower bound on <z_bar, mu>"),
    "lemma_unit_ip": _Entry(("sigma", "n", "d"), _lemma_unit_ip, {},
                            "<w_hat, mu> >= (2 sqrt(n) - 1) / (2 sqrt(n) + 4 sigma) sqrt(d)"),
    "lemma_gaussian_classification": _Entry(("sigma", "ip"), _lemma_gaussian_classification, {"rho": 0.0},
                                            "P[<w, z> <= rho] <= exp(-(<w, mu> - rho)^2 / 2 sigma^2), unit w"),
    "thm_gaussian_standard": _Entry(("sigma", "n", "d"), _thm_gaussian_standard, {},
                                    "classification error bound of the normalised weighted mean"),
    "cor_single_sample": _Entry(("beta", "d"), _cor_single_sample, {},
                                "largest sigma for which one sample gives error beta"),
    "lemma_robustupper": _Entry(("sigma", "ip", "eps", "dual_norm"), _lemma_robustupper, {},
                                "robust error <= exp(-(<w, theta*> - eps ||w||_*)^2 / 2 sigma^2), unit w"),
    "thm_gausslinf": _Entry(("sigma", "n", "d", "beta"), _thm_gausslinf, {},
                            "largest eps with linf-robust error at most beta"),
    "cor_gausslinf_n": _Entry(("eps", "d"), _cor_gausslinf_n, {"sigma": None},
                              "samples sufficient for 1% linf-robust error when sigma <= d^(1/4) / 32"),
    "cor_gaussian_robust_n": _Entry(("eps", "sigma", "d"), _cor_gaussian_robust_n, {},
                                    "below eps^2 sigma^2 / (8 log d) samples every learner has robust error >= (1 - 1/d)/2"),
    "cor_gaussian_robust_error": _Entry(("d",), _cor_gaussian_robust_error, {},
                                        "(1 - 1/d) / 2"),
    "thm_gauss_linf_lower": _Entry(("n", "sigma", "eps", "d"), _thm_gauss_linf_lower, {},
                                   "expected robust error lower bound for any learner"),
    "lemma_bernoulli_ip1": _Entry(("tau", "d", "delta"), _lemma_bernoulli_ip1, {},
                                  "<z, theta*> > 2 tau d - sqrt(2 d log(1/delta)) w.p. 1 - delta"),
    "lemma_bernoulli_unit_ip": _Entry(("tau", "d"), _lemma_bernoulli_unit_ip, {},
                                      "<w_hat, theta*> > tau sqrt(d) w.p. 1 - exp(-tau^2 d / 2)"),
    "lemma_bernoulli_classification": _Entry(("tau", "ip"), _lemma_bernoulli_classification, {},
                                             "P[<w, z> <= 0] <= exp(-2 tau^2 <w, theta*>^2), unit w"),
    "thm_bernoulli_standard": _Entry(("tau", "d"), _thm_bernoulli_standard, {},
                                     "single-sample error <= exp(-2 tau^4 d)"),
    "cor_bernoulli_single_sample": _Entry(("beta", "d"), _cor_bernoulli_single_sample, {},
                                          "smallest tau for which one sample gives error beta"),
    "lemma_bb_one_d": _Entry(("tau", "n", "delta"), _lemma_bb_one_d, {},
                             "|log odds| <= 15 tau sqrt(2 n log(2/delta)) w.p. 1 - delta"),
    "lemma_linear_besteps_robust": _Entry(("tau", "d"), lambda p: (_besteps_tail(p), None), {},
                                          "linf^tau-robust error of theta* <= 2 exp(-tau^2 d / 2)"),
    "lemma_linear_besteps_nonrobust": _Entry(("tau", "d"), lambda p: (1.0 - _besteps_tail(p), None), {},
                                             "linf^(3 tau)-robust error of theta* >= 1 - 2 exp(-tau^2 d / 2)"),
    "lemma_linear_besteps_any": _Entry((), lambda p: (1.0 / 6.0, None), {},
                                       "linf^(3 tau)-robust error of any linear classifier >= 1/6"),
    "thm_bern_lin_lb_n": _Entry(("eps", "gamma", "tau", "d"), _thm_bern_lin_lb_n, {},
                                "below this many samples a linear learner has robust error >= 1/2 - gamma"),
    "thm_bern_lin_lb_error": _Entry(("gamma",), lambda p: (0.5 - p["gamma"], None), {},
                                    "1/2 - gamma"),
    "bern_an": _Entry(("tau", "n", "d", "gamma"), _bern_an, {},
                      "a_n = 30 tau^2 sqrt(2 n log(4d / gamma))"),
}


def bound_names() -> list[str]:
    return sorted(CATALOG)


def evaluate_bound(spec_name: str, params: dict) -> BoundSpec:
    try:
        entry = CATALOG[spec_name]
    except KeyError:
        raise UnknownBoundError(f"unknown bound {spec_name!r}; known: {', '.join(bound_names())}") from None
    missing = [k for k in entry.required if k not in params]
    if missing:
        raise MissingParameterError(f"bound {spec_name} needs parameter(s): {', '.join(missing)}")
    merged = {**entry.optional, **{k: float(v) for k, v in params.items()}}
    value, fail = entry.fn(merged)
    return BoundSpec(spec_name, dict(params), float(value), fail)
