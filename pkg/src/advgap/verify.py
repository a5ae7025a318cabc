"""Named numerical checks of the model's claims, each with a fixed seed and tolerance."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .analytic import (bernoulli_error_exact, gaussian_lower_bound, gaussian_robust_error,
                       gaussian_standard_error, log_odds_bernoulli)
from .attacks import PerturbationBudget, optimal_linear_attack, pgd_attack, threshold_attack
from .bounds import evaluate_bound
from .classifiers import LinearClassifier, learn_weighted_mean, threshold_map
from .distributions import (BernoulliModelParams, GaussianModelParams, draw_prior_theta,
                            sample_bernoulli, sample_gaussian)
from .estimation import (expected_robust_error_lower_experiment, lower_bound_mc, mc_robust_error,
                         mc_standard_error)
from .experiments import SweepConfig, find_min_n, records_to_csv, run_sweep, scaling_fit
from .rng import RngSeed


@dataclass(frozen=True)
class VerifyReport:
    name: str
    passed: bool
    observed: float
    bound: float
    tolerance: float
    detail: str = ""

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"

    def line(self) -> str:
        return (f"{self.status.upper():4s} {self.name}: observed={self.observed:.9g} "
                f"bound={self.bound:.9g} tol={self.tolerance:.9g}  {self.detail}").rstrip()

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["status"] = self.status
        return doc


def _null_se(p: float, trials: int) -> float:
    # standard error under the reference probability; stays positive when the estimate is 0 or 1
    return math.sqrt(max(p * (1.0 - p), 0.0) / trials)


def _agrees(p_hat: float, reference: float, trials: int, k: float = 4.0) -> bool:
    return abs(p_hat - reference) <= k * _null_se(reference, trials) + 1e-15


# criterion 1
def check_analytic_mc_gaussian(seed: RngSeed, threads: int, trials: int = 100_000) -> VerifyReport:
    cells = [(d, s, e) for d in (4, 16, 64) for s in (0.5, 1.0, 2.0) for e in (0.0, 0.1, 0.5)]
    ok = 0
    worst = 0.0
    for i, (d, sigma, eps) in enumerate(cells):
        theta = draw_prior_theta("gaussian", d, seed.generator(i, 0))
        params = GaussianModelParams(theta, sigma)
        clf = LinearClassifier(theta / np.linalg.norm(theta))
        budget = PerturbationBudget(eps)
        ref = gaussian_robust_error(clf.w, params, budget)
        est = mc_robust_error(clf, params, budget, "optimal", trials, seed.child(i), threads)
        ok += _agrees(est.p_hat, ref, trials)
        se = _null_se(ref, trials)
        worst = max(worst, abs(est.p_hat - ref) / se if se > 0 else 0.0)
    rate = ok / len(cells)
    return VerifyReport("analytic_mc_gaussian", rate >= 0.95, rate, 0.95, 4.0,
                        f"{ok}/{len(cells)} cells within 4 se; largest deviation {worst:.3g} se")


# criterion 2
def check_gausslinf_sample_complexity(seed: RngSeed, threads: int, trials: int = 50) -> VerifyReport:
    d, sigma = 10_000, 10.0 / 32.0
    medians = []
    for i, (eps, n) in enumerate(((0.1, 64), (0.025, 1))):
        cfg = SweepConfig("gaussian", [d], [sigma], [eps], n_grid=[n], trials=trials,
                          theta_mode="fixed", base_seed=int(seed.child(i).base_seed), mc_test_points=0)
        rows = run_sweep(cfg, threads)
        medians.append(float(np.median([r.rob_err_analytic for r in rows])))
    observed = max(medians)
    return VerifyReport("gausslinf_sample_complexity", observed <= 0.01, observed, 0.01, 0.0,
                        f"median robust error {medians[0]:.3g} at n=64, eps=0.1; "
                        f"{medians[1]:.3g} at n=1, eps=0.025")


# criterion 3
def check_gaussian_lower_bound(seed: RngSeed, threads: int, theta_draws: int = 500,
                               trials_per_theta: int = 200) -> VerifyReport:
    cells = [(5, 2.0, 4, 1.0), (16, 4.0, 8, 1.5), (64, 4.0, 16, 2.0)]
    slack = math.inf
    ok = True
    parts = []
    for i, (d, sigma, n, eps) in enumerate(cells):
        bound = gaussian_lower_bound(n, sigma, eps, d)
        direct = lower_bound_mc(n, sigma, eps, d, 100_000, seed.child(2 * i + 1))
        cross_ok = _agrees(direct.p_hat, bound, 100_000)
        est = expected_robust_error_lower_experiment(None, n, d, sigma, eps, theta_draws,
                                                     trials_per_theta, seed.child(2 * i), threads)
        gap = est.p_hat - (bound - 3.0 * est.std_err)
        ok &= gap >= 0 and cross_ok
        slack = min(slack, gap)
        parts.append(f"(d={d}: est {est.p_hat:.4f} se {est.std_err:.4f} bound {bound:.4f} "
                     f"direct {direct.p_hat:.4f})")
    return VerifyReport("gaussian_lower_bound", bool(ok), slack, 0.0, 3.0, " ".join(parts))


# criterion 4
def check_bernoulli_exactness(seed: RngSeed, threads: int, trials: int = 100_000) -> VerifyReport:
    max_diff = 0.0
    mc_ok = cells = 0
    rng = seed.generator(0)
    for d in range(1, 13):
        for tau in (0.1, 0.25, 0.4):
            theta = 2.0 * rng.integers(0, 2, size=d) - 1.0
            w = theta * (2.0 * rng.integers(0, 2, size=d) - 1.0)
            params = BernoulliModelParams(theta, tau)
            clf = LinearClassifier(w)
            for eps in (0.0, tau, 3 * tau):
                budget = PerturbationBudget(eps)
                enum = bernoulli_error_exact(w, params, budget, "enumerate")
                binom = bernoulli_error_exact(w, params, budget, "binomial")
                max_diff = max(max_diff, abs(enum - binom))
                est = mc_robust_error(clf, params, budget, "optimal", trials, seed.child(cells), threads)
                mc_ok += _agrees(est.p_hat, binom, trials)
                cells += 1
    ok = max_diff <= 1e-12 and mc_ok == cells
    return VerifyReport("bernoulli_exactness", ok, max_diff, 1e-12, 0.0,
                        f"MC within 4 se in {mc_ok}/{cells} cells")


# criterion 5
def check_linear_besteps(seed: RngSeed, threads: int, trials: int = 20_000) -> VerifyReport:
    tau, d = 0.1, 2000
    tail = 2.0 * math.exp(-tau * tau * d / 2.0)
    theta = draw_prior_theta("bernoulli", d, seed.generator(0))
    params = BernoulliModelParams(theta, tau)
    star = LinearClassifier(theta / math.sqrt(d))
    robust = mc_robust_error(star, params, PerturbationBudget(0.09), "optimal", trials, seed.child(1), threads)
    nonrobust = mc_robust_error(star, params, PerturbationBudget(0.31), "optimal", trials, seed.child(2), threads)
    learners = {f"mean_n{n}": learn_weighted_mean(sample_bernoulli(params, n, seed.child(10 + n)))
                for n in (1, 10, 100)}
    learners["theta_star"] = star
    u = seed.generator(3).standard_normal(d)
    learners["random_unit"] = LinearClassifier(u / np.linalg.norm(u))
    floor = math.inf
    for j, clf in enumerate(learners.values()):
        est = mc_robust_error(clf, params, PerturbationBudget(0.31), "optimal", trials, seed.child(20 + j), threads)
        floor = min(floor, est.p_hat)
    ok = (robust.p_hat <= tail + 0.01 and nonrobust.p_hat >= 1 - tail - 0.01
          and floor >= 1 / 6 - 0.02)
    return VerifyReport("linear_besteps", ok, floor, 1 / 6, 0.02,
                        f"theta* robust error {robust.p_hat:.4g} at eps=0.09, "
                        f"{nonrobust.p_hat:.4g} at eps=0.31; min over learners at eps=0.31 {floor:.4g}")


def thresholding_tau(d: int, beta: float = 0.01) -> float:
    """(log(1/beta) / (2d))^(1/4) rounded up to two decimals."""
    return math.ceil(100 * (math.log(1 / beta) / (2 * d)) ** 0.25 - 1e-9) / 100


# criterion 6
def check_thresholding(seed: RngSeed, threads: int, trials: int = 10_000) -> VerifyReport:
    d = 10_000
    tau = thresholding_tau(d)
    theta = draw_prior_theta("bernoulli", d, seed.generator(0))
    params = BernoulliModelParams(theta, tau)
    clf = learn_weighted_mean(sample_bernoulli(params, 1, seed.child(1)), preprocess="threshold")
    rob = mc_robust_error(clf, params, PerturbationBudget(0.99), "optimal", trials, seed.child(2), threads)
    std = mc_standard_error(clf, params, trials, seed.child(2), threads)
    ok = rob.p_hat <= 0.01 + 3 * rob.std_err and rob.p_hat == std.p_hat
    return VerifyReport("thresholding", ok, rob.p_hat, 0.01, 3 * rob.std_err,
                        f"tau={tau}; standard error {std.p_hat:.4g} under the same seed")


# criterion 7
def check_log_odds_concentration(seed: RngSeed, threads: int, trials: int = 10_000) -> VerifyReport:
    tau, n, delta = 0.25, 16, 0.05
    bound = evaluate_bound("lemma_bb_one_d", {"tau": tau, "n": n, "delta": delta}).value
    rng = seed.generator(0)
    theta = 2.0 * rng.integers(0, 2, size=trials) - 1.0
    agree = rng.random((trials, n)) < 0.5 + tau
    z = np.where(agree, 1.0, -1.0) * theta[:, None]
    freq = float(np.mean(np.abs(log_odds_bernoulli(z, tau)) > bound))
    return VerifyReport("log_odds_concentration", freq <= delta, freq, delta, 0.0,
                        f"bound on |log odds| = {bound:.4g}")


# criterion 8
def check_sqrt_d_scaling(seed: RngSeed, threads: int, trials: int = 20) -> VerifyReport:
    ds = [256, 1024, 4096, 16384]
    cfg = SweepConfig("gaussian", ds, [d ** 0.25 / 32 for d in ds], [0.1], trials=trials,
                      theta_mode="fixed", base_seed=int(seed.child(0).base_seed),
                      mc_test_points=0, noise_paired=True)
    rows = run_sweep(cfg, threads)
    robust = find_min_n(rows, 0.01, "robust")
    standard = find_min_n(rows, 0.01, "standard")
    std_ok = all(v == 1 for v in standard.values())
    try:
        fit = scaling_fit(robust)
        slope, note = fit.slope, ""
    except ValueError as exc:
        slope, note = math.nan, f"; fit failed: {exc}"
    ok = std_ok and 0.4 <= slope <= 0.6
    return VerifyReport("sqrt_d_scaling", ok, slope, 0.5, 0.1,
                        f"min n robust {[robust[k] for k in sorted(robust)]}, "
                        f"standard {[standard[k] for k in sorted(standard)]}{note}")


# criterion 9
def check_pgd_vs_optimal(seed: RngSeed, threads: int, samples: int = 1000) -> VerifyReport:
    rng = seed.generator(0)
    agree = 0
    for i in range(samples):
        d = int(rng.integers(2, 65))
        params = GaussianModelParams(rng.standard_normal(d), float(rng.uniform(0.5, 2.0)))
        data = sample_gaussian(params, 1, seed.child(i))
        clf = LinearClassifier(rng.standard_normal(d))
        budget = PerturbationBudget(float(rng.uniform(0.01, 1.0)))
        exact = optimal_linear_attack(clf, data[0], budget)
        pgd = pgd_attack("neg_margin", clf, data[0], budget, steps=20, seed=seed.generator(i, 1))
        agree += exact.misclassified == pgd.misclassified
    rate = agree / samples
    return VerifyReport("pgd_vs_optimal", rate >= 0.99, rate, 0.99, 0.0,
                        f"{agree}/{samples} decisions agree")


# criterion 10
def check_determinism(seed: RngSeed, threads: int) -> VerifyReport:
    params = GaussianModelParams(draw_prior_theta("gaussian", 32, seed.generator(0)), 1.0)
    clf = LinearClassifier(params.theta_star)
    budget = PerturbationBudget(0.1)
    same = []
    for attack in ("optimal", "pgd"):
        a = mc_robust_error(clf, params, budget, attack, 50_000, seed.child(1), 1)
        b = mc_robust_error(clf, params, budget, attack, 50_000, seed.child(1), 8)
        same.append(a == b)
    lo1 = expected_robust_error_lower_experiment(None, 4, 5, 2.0, 1.0, 50, 50, seed.child(2), 1)
    lo8 = expected_robust_error_lower_experiment(None, 4, 5, 2.0, 1.0, 50, 50, seed.child(2), 8)
    same.append(lo1 == lo8)
    cfg = SweepConfig("bernoulli", [16, 64], [0.1, 0.2], [0.0, 0.3], n_grid=[1, 4, 16], trials=3,
                      theta_mode="prior", classifier_kinds=["plain", "thresholded"],
                      base_seed=int(seed.child(3).base_seed), mc_test_points=500)
    csvs = [records_to_csv(run_sweep(cfg, t)) for t in (1, 1, 8)]
    same.append(csvs[0] == csvs[1] == csvs[2])
    observed = sum(same) / len(same)
    return VerifyReport("determinism", observed == 1.0, observed, 1.0, 0.0,
                        f"{sum(same)}/{len(same)} reruns identical across thread counts")


def check_eps0_collapse(seed: RngSeed, threads: int) -> VerifyReport:
    params = GaussianModelParams(draw_prior_theta("gaussian", 8, seed.generator(0)), 1.5)
    u = seed.generator(1).standard_normal(8)
    clf = LinearClassifier(u)
    zero = PerturbationBudget(0.0)
    std = mc_standard_error(clf, params, 20_000, seed.child(2), threads)
    same = [mc_robust_error(clf, params, zero, a, 20_000, seed.child(2), threads, delta=np.zeros(8)).p_hat
            == std.p_hat for a in ("optimal", "pgd", "universal")]
    same.append(gaussian_robust_error(u, params, zero) == gaussian_standard_error(u, params))
    cfg = SweepConfig("gaussian", [16], [1.0], [0.0], n_grid=[1], trials=3,
                      base_seed=int(seed.child(3).base_seed), mc_test_points=1000)
    same.extend(r.rob_err_mc == r.std_err_mc and r.rob_err_analytic == r.std_err_analytic
                for r in run_sweep(cfg, threads))
    observed = sum(same) / len(same)
    return VerifyReport("eps0_collapse", observed == 1.0, observed, 1.0, 0.0,
                        f"{sum(same)}/{len(same)} zero-budget comparisons identical")


def check_threshold_idempotence(seed: RngSeed, threads: int) -> VerifyReport:
    rng = seed.generator(0)
    x = rng.standard_normal((200, 16))
    cube = threshold_map(x)
    shift = rng.uniform(-0.999, 0.999, size=cube.shape)
    same = [bool(np.array_equal(threshold_map(cube), cube)),
            bool(np.array_equal(threshold_map(cube + shift), cube))]
    params = BernoulliModelParams(draw_prior_theta("bernoulli", 64, seed.generator(1)), 0.1)
    clf = learn_weighted_mean(sample_bernoulli(params, 1, seed.child(2)), preprocess="threshold")
    std = mc_standard_error(clf, params, 20_000, seed.child(3), threads)
    rob = mc_robust_error(clf, params, PerturbationBudget(0.5), "optimal", 20_000, seed.child(3), threads)
    same.append(std.p_hat == rob.p_hat)
    res = threshold_attack(clf, cube[:, :1].repeat(64, axis=1), PerturbationBudget(0.99), np.ones(200))
    same.append(bool(np.array_equal(threshold_map(res.x_prime), cube[:, :1].repeat(64, axis=1))))
    observed = sum(same) / len(same)
    return VerifyReport("threshold_idempotence", observed == 1.0, observed, 1.0, 0.0,
                        f"{sum(same)}/{len(same)} thresholding identities hold")


CHECKS: dict[str, tuple[int, Callable[[RngSeed, int], VerifyReport]]] = {
    "analytic_mc_gaussian": (1, check_analytic_mc_gaussian),
    "gausslinf_sample_complexity": (2, check_gausslinf_sample_complexity),
    "gaussian_lower_bound": (3, check_gaussian_lower_bound),
    "bernoulli_exactness": (4, check_bernoulli_exactness),
    "linear_besteps": (5, check_linear_besteps),
    "thresholding": (6, check_thresholding),
    "log_odds_concentration": (7, check_log_odds_concentration),
    "sqrt_d_scaling": (8, check_sqrt_d_scaling),
    "pgd_vs_optimal": (9, check_pgd_vs_optimal),
    "determinism": (10, check_determinism),
    "eps0_collapse": (11, check_eps0_collapse),
    "threshold_idempotence": (12, check_threshold_idempotence),
}
ACCEPTANCE = [name for name, (idx, _) in CHECKS.items() if idx <= 10]
SUITES = {
    "all": list(CHECKS),
    "acceptance": ACCEPTANCE,
    "trivial": ["eps0_collapse", "threshold_idempotence"],
    "gaussian-lower": ["gaussian_lower_bound"],
}


def resolve(selection) -> list[str]:
    names: list[str] = []
    for item in ([selection] if isinstance(selection, str) else selection):
        if item in SUITES:
            names.extend(SUITES[item])
        elif item in CHECKS:
            names.append(item)
        else:
            raise KeyError(f"unknown check or suite {item!r}; suites: {', '.join(SUITES)}; "
                           f"checks: {', '.join(CHECKS)}")
    return list(dict.fromkeys(names))


def run_check(name: str, seed: int = 0, threads: int = 1) -> VerifyReport:
    idx, fn = CHECKS[name]
    return fn(RngSeed(seed, idx), threads)


def verify(selection="all", seed: int = 0, threads: int = 1) -> list[VerifyReport]:
    return [run_check(name, seed, threads) for name in resolve(selection)]
