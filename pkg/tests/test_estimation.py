import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from advgap.analytic import bernoulli_error_exact, gaussian_lower_bound, gaussian_robust_error
from advgap.attacks import PerturbationBudget
from advgap.classifiers import LinearClassifier, learn_weighted_mean
from advgap.distributions import (BernoulliModelParams, GaussianModelParams, draw_prior_theta,
                                  sample_bernoulli)
from advgap.estimation import (ErrorEstimate, confidence_interval, expected_robust_error_lower_experiment,
                               lower_bound_mc, mc_robust_error, mc_standard_error)
from advgap.rng import RngSeed


class TestErrorEstimate:
    @settings(max_examples=100, deadline=None)
    @given(trials=st.integers(1, 10_000), frac=st.floats(0, 1))
    def test_invariants(self, trials, frac):
        errors = int(round(frac * trials))
        est = ErrorEstimate.from_counts(errors, trials)
        assert 0 <= est.p_hat <= 1
        assert est.std_err == pytest.approx(math.sqrt(est.p_hat * (1 - est.p_hat) / trials))
        lo, hi = est.ci95
        assert 0 <= lo <= est.p_hat <= hi <= 1

    def test_wilson_fallback_is_nondegenerate(self):
        lo, hi = confidence_interval(0.0, 50)
        assert lo == 0.0 and hi > 0.0

    def test_normal_interval(self):
        lo, hi = confidence_interval(0.5, 10_000)
        assert hi - lo == pytest.approx(2 * 1.959964 * 0.005, rel=1e-5)

    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            ErrorEstimate(1.5, 10, 0.0, (0.0, 1.0))


class TestStandardMC:
    def test_symmetric_classifier(self):
        params = GaussianModelParams(np.array([1.0, 1.0]), 1.0)
        est = mc_standard_error(LinearClassifier(np.array([1.0, -1.0])), params, 100_000, 1)
        assert abs(est.p_hat - 0.5) <= 3 * est.std_err

    def test_matches_closed_form(self):
        params = GaussianModelParams(np.ones(4), 2.0)
        est = mc_standard_error(LinearClassifier(np.ones(4)), params, 1_000_000, 2)
        assert abs(est.p_hat - 0.158655) <= 3 * est.std_err

    def test_single_trial(self):
        est = mc_standard_error(LinearClassifier(np.ones(2)), GaussianModelParams(np.ones(2), 1.0), 1, 3)
        assert est.p_hat in (0.0, 1.0)
        assert 0 <= est.ci95[0] <= est.ci95[1] <= 1

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            mc_standard_error(LinearClassifier(np.ones(3)), GaussianModelParams(np.ones(2), 1.0), 10, 0)


class TestRobustMC:
    def test_zero_budget_equals_standard(self):
        params = GaussianModelParams(np.array([1.0, 0.5, -0.3]), 1.2)
        clf = LinearClassifier(np.array([0.2, 1.0, 0.4]))
        std = mc_standard_error(clf, params, 30_000, 4)
        for attack in ("optimal", "pgd", "universal"):
            rob = mc_robust_error(clf, params, PerturbationBudget(0.0), attack, 30_000, 4, delta=np.zeros(3))
            assert rob.p_hat == std.p_hat

    def test_matches_closed_form(self):
        params = GaussianModelParams(np.ones(2), 1.0)
        est = mc_robust_error(LinearClassifier(np.ones(2)), params, PerturbationBudget(0.5), "optimal", 1_000_000, 5)
        assert abs(est.p_hat - 0.239750) <= 3 * est.std_err
        assert est.kind == "exact"

    def test_thresholding_removes_perturbation(self):
        theta = draw_prior_theta("bernoulli", 50, RngSeed(6))
        params = BernoulliModelParams(theta, 0.1)
        clf = learn_weighted_mean(sample_bernoulli(params, 1, RngSeed(7)), preprocess="threshold")
        std = mc_standard_error(clf, params, 20_000, 8)
        rob = mc_robust_error(clf, params, PerturbationBudget(0.99), "optimal", 20_000, 8)
        assert rob.p_hat == std.p_hat
        rob_u = mc_robust_error(clf, params, PerturbationBudget(0.99), "universal", 20_000, 8,
                                delta=np.full(50, 0.99))
        assert rob_u.p_hat == std.p_hat

    def test_bernoulli_matches_exact(self):
        params = BernoulliModelParams(np.ones(9), 0.15)
        budget = PerturbationBudget(0.3)
        exact = bernoulli_error_exact(np.ones(9), params, budget)
        est = mc_robust_error(LinearClassifier(np.ones(9)), params, budget, "optimal", 100_000, 9)
        assert abs(est.p_hat - exact) <= 4 * math.sqrt(exact * (1 - exact) / 1e5)

    def test_unbiased_on_grid(self):
        cells = ok = 0
        for d in (3, 10, 30):
            for sigma in (0.5, 1.0, 2.0):
                for eps in (0.05, 0.2, 0.5):
                    theta = draw_prior_theta("gaussian", d, RngSeed(10, cells))
                    params = GaussianModelParams(theta, sigma)
                    w = theta + np.random.default_rng(cells).standard_normal(d)
                    budget = PerturbationBudget(eps)
                    ref = gaussian_robust_error(w, params, budget)
                    est = mc_robust_error(LinearClassifier(w), params, budget, "optimal", 100_000, RngSeed(11, cells))
                    se = math.sqrt(ref * (1 - ref) / 1e5)
                    ok += abs(est.p_hat - ref) <= 4 * se + 1e-15
                    cells += 1
        assert ok / cells >= 0.95

    def test_optimal_dominates_pgd(self):
        params = GaussianModelParams(np.ones(10), 1.5)
        clf = LinearClassifier(np.linspace(-0.5, 1.0, 10))
        budget = PerturbationBudget(0.2)
        opt = mc_robust_error(clf, params, budget, "optimal", 50_000, 12)
        pgd = mc_robust_error(clf, params, budget, "pgd", 50_000, 12)
        assert pgd.kind == "lower-bound"
        assert opt.p_hat >= pgd.p_hat - 3 * math.hypot(opt.std_err, pgd.std_err)

    def test_thread_count_does_not_matter(self):
        params = GaussianModelParams(np.ones(300), 3.0)
        clf = LinearClassifier(np.ones(300))
        budget = PerturbationBudget(0.1)
        for attack in ("optimal", "pgd"):
            a = mc_robust_error(clf, params, budget, attack, 30_000, 13, threads=1)
            b = mc_robust_error(clf, params, budget, attack, 30_000, 13, threads=4)
            assert a == b

    def test_incompatible_pairs(self):
        params = GaussianModelParams(np.ones(2), 1.0)
        with pytest.raises(ValueError):
            mc_robust_error(LinearClassifier(np.ones(2), "threshold"), params, PerturbationBudget(0.1), "pgd", 10)
        with pytest.raises(ValueError):
            mc_robust_error(LinearClassifier(np.ones(2)), params, PerturbationBudget(0.1), "universal", 10)
        with pytest.raises(ValueError):
            mc_robust_error(LinearClassifier(np.ones(2)), params, PerturbationBudget(0.1), "universal", 10,
                            delta=np.array([0.5, 0.0]))
        with pytest.raises(ValueError):
            mc_robust_error(LinearClassifier(np.ones(2)), params, PerturbationBudget(0.1), "fgsm", 10)


class TestLowerBoundExperiment:
    def test_worked_example(self):
        est = expected_robust_error_lower_experiment(None, 4, 5, 2.0, 1.0, 500, 200, RngSeed(14))
        assert est.p_hat >= gaussian_lower_bound(4, 2.0, 1.0, 5) - 3 * est.std_err
        assert 0 <= est.extras["budget_exceeded_rate"] <= 1

    def test_estimator_is_unbiased_for_the_bound(self):
        # the attacked predictive is centred at 0, so each in-budget draw errs with probability 1/2
        est = expected_robust_error_lower_experiment(None, 8, 16, 4.0, 1.5, 2000, 50, RngSeed(15))
        assert abs(est.p_hat - gaussian_lower_bound(8, 4.0, 1.5, 16)) <= 4 * est.std_err

    def test_plenty_of_data(self):
        est = expected_robust_error_lower_experiment(None, 10_000, 5, 1.0, 0.01, 50, 200, RngSeed(16),
                                                     exceeded="clean")
        assert est.p_hat < 0.5

    def test_zero_budget(self):
        zero = expected_robust_error_lower_experiment(None, 4, 5, 2.0, 0.0, 100, 100, RngSeed(17))
        assert zero.p_hat == 0.0 and gaussian_lower_bound(4, 2.0, 0.0, 5) == 0.0
        clean = expected_robust_error_lower_experiment(None, 4, 5, 2.0, 0.0, 300, 200, RngSeed(17),
                                                       exceeded="clean")
        assert clean.extras["budget_exceeded_rate"] == 1.0
        assert 0.0 < clean.p_hat < 0.5

    def test_threads(self):
        a = expected_robust_error_lower_experiment(None, 4, 5, 2.0, 1.0, 40, 20, RngSeed(18), threads=1)
        b = expected_robust_error_lower_experiment(None, 4, 5, 2.0, 1.0, 40, 20, RngSeed(18), threads=3)
        assert a == b

    def test_direct_bound_monte_carlo(self):
        est = lower_bound_mc(4, 2.0, 1.0, 5, 200_000, RngSeed(19))
        assert abs(est.p_hat - gaussian_lower_bound(4, 2.0, 1.0, 5)) <= 4 * est.std_err

    def test_validation(self):
        with pytest.raises(ValueError):
            expected_robust_error_lower_experiment(None, 4, 5, 2.0, 1.0, 0, 10)
