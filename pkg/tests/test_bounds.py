import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from advgap.bounds import CATALOG, BoundSpec, MissingParameterError, UnknownBoundError, evaluate_bound

SAMPLE_PARAMS = {
    "sigma": 1.0, "t": 2.0, "d": 100.0, "n": 4.0, "delta": 0.05, "mu_norm": 10.0, "ip": 3.0,
    "rho": 1.0, "beta": 0.01, "eps": 0.1, "dual_norm": 5.0, "tau": 0.1, "gamma": 0.1,
}


class TestCatalog:
    def test_fact_gaussian_norm(self):
        spec = evaluate_bound("fact_gaussian_norm", {"sigma": 1, "t": 2})
        assert spec.failure_prob == pytest.approx(math.exp(-2), abs=1e-12)
        assert spec.failure_prob == pytest.approx(0.13534, abs=1e-5)
        assert evaluate_bound("fact_gaussian_norm", {"sigma": 2, "t": 1, "d": 9}).value == pytest.approx(7.0)

    def test_cor_gausslinf_n(self):
        assert evaluate_bound("cor_gausslinf_n", {"eps": 0.1, "d": 1e4}).value == pytest.approx(64.0)
        assert evaluate_bound("cor_gausslinf_n", {"eps": 0.025, "d": 1e4}).value == 1.0

    def test_thm_bern_lin_lb_n(self):
        val = evaluate_bound("thm_bern_lin_lb_n", {"eps": 0.05, "gamma": 0.1, "tau": 0.1, "d": 1e6}).value
        assert val == pytest.approx(0.0025 * 0.01 / (5000 * 1e-4 * math.log(4e7)), rel=1e-12)
        assert val == pytest.approx(2.856426e-6, rel=1e-6)

    def test_bb_one_d(self):
        spec = evaluate_bound("lemma_bb_one_d", {"tau": 0.25, "n": 16, "delta": 0.05})
        assert spec.value == pytest.approx(15 * 0.25 * math.sqrt(32 * math.log(40)))
        assert spec.failure_prob == 0.05

    def test_bern_an(self):
        val = evaluate_bound("bern_an", {"tau": 0.1, "n": 4, "d": 100, "gamma": 0.1}).value
        assert val == pytest.approx(30 * 0.01 * math.sqrt(8 * math.log(4000)))

    def test_unit_ip(self):
        spec = evaluate_bound("lemma_unit_ip", {"sigma": 1, "n": 4, "d": 64})
        assert spec.value == pytest.approx(3 / 8 * 8)
        assert spec.failure_prob == pytest.approx(2 * math.exp(-4))

    def test_besteps_family(self):
        assert evaluate_bound("lemma_linear_besteps_robust", {"tau": 0.1, "d": 2000}).value == pytest.approx(2 * math.exp(-10))
        assert evaluate_bound("lemma_linear_besteps_nonrobust", {"tau": 0.1, "d": 2000}).value == pytest.approx(1 - 2 * math.exp(-10))
        assert evaluate_bound("lemma_linear_besteps_any", {}).value == pytest.approx(1 / 6)

    def test_gaussian_robust_corollaries(self):
        assert evaluate_bound("cor_gaussian_robust_error", {"d": 100}).value == pytest.approx(0.495)
        assert evaluate_bound("cor_gaussian_robust_n", {"eps": 1, "sigma": 4, "d": 100}).value == pytest.approx(2 / math.log(100))

    def test_single_sample_corollaries_are_consistent(self):
        # plugging the returned sigma (tau) back into the standard-error bound gives beta
        d, beta = 10_000, 0.01
        tau = evaluate_bound("cor_bernoulli_single_sample", {"beta": beta, "d": d}).value
        assert evaluate_bound("thm_bernoulli_standard", {"tau": tau, "d": d}).value == pytest.approx(beta)

    def test_lower_bound_entry_matches_analytic(self):
        assert evaluate_bound("thm_gauss_linf_lower", {"n": 4, "sigma": 2, "eps": 1, "d": 5}).value == pytest.approx(0.21249, abs=1e-5)

    @pytest.mark.parametrize("name", sorted(CATALOG))
    def test_every_entry_evaluates(self, name):
        entry = CATALOG[name]
        params = {k: SAMPLE_PARAMS[k] for k in entry.required}
        if name == "lemma_bb_one_d":
            params["n"] = 16
        if name == "lemma_robustupper":
            params["ip"] = 10.0
        spec = evaluate_bound(name, params)
        assert math.isfinite(spec.value)
        assert spec.failure_prob is None or 0 <= spec.failure_prob <= 1

    def test_unknown_name(self):
        with pytest.raises(UnknownBoundError):
            evaluate_bound("lemma_does_not_exist", {})

    def test_missing_parameter(self):
        with pytest.raises(MissingParameterError):
            evaluate_bound("fact_gaussian_norm", {"sigma": 1})

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            evaluate_bound("lemma_bb_one_d", {"tau": 0.25, "n": 17, "delta": 0.05})

    def test_spec_record(self):
        doc = BoundSpec("x", {"a": 1}, 2.0).to_dict()
        assert doc["failure_prob"] == "n/a"


class TestEmpiricalTails:
    @settings(max_examples=10, deadline=None)
    @given(sigma=st.floats(0.5, 2), t=st.floats(0.5, 3), d=st.integers(1, 50), seed=st.integers(0, 100))
    def test_gaussian_norm_tail(self, sigma, t, d, seed):
        spec = evaluate_bound("fact_gaussian_norm", {"sigma": sigma, "t": t, "d": d})
        z = np.random.default_rng(seed).normal(0, sigma, size=(20_000, d))
        freq = np.mean(np.linalg.norm(z, axis=1) >= spec.value)
        assert freq <= spec.failure_prob + 4 * math.sqrt(spec.failure_prob / 20_000) + 1e-3

    def test_bernoulli_ip_tail(self):
        tau, d, delta = 0.1, 200, 0.05
        spec = evaluate_bound("lemma_bernoulli_ip1", {"tau": tau, "d": d, "delta": delta})
        rng = np.random.default_rng(3)
        agree = rng.random((20_000, d)) < 0.5 + tau
        ip = np.where(agree, 1.0, -1.0).sum(axis=1)
        assert np.mean(ip <= spec.value) <= delta
