"""Simulation lab for the gap between standard and adversarially robust sample complexity."""

from .analytic import (bernoulli_error_exact, gaussian_lower_bound, gaussian_robust_error,
                       gaussian_standard_error, linear_besteps_bounds, log_odds_bernoulli)
from .attacks import (AttackResult, PerturbationBudget, apply_universal, optimal_attack,
                      optimal_linear_attack, pgd_attack, threshold_attack, universal_perturbation)
from .bounds import BoundSpec, evaluate_bound
from .classifiers import LinearClassifier, learn_weighted_mean, margin, predict, threshold_map
from .distributions import (BernoulliModelParams, Dataset, GaussianModelParams, LabeledSample,
                            PosteriorParams, gaussian_posterior, sample, sample_bernoulli,
                            sample_gaussian)
from .estimation import (ErrorEstimate, expected_robust_error_lower_experiment, mc_robust_error,
                         mc_standard_error)
from .experiments import SweepConfig, SweepRecord, find_min_n, run_sweep, scaling_fit
from .rng import RngSeed
from .verify import VerifyReport, verify

__version__ = "0.1.0"
