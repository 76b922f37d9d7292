"""Split conformal regression with predictors trained to minimize the
quantile of absolute errors, plus baselines, bound evaluators and a
seeded benchmark harness."""
from .bounds import (
    Complexity,
    HolderParams,
    conservative_oracle_level,
    dkw_epsilon,
    effort_excess_volume_bound,
    excess_volume_bound_fixed_f,
    joint_excess_volume_bound,
    nested_length_bound,
    phi_closed_form,
)
from .conformal import (
    CalibrationResult,
    IntervalPredictor,
    ad_effort,
    build,
    calibrate,
    coverage_and_length,
    cqr,
    effort,
    locally_weighted_cp,
    split_cp,
)
from .data import Dataset
from .errors import DomainError, HypothesisError, OptimizationError
from .harness import ExperimentReport, RunConfig, run_real, run_synthetic
from .models import FitConfig, KnnQuantileModel, ParamModel, fit, init_model, knn_quantile
from .qae import QaeConfig, QaeTrace, minimize_qae, qae_gradient, qae_objective
from .quantiles import (
    SmoothingKernel,
    empirical_quantile,
    gamma_smooth,
    gamma_smooth_derivative,
    nested_score,
    pinball_loss,
    smoothed_cdf,
    smoothed_quantile,
)
from .synth import NoiseSpec, ScenarioSpec, generate, sample_noise

__version__ = "0.1.0"
