"""Spectral-prior Bayesian linear regression for over-parameterized data.

A truncated singular Gaussian prior built from the empirical covariance
spectrum of one data half, a self-normalized importance sampler for the
posterior over (theta, sigma^2, k) on the other half, a closed-form
truncated-Gaussian approximator, and the experiment harness around them.
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("specreg")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"

from .approx import (
    TruncatedGaussianApprox,
    approx_logdensity_unnorm,
    build_approximator,
    estimate_tv,
    minimum_norm_interpolator,
    sample_approximator,
)
from .datagen import (
    Dataset,
    EigenSchedule,
    MissingPolicy,
    ScenarioSpec,
    SplitDataset,
    build_covariance,
    load_csv_dataset,
    sample_dataset,
    sample_theta_star,
    split_dataset,
)
from .linalg import (
    SpectralDecomposition,
    decompose_from_rows,
    effective_rank,
    empirical_covariance,
    pseudoinverse_truncated,
    spectral_decompose,
    truncate,
)
from .metrics import kl_divergence, kl_variation, mape, predictive_risk
from .priors import (
    ConfigurationError,
    PriorConfig,
    log_prior_sigma2,
    log_prior_theta_unnorm,
    prior_k_logweights,
    sample_inverse_gaussian,
    sample_prior,
)
from .snis import (
    InferenceError,
    SNISConfig,
    WeightedPosterior,
    log_likelihood,
    log_unnorm_posterior,
    posterior_mean,
    predictive_interval,
    snis_sample,
)

__all__ = [name for name in dir() if not name.startswith("_")]
