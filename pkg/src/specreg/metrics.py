"""Evaluation functionals: predictive risk, closed-form divergences
between regression laws, and MAPE."""

from __future__ import annotations

import math

import numpy as np

from .linalg import SpectralDecomposition


def predictive_risk(
    theta: np.ndarray, theta_star: np.ndarray, cov: SpectralDecomposition
) -> float:
    """Covariance-weighted squared error, ``(theta - theta*)^T Sigma (theta - theta*)``.

    Equals the expected squared prediction gap E[(x^T (theta - theta*))^2]
    under the generating covariate law.
    """
    theta = np.asarray(theta, dtype=float)
    theta_star = np.asarray(theta_star, dtype=float)
    if theta.shape != theta_star.shape or theta.shape != (cov.source_dim,):
        raise ValueError(
            f"dimension mismatch: theta {theta.shape}, theta* {theta_star.shape}, "
            f"cov dim {cov.source_dim}"
        )
    coeff = cov.eigenvectors.T @ (theta - theta_star)
    return float(np.sum(cov.eigenvalues * coeff**2))


def _check_variances(sigma2: float, sigma_star2: float):
    if sigma2 <= 0 or sigma_star2 <= 0:
        raise ValueError(f"variances must be positive, got {sigma2} and {sigma_star2}")


def kl_divergence(
    theta: np.ndarray,
    sigma2: float,
    theta_star: np.ndarray,
    sigma_star2: float,
    cov: SpectralDecomposition,
) -> float:
    """KL divergence from the true regression law to the (theta, sigma^2) law.

    Closed form: with r = sigma*^2 / sigma^2 and d = ||theta* - theta||^2_Sigma,
    K = r/2 - log(r)/2 - 1/2 + d / (2 sigma^2).
    """
    _check_variances(sigma2, sigma_star2)
    r = sigma_star2 / sigma2
    d = predictive_risk(theta, theta_star, cov)
    return 0.5 * r - 0.5 * math.log(r) - 0.5 + 0.5 * d / sigma2


def kl_variation(
    theta: np.ndarray,
    sigma2: float,
    theta_star: np.ndarray,
    sigma_star2: float,
    cov: SpectralDecomposition,
) -> float:
    """Second moment companion of the KL divergence.

    Closed form: V = r^2/2 - r + 1/2 + r d / sigma^2, the variance of the
    log-likelihood ratio up to a term quadratic in d / sigma^2 that is
    negligible in the contraction regime d -> 0.
    """
    _check_variances(sigma2, sigma_star2)
    r = sigma_star2 / sigma2
    d = predictive_risk(theta, theta_star, cov)
    return 0.5 * r**2 - r + 0.5 + r * d / sigma2


def mape(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    """Mean absolute percentage error, in percent."""
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ValueError("y_true and y_pred must be 1-D vectors of equal length")
    if np.any(y_true == 0):
        raise ValueError("MAPE is undefined when y_true contains zeros")
    return float(100.0 * np.mean(np.abs(y_true - y_pred) / np.abs(y_true)))
