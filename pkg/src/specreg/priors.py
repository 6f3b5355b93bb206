"""The three priors: truncated singular Gaussian on theta, a discrete
prior on the truncation level k, and an inverse Gaussian on sigma^2.

The theta prior has density proportional to ``exp(-theta^T S_k^+ theta)``
(note: no 1/2 in the exponent, so the per-direction variance is
``lambda_j / 2``) restricted to the ball of radius R.  Mass lives only on
the span of the top-k eigenvectors; anything off that span, or outside
the ball, has log density -inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .linalg import SpectralDecomposition

# Span membership tolerance, relative to ||theta||.
SPAN_RTOL = 1e-8
# Rejection sampling aborts below this acceptance rate.
MIN_ACCEPT_RATE = 1e-4
_REJECTION_BLOCK = 8192


class ConfigurationError(ValueError):
    """A prior configuration that cannot be sampled from."""


def default_truncation_penalty(k: int) -> float:
    """The usual choice for the k-prior exponent, f(k) = -k^2 - 4k."""
    return -float(k) ** 2 - 4.0 * float(k)


@dataclass(frozen=True)
class PriorConfig:
    """Every tunable of the three priors."""

    L_kappa: int = 1
    U_kappa: int = 1
    R: float = 1e5
    f: Callable[[int], float] = field(default=default_truncation_penalty)
    eta: float = 1.0
    xi: float = 1.0

    def __post_init__(self):
        if not 1 <= self.L_kappa <= self.U_kappa:
            raise ValueError(
                f"need 1 <= L_kappa <= U_kappa, got ({self.L_kappa}, {self.U_kappa})"
            )
        if min(self.R, self.eta, self.xi) <= 0:
            raise ValueError("R, eta and xi must all be positive")
        for k in range(self.L_kappa, self.U_kappa):
            if self.f(k) < self.f(k + 1):
                raise ValueError(f"f must be non-increasing on the support; rises at k={k}")

    @property
    def support(self) -> range:
        return range(self.L_kappa, self.U_kappa + 1)

    def check_k(self, k: int) -> int:
        k = int(k)
        if not self.L_kappa <= k <= self.U_kappa:
            raise ValueError(f"k={k} outside the prior support [{self.L_kappa}:{self.U_kappa}]")
        return k


def log_prior_theta_unnorm(
    theta: np.ndarray, dec: SpectralDecomposition, k: int, cfg: PriorConfig
) -> float:
    """Unnormalized log density of the theta prior at truncation level k.

    Returns ``-theta^T S_k^+ theta`` when theta is inside the R-ball and
    lies in the top-k eigenspace (within a projection tolerance), else
    -inf.
    """
    k = cfg.check_k(k)
    theta = np.asarray(theta, dtype=float)
    norm = float(np.linalg.norm(theta))
    if norm > cfg.R:
        return -math.inf
    ks = min(k, dec.rank_stored)
    V = dec.eigenvectors[:, :ks]
    coeff = V.T @ theta
    residual = theta - V @ coeff
    if np.linalg.norm(residual) > SPAN_RTOL * max(norm, 1e-300):
        return -math.inf
    lam = dec.eigenvalues[:ks]
    if np.any((lam <= 0) & (np.abs(coeff) > SPAN_RTOL * max(norm, 1e-300))):
        # Zero-eigenvalue directions inside the head carry no prior mass.
        return -math.inf
    positive = lam > 0
    return float(-np.sum(coeff[positive] ** 2 / lam[positive]))


def prior_k_logweights(cfg: PriorConfig) -> list[tuple[int, float]]:
    """Normalized log probabilities of the truncation-level prior."""
    ks = np.array(list(cfg.support))
    logits = np.array([cfg.f(int(k)) for k in ks])
    logits = logits - logits.max()
    logz = math.log(np.exp(logits).sum())
    return [(int(k), float(l - logz)) for k, l in zip(ks, logits)]


def log_prior_sigma2(sigma2: float, cfg: PriorConfig) -> float:
    """Log inverse-Gaussian density with mean eta and shape xi.

    Density: sqrt(xi / (2 pi sigma^6)) * exp(-xi (sigma^2 - eta)^2 /
    (2 eta^2 sigma^2)).
    """
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    eta, xi = cfg.eta, cfg.xi
    return (
        0.5 * math.log(xi / (2.0 * math.pi))
        - 1.5 * math.log(sigma2)
        - xi * (sigma2 - eta) ** 2 / (2.0 * eta**2 * sigma2)
    )


def sample_inverse_gaussian(
    eta: float, xi: float, rng: np.random.Generator, size: int | None = None
):
    """Inverse-Gaussian draws via the two-root transformation method.

    Solve the quadratic for the smaller root of the transformed chi-square
    variate, then pick between the root and its conjugate ``eta^2 / root``
    with probability ``eta / (eta + root)``.
    """
    if eta <= 0 or xi <= 0:
        raise ValueError("inverse Gaussian needs eta > 0 and xi > 0")
    scalar = size is None
    m = 1 if scalar else int(size)
    nu = rng.standard_normal(m)
    w = nu * nu
    root = eta + (eta**2 * w - eta * np.sqrt(4.0 * eta * xi * w + eta**2 * w**2)) / (2.0 * xi)
    u = rng.uniform(size=m)
    out = np.where(u <= eta / (eta + root), root, eta**2 / root)
    return float(out[0]) if scalar else out


def sample_prior_theta_coefficients(
    k: int,
    dec: SpectralDecomposition,
    cfg: PriorConfig,
    rng: np.random.Generator,
    size: int,
) -> np.ndarray:
    """Coefficients of theta-prior draws in the top-k eigenbasis.

    Each coefficient is N(0, lambda_j / 2); whole vectors are rejected
    until the Euclidean norm (equal to the coefficient norm) is within R.
    """
    k = cfg.check_k(k)
    if k > dec.rank_stored or dec.eigenvalues[k - 1] <= 0:
        raise ValueError(f"prior at k={k} needs lambda_hat_k > 0")
    sd = np.sqrt(dec.eigenvalues[:k] / 2.0)
    out = np.empty((size, k))
    filled = 0
    attempted = 0
    while filled < size:
        block = max(_REJECTION_BLOCK, size - filled)
        draws = rng.standard_normal((block, k)) * sd
        keep = draws[np.linalg.norm(draws, axis=1) <= cfg.R]
        attempted += block
        take = min(len(keep), size - filled)
        out[filled : filled + take] = keep[:take]
        filled += take
        if attempted >= _REJECTION_BLOCK and (filled / attempted) < MIN_ACCEPT_RATE:
            raise ConfigurationError(
                f"theta-prior acceptance rate {filled / attempted:.2e} at k={k}: "
                "R too small for spectrum"
            )
    return out


def sample_prior(
    k: int, dec: SpectralDecomposition, cfg: PriorConfig, rng: np.random.Generator
) -> tuple[np.ndarray, float]:
    """One joint prior draw (theta, sigma^2) at truncation level k."""
    coeff = sample_prior_theta_coefficients(k, dec, cfg, rng, size=1)[0]
    theta = dec.eigenvectors[:, :k] @ coeff
    sigma2 = sample_inverse_gaussian(cfg.eta, cfg.xi, rng)
    return theta, sigma2
