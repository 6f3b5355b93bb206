"""Closed-form truncated-Gaussian posterior approximator.

For a fixed truncation level L_kappa and noise level sigma^2 the
approximating density is

    proportional to exp(-(theta - mu)^T Lambda (theta - mu)) on the R-ball,

with ``Lambda = S_L^+ + X2^T X2 / (2 sigma^2)`` and
``mu = Lambda^+ X2^T X2 theta_bar / (2 sigma^2)`` where ``theta_bar`` is
the minimum-norm interpolator of D2.  The exponent carries no 1/2, so the
covariance on range(Lambda) is ``Lambda^+ / 2``; null(Lambda) directions
carry no mass.

Lambda has rank at most L_kappa + |D2| regardless of the ambient p, so it
is assembled and decomposed inside the joint span of the top-L
eigenvectors and the D2 rows instead of as a p x p matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .datagen import Dataset
from .linalg import DEFAULT_RANK_RTOL, SpectralDecomposition, _canonical_order
from .priors import MIN_ACCEPT_RATE, ConfigurationError

# Relative residual below which a vector counts as lying in range(Lambda).
RANGE_RTOL = 1e-8


@dataclass(frozen=True)
class TruncatedGaussianApprox:
    """The approximator's mean, precision spectrum, radius and ingredients.

    ``precision_spectral`` stores only the positive eigenpairs of Lambda;
    everything orthogonal to them is null space.
    """

    mu: np.ndarray
    precision_spectral: SpectralDecomposition
    radius: float
    sigma2: float
    mni: np.ndarray

    @property
    def rank(self) -> int:
        return self.precision_spectral.rank_stored


def minimum_norm_interpolator(X2: np.ndarray, y2: np.ndarray) -> np.ndarray:
    """Least-norm least-squares solution ``(X2^T X2)^+ X2^T y2``.

    With full row rank this interpolates: X2 theta = y2.
    """
    X2 = np.asarray(X2, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    if X2.ndim != 2 or X2.shape[0] < 1 or y2.shape != (X2.shape[0],):
        raise ValueError(f"incompatible shapes X2 {X2.shape}, y2 {y2.shape}")
    theta, *_ = np.linalg.lstsq(X2, y2, rcond=None)
    return theta


def build_approximator(
    dec: SpectralDecomposition,
    L_kappa: int,
    sigma2: float,
    D2: Dataset,
    R: float,
) -> TruncatedGaussianApprox:
    """Assemble (mu, Lambda) from the D1 spectrum and the D2 likelihood.

    Works in an orthonormal basis of span(V_{1:L}) + row space(X2), of
    dimension at most L_kappa + |D2|; eigenvalues of Lambda at or below
    1e-12 of the largest are dropped as null.
    """
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    if not 1 <= L_kappa <= dec.source_dim:
        raise ValueError(f"L_kappa={L_kappa} out of range [1:{dec.source_dim}]")
    if R <= 0:
        raise ValueError("R must be positive")
    p = dec.source_dim
    if D2.p != p:
        raise ValueError(f"D2 has {D2.p} columns but the spectrum is {p}-dimensional")
    ls = min(L_kappa, dec.rank_stored)
    lam = dec.eigenvalues[:ls]
    keep = lam > DEFAULT_RANK_RTOL * (dec.eigenvalues[0] if dec.rank_stored else 0.0)
    V = dec.eigenvectors[:, :ls][:, keep]
    inv_lam = 1.0 / lam[keep]

    span = np.hstack([V, D2.X.T])
    Q = scipy.linalg.orth(span) if span.size else np.zeros((p, 0))
    if Q.shape[1] == 0:
        raise ValueError("Lambda is identically zero: empty spectrum head and zero X2")
    VQ = V.T @ Q
    XQ = D2.X @ Q
    A = VQ.T @ (inv_lam[:, None] * VQ) + XQ.T @ XQ / (2.0 * sigma2)
    delta, W = np.linalg.eigh(0.5 * (A + A.T))
    delta, W = _canonical_order(delta, W)
    pos = delta > DEFAULT_RANK_RTOL * max(delta[0], 0.0)
    delta = delta[pos]
    U = Q @ W[:, pos]
    precision = SpectralDecomposition(delta, U, p)

    # X2^T X2 theta_bar = X2^T y2 for the least-squares theta_bar, so mu
    # only needs X2^T y2.
    theta_bar = minimum_norm_interpolator(D2.X, D2.y)
    b = U.T @ (D2.X.T @ D2.y) / (2.0 * sigma2)
    mu = U @ (b / delta)
    return TruncatedGaussianApprox(mu=mu, precision_spectral=precision,
                                   radius=float(R), sigma2=float(sigma2), mni=theta_bar)


def sample_approximator(
    appr: TruncatedGaussianApprox, m: int, seed: int
) -> np.ndarray:
    """``m`` draws, rows of shape (m, p), rejected to the R-ball.

    Each draw is ``mu + sum_j w_j u_j`` with ``w_j ~ N(0, 1/(2 delta_j))``.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    if appr.rank < 1:
        raise ValueError("the approximator precision has rank zero")
    rng = np.random.default_rng(seed)
    sd = 1.0 / np.sqrt(2.0 * appr.precision_spectral.eigenvalues)
    U = appr.precision_spectral.eigenvectors
    out = np.empty((m, appr.mu.shape[0]))
    filled = 0
    attempted = 0
    while filled < m:
        block = m - filled
        w = rng.standard_normal((block, appr.rank)) * sd
        draws = appr.mu + w @ U.T
        keep = draws[np.linalg.norm(draws, axis=1) <= appr.radius]
        attempted += block
        take = min(len(keep), m - filled)
        out[filled : filled + take] = keep[:take]
        filled += take
        if attempted > 64 and filled / attempted < MIN_ACCEPT_RATE:
            raise ConfigurationError(
                "approximator acceptance rate below 1e-4: R too small for the spectrum"
            )
    return out


def approx_logdensity_unnorm(appr: TruncatedGaussianApprox, theta: np.ndarray) -> float:
    """``-(theta - mu)^T Lambda (theta - mu)`` on the support, else -inf.

    The support is the R-ball intersected with the affine subspace
    mu + range(Lambda).
    """
    theta = np.asarray(theta, dtype=float)
    if np.linalg.norm(theta) > appr.radius:
        return -math.inf
    d = theta - appr.mu
    U = appr.precision_spectral.eigenvectors
    coeff = U.T @ d
    residual = d - U @ coeff
    scale = max(float(np.linalg.norm(d)), 1e-300)
    if np.linalg.norm(residual) > RANGE_RTOL * scale:
        return -math.inf
    return float(-np.sum(appr.precision_spectral.eigenvalues * coeff**2))


def _as_points_weights(samples, coords):
    """Accepts a WeightedPosterior, an (n, p) array, or an (array, weights)
    pair, and returns the selected coordinates plus normalized weights."""
    coords = list(coords)
    if hasattr(samples, "theta_coordinates"):
        return samples.theta_coordinates(coords), samples.normalized_weights
    if isinstance(samples, tuple):
        points, weights = samples
        points = np.asarray(points, dtype=float)[:, coords]
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (points.shape[0],) or np.any(weights < 0):
            raise ValueError("weights must be a non-negative vector matching the rows")
        total = weights.sum()
        if total <= 0:
            raise ValueError("weights must have positive total mass")
        return points, weights / total
    points = np.asarray(samples, dtype=float)[:, coords]
    if points.shape[0] == 0:
        raise ValueError("both sample sets must be nonempty")
    return points, np.full(points.shape[0], 1.0 / points.shape[0])


def estimate_tv(samplesA, samplesB, coords=(0, 1), bins: int = 30) -> float:
    """Histogram total-variation distance between two weighted sample sets.

    Both sets are projected onto the two named coordinates, binned on a
    shared bins x bins grid over the joint bounding box, and compared as
    ``0.5 * sum |p_cell - q_cell|``.
    """
    if len(coords) != 2:
        raise ValueError("coords must name exactly two coordinates")
    if bins < 2:
        raise ValueError("bins must be at least 2")
    ptsA, wA = _as_points_weights(samplesA, coords)
    ptsB, wB = _as_points_weights(samplesB, coords)
    if ptsA.shape[0] == 0 or ptsB.shape[0] == 0:
        raise ValueError("both sample sets must be nonempty")
    both = np.vstack([ptsA, ptsB])
    lo = both.min(axis=0)
    hi = both.max(axis=0)
    # Degenerate axes would collapse the grid; widen them symmetrically.
    width = np.where(hi - lo > 0, hi - lo, 1.0)
    lo = lo - 1e-9 * width
    hi = hi + 1e-9 * width
    grid = [(lo[0], hi[0]), (lo[1], hi[1])]
    histA, _, _ = np.histogram2d(ptsA[:, 0], ptsA[:, 1], bins=bins, range=grid, weights=wA)
    histB, _, _ = np.histogram2d(ptsB[:, 0], ptsB[:, 1], bins=bins, range=grid, weights=wB)
    # Weight round-off can push the sum epsilon past the [0, 1] range.
    return float(min(1.0, 0.5 * np.sum(np.abs(histA - histB))))
