"""Symmetric eigendecomposition, rank-k truncation and pseudoinversion.

Everything downstream (priors, posterior sampling, the Gaussian
approximator) consumes :class:`SpectralDecomposition` objects rather than
raw matrices, so each dataset is decomposed exactly once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Relative tolerance for accepting a matrix as symmetric.
SYMMETRY_RTOL = 1e-12
# Eigenvalues below -EIG_CLAMP_RTOL * lambda_1 are an error; above it they
# are rounding noise and get clamped to zero.
EIG_CLAMP_RTOL = 1e-10
# Default relative cutoff deciding when an eigenvalue counts as zero for
# pseudoinversion.
DEFAULT_RANK_RTOL = 1e-12


def require_symmetric(S: np.ndarray) -> np.ndarray:
    """Validate and return ``S`` as a float symmetric matrix."""
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {S.shape}")
    scale = 1.0 + (np.max(np.abs(S)) if S.size else 0.0)
    skew = np.max(np.abs(S - S.T)) if S.size else 0.0
    if skew > SYMMETRY_RTOL * scale:
        raise ValueError(
            f"matrix is not symmetric: max |S - S^T| = {skew:.3e} "
            f"exceeds {SYMMETRY_RTOL:.0e} * (1 + max|S|)"
        )
    return 0.5 * (S + S.T)


def empirical_covariance(rows: np.ndarray) -> np.ndarray:
    """Mean of centered outer products, ``(1/m) sum_i (x_i - xbar)(x_i - xbar)^T``.

    The caller chooses the split convention; with the first half of an
    n-row dataset this is the usual two-over-n estimator.
    """
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[0] < 1:
        raise ValueError("empirical_covariance needs a nonempty 2-D row matrix")
    centered = rows - rows.mean(axis=0)
    cov = centered.T @ centered / rows.shape[0]
    return 0.5 * (cov + cov.T)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenpairs of a symmetric matrix, eigenvalues descending.

    ``eigenvectors`` has shape ``(source_dim, r)`` with orthonormal columns.
    When ``r < source_dim`` the omitted eigenvalues are exactly zero (the
    economical path for covariances of a few rows in high dimension); the
    represented matrix is still ``V diag(eigenvalues) V^T``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    source_dim: int = field(default=0)

    def __post_init__(self):
        eigenvalues = np.asarray(self.eigenvalues, dtype=float)
        eigenvectors = np.asarray(self.eigenvectors, dtype=float)
        object.__setattr__(self, "eigenvalues", eigenvalues)
        object.__setattr__(self, "eigenvectors", eigenvectors)
        if self.source_dim == 0:
            object.__setattr__(self, "source_dim", eigenvectors.shape[0])
        if eigenvectors.shape != (self.source_dim, eigenvalues.shape[0]):
            raise ValueError("eigenvector matrix shape does not match eigenvalues")
        if np.any(np.diff(eigenvalues) > 0):
            raise ValueError("eigenvalues must be non-increasing")

    @property
    def rank_stored(self) -> int:
        return self.eigenvalues.shape[0]

    def eigenvalue(self, j: int) -> float:
        """Eigenvalue with 1-based index ``j``; zero beyond the stored block."""
        if not 1 <= j <= self.source_dim:
            raise ValueError(f"eigenvalue index {j} out of range [1:{self.source_dim}]")
        return float(self.eigenvalues[j - 1]) if j <= self.rank_stored else 0.0

    def padded_eigenvalues(self) -> np.ndarray:
        """All ``source_dim`` eigenvalues, zero-padded past the stored block."""
        out = np.zeros(self.source_dim)
        out[: self.rank_stored] = self.eigenvalues
        return out

    def matrix(self) -> np.ndarray:
        """Reassemble ``V diag(lambda) V^T``."""
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.T


def _canonical_order(eigenvalues: np.ndarray, vectors: np.ndarray):
    """Descending eigenvalues, ties broken by original index, signs fixed.

    The sign of each eigenvector is chosen so that its largest-magnitude
    entry is positive, which makes truncations reproducible across runs
    and LAPACK builds.
    """
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    vectors = vectors[:, order]
    lead = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[lead, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return eigenvalues, vectors * signs


def spectral_decompose(S: np.ndarray) -> SpectralDecomposition:
    """Full eigendecomposition of a symmetric matrix.

    Eigenvalues in ``[-1e-10 * lambda_1, 0)`` are clamped to zero so that
    covariances assembled in floating point stay PSD.
    """
    S = require_symmetric(S)
    eigenvalues, vectors = np.linalg.eigh(S)
    eigenvalues, vectors = _canonical_order(eigenvalues, vectors)
    lam1 = eigenvalues[0] if eigenvalues.size else 0.0
    if lam1 > 0:
        tiny = eigenvalues < 0
        if np.any(eigenvalues < -EIG_CLAMP_RTOL * lam1):
            # Genuinely indefinite input: keep the spectrum as computed.
            tiny = (eigenvalues < 0) & (eigenvalues >= -EIG_CLAMP_RTOL * lam1)
        eigenvalues = eigenvalues.copy()
        eigenvalues[tiny] = 0.0
        eigenvalues, vectors = _canonical_order(eigenvalues, vectors)
    return SpectralDecomposition(eigenvalues, vectors, S.shape[0])


def decompose_from_rows(rows: np.ndarray) -> SpectralDecomposition:
    """Decomposition of ``empirical_covariance(rows)`` without forming it.

    Uses the SVD of the centered row matrix, so the cost is O(m^2 p)
    instead of O(p^3); only the min(m, p) possibly-nonzero eigenpairs are
    stored.  Agrees with ``spectral_decompose(empirical_covariance(rows))``
    on the nonzero part of the spectrum.
    """
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[0] < 1:
        raise ValueError("decompose_from_rows needs a nonempty 2-D row matrix")
    m, p = rows.shape
    centered = rows - rows.mean(axis=0)
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    eigenvalues = svals**2 / m
    eigenvalues, vectors = _canonical_order(eigenvalues, vt.T)
    return SpectralDecomposition(eigenvalues, vectors, p)


def _check_k(dec: SpectralDecomposition, k: int) -> int:
    k = int(k)
    if not 1 <= k <= dec.source_dim:
        raise ValueError(f"truncation level k={k} out of range [1:{dec.source_dim}]")
    return k


def truncate(dec: SpectralDecomposition, k: int):
    """Split into the rank-k head ``sum_{j<=k} lambda_j v_j v_j^T`` and the tail."""
    k = _check_k(dec, k)
    ks = min(k, dec.rank_stored)
    Vh = dec.eigenvectors[:, :ks]
    head = (Vh * dec.eigenvalues[:ks]) @ Vh.T
    Vt = dec.eigenvectors[:, ks:]
    tail = (Vt * dec.eigenvalues[ks:]) @ Vt.T
    return head, tail


def pseudoinverse_truncated(
    dec: SpectralDecomposition, k: int, tol: float = DEFAULT_RANK_RTOL
) -> np.ndarray:
    """Moore-Penrose pseudoinverse of the rank-k head.

    Eigenvalues at or below ``tol * lambda_1`` are treated as exactly zero.
    """
    if tol < 0:
        raise ValueError("tol must be non-negative")
    k = _check_k(dec, k)
    lam, V = leading_inverse_eigenvalues(dec, k, tol)
    return (V * lam) @ V.T


def leading_inverse_eigenvalues(
    dec: SpectralDecomposition, k: int, tol: float = DEFAULT_RANK_RTOL
):
    """Inverse eigenvalues and vectors of the rank-k head above the cutoff.

    Returns ``(1/lambda_j, v_j)`` for ``j <= k`` with ``lambda_j > tol *
    lambda_1``; the spectral form of ``pseudoinverse_truncated`` that the
    priors and the approximator consume directly.
    """
    k = _check_k(dec, k)
    ks = min(k, dec.rank_stored)
    lam = dec.eigenvalues[:ks]
    lam1 = dec.eigenvalues[0] if dec.rank_stored else 0.0
    keep = lam > tol * lam1
    return 1.0 / lam[keep], dec.eigenvectors[:, :ks][:, keep]


def effective_rank(S: np.ndarray) -> float:
    """Trace over the top eigenvalue, a decay-sensitive complexity measure."""
    S = require_symmetric(S)
    lam1 = float(np.linalg.eigvalsh(S)[-1])
    if lam1 <= 0:
        raise ValueError("effective rank is undefined for a matrix with lambda_1 <= 0")
    return float(np.trace(S)) / lam1
