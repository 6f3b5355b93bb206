"""Synthetic data generation and CSV ingestion.

Covariances are built directly in spectral form from an eigenvalue
schedule; datasets are drawn per scenario with independent, seeded
generator streams so every cell of an experiment grid is reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .linalg import SpectralDecomposition

SCENARIOS = ("i", "ii", "iii", "iv")
COVARIATE_LAWS = ("gaussian", "laplace", "identity_gaussian")


@dataclass(frozen=True)
class EigenSchedule:
    """Eigenvalue schedule for the synthetic covariance.

    ``exponential_floor`` is ``scale * exp(-j * rate) + n * exp(-sqrt(n)) / p``,
    ``polynomial`` is ``j ** -rate``, ``identity`` is all ones.
    """

    kind: str = "exponential_floor"
    scale: float = 10.0
    rate: float = 1.0 / 8.0

    def eigenvalues(self, p: int, n: int) -> np.ndarray:
        if p < 1:
            raise ValueError("dimension p must be positive")
        j = np.arange(1, p + 1, dtype=float)
        if self.kind == "exponential_floor":
            floor = n * math.exp(-math.sqrt(n)) / p
            return self.scale * np.exp(-j * self.rate) + floor
        if self.kind == "polynomial":
            return self.scale * j**-self.rate
        if self.kind == "identity":
            return np.ones(p)
        raise ValueError(f"unknown eigenvalue schedule kind: {self.kind!r}")


@dataclass(frozen=True)
class ScenarioSpec:
    """One synthetic scenario: sample size, dimension rule and laws."""

    scenario_id: str = "i"
    n: int = 100
    theta_variance: float = 100.0
    noise_sd: float = 1.0

    def __post_init__(self):
        if self.scenario_id not in SCENARIOS:
            raise ValueError(f"scenario_id must be one of {SCENARIOS}")
        if self.n < 2 or self.n % 2 != 0:
            raise ValueError("n must be a positive even integer")
        if self.theta_variance < 0:
            raise ValueError("theta_variance must be non-negative")
        if self.noise_sd <= 0:
            raise ValueError("noise_sd must be positive")

    @property
    def p(self) -> int:
        """Dimension rule p = ceil(n^(4/3))."""
        return int(math.ceil(self.n ** (4.0 / 3.0) - 1e-9))

    @property
    def covariate_law(self) -> str:
        return {"i": "gaussian", "ii": "laplace", "iii": "gaussian", "iv": "identity_gaussian"}[
            self.scenario_id
        ]

    @property
    def sparse_head(self) -> int:
        """Number of nonzero leading coordinates in scenario (iii)."""
        return int(math.ceil(self.p / 3.0)) if self.scenario_id == "iii" else self.p


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X and y must have the same number of rows")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class SplitDataset:
    """First-half / second-half split; D1 builds the prior, D2 the likelihood."""

    D1: Dataset
    D2: Dataset


def build_covariance(
    schedule: EigenSchedule,
    p: int,
    n: int,
    basis: str = "random_orthogonal",
    seed: int = 0,
) -> SpectralDecomposition:
    """Covariance with the scheduled spectrum in a chosen eigenbasis.

    The random orthogonal basis is the Q factor of a seeded Gaussian
    matrix with the R diagonal forced positive, so it is deterministic
    given the seed.
    """
    if p < 1:
        raise ValueError("dimension p must be positive")
    if n < 1:
        raise ValueError("sample size n must be positive")
    eigenvalues = schedule.eigenvalues(p, n)
    if basis == "diagonal":
        vectors = np.eye(p)
    elif basis == "random_orthogonal":
        rng = np.random.default_rng(seed)
        q, r = np.linalg.qr(rng.standard_normal((p, p)))
        vectors = q * np.sign(np.diag(r))
    else:
        raise ValueError(f"basis must be 'diagonal' or 'random_orthogonal', got {basis!r}")
    return SpectralDecomposition(eigenvalues, vectors, p)


def sample_theta_star(spec: ScenarioSpec, seed: int) -> np.ndarray:
    """True parameter draw; scenario (iii) zeroes everything past the head."""
    rng = np.random.default_rng(seed)
    theta = rng.normal(0.0, math.sqrt(spec.theta_variance), size=spec.p)
    if spec.scenario_id == "iii":
        theta[spec.sparse_head :] = 0.0
    return theta


def sample_dataset(
    spec: ScenarioSpec,
    cov: SpectralDecomposition,
    theta_star: np.ndarray,
    seed: int,
) -> Dataset:
    """Draw (X, y) for a scenario.

    Gaussian covariates are ``Sigma^{1/2} z``; Laplace covariates use the
    elliptical scale mixture ``sqrt(W) Sigma^{1/2} z`` with W ~
    Exponential(1), which has covariance exactly Sigma.
    """
    if cov.source_dim != spec.p or theta_star.shape != (spec.p,):
        raise ValueError(
            f"dimension mismatch: spec p={spec.p}, cov dim={cov.source_dim}, "
            f"theta shape={theta_star.shape}"
        )
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((spec.n, cov.rank_stored))
    X = (z * np.sqrt(np.maximum(cov.eigenvalues, 0.0))) @ cov.eigenvectors.T
    if spec.covariate_law == "laplace":
        w = rng.exponential(1.0, size=spec.n)
        X = X * np.sqrt(w)[:, None]
    noise = rng.normal(0.0, spec.noise_sd, size=spec.n)
    y = X @ theta_star + noise
    return Dataset(X, y, provenance={"seed": int(seed), "scenario": spec.scenario_id})


def split_dataset(d: Dataset) -> SplitDataset:
    """Split into the first and last n/2 rows, order preserved."""
    if d.n % 2 != 0:
        raise ValueError("split_dataset requires an even number of rows; drop one explicitly")
    half = d.n // 2
    return SplitDataset(
        D1=Dataset(d.X[:half], d.y[:half], provenance=d.provenance),
        D2=Dataset(d.X[half:], d.y[half:], provenance=d.provenance),
    )


@dataclass(frozen=True)
class MissingPolicy:
    """Two-stage cleansing: drop leaky columns, then columns with too many
    missing values, then any row that still has one.

    ``column_missing_threshold`` is the missing fraction at or above which a
    column is dropped; the default 0 drops every column with a single hole.
    """

    column_missing_threshold: float = 0.0
    drop_columns: tuple = ()


def load_csv_dataset(
    path,
    response_column: str,
    missing_policy: MissingPolicy | None = None,
    sidecar: bool = False,
) -> Dataset:
    """Read a header-rowed CSV into a clean numeric Dataset.

    Raises descriptive errors for a missing response column, non-numeric
    residue after cleansing, or an empty result.  Provenance records how
    many columns and rows the policy removed; with ``sidecar=True`` it is
    also written next to the input as ``<name>.provenance.json``.
    """
    policy = missing_policy or MissingPolicy()
    path = Path(path)
    frame = pd.read_csv(path)
    if response_column not in frame.columns:
        raise ValueError(
            f"response column {response_column!r} not found in {path.name} "
            f"(columns: {list(frame.columns)[:8]}...)"
        )
    y_raw = frame[response_column]
    features = frame.drop(columns=[response_column])

    dropped_named = [c for c in policy.drop_columns if c in features.columns]
    features = features.drop(columns=dropped_named)

    n_rows = len(frame)
    missing_frac = features.isna().sum(axis=0) / max(n_rows, 1)
    threshold = policy.column_missing_threshold
    if threshold <= 0:
        dropped_missing = features.columns[missing_frac > 0]
    else:
        dropped_missing = features.columns[missing_frac >= threshold]
    features = features.drop(columns=list(dropped_missing))

    keep_rows = ~(features.isna().any(axis=1) | y_raw.isna())
    features = features.loc[keep_rows]
    y_raw = y_raw.loc[keep_rows]
    if len(features) == 0 or features.shape[1] == 0:
        raise ValueError(f"cleansing left an empty dataset for {path.name}")

    try:
        X = features.to_numpy(dtype=float)
        y = y_raw.to_numpy(dtype=float)
    except (TypeError, ValueError) as exc:
        bad = [c for c in features.columns if not pd.api.types.is_numeric_dtype(features[c])]
        raise ValueError(
            f"non-numeric columns remain after cleansing: {bad[:8]}"
        ) from exc

    provenance = {
        "path": str(path),
        "response_column": response_column,
        "dropped_named_columns": len(dropped_named),
        "dropped_missing_columns": int(len(dropped_missing)),
        "dropped_rows": int(n_rows - len(features)),
        "rows": int(len(features)),
        "columns": int(features.shape[1]),
    }
    if sidecar:
        sidecar_path = path.with_suffix(path.suffix + ".provenance.json")
        sidecar_path.write_text(json.dumps(provenance, indent=2, sort_keys=True))
    return Dataset(X, y, provenance=provenance)
