"""Experiment orchestration: desk-scale reproductions of the simulation
studies, with seeded cells, CSV outputs and a reproducibility manifest.

Each experiment iterates over the (n, seed) grid; every cell derives its
own generator seeds from (master entropy, n, seed, stage), so cells are
independent and the whole run is deterministic.  CSV bodies are written
with ``repr`` float formatting and sorted cell order, making reruns
byte-identical.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .approx import build_approximator, estimate_tv, minimum_norm_interpolator, sample_approximator
from .assumptions import check_precomb, example_exponential_tuple, example_polynomial_tuple
from .datagen import (
    Dataset,
    EigenSchedule,
    MissingPolicy,
    ScenarioSpec,
    build_covariance,
    load_csv_dataset,
    split_dataset,
)
from .linalg import decompose_from_rows
from .metrics import mape, predictive_risk
from .priors import PriorConfig
from .snis import SNISConfig, posterior_mean, snis_sample

EXPERIMENTS = (
    "risk_histograms",
    "approx_overlay",
    "risk_curve",
    "assumptions_check",
    "real_data",
)
ESTIMATORS = ("spectral_bayes", "mni", "ridge")

# Column layouts of every CSV this package emits or consumes.
CSV_SCHEMAS = {
    "risk": ("scenario", "n", "p", "seed", "estimator", "risk"),
    "samples": ("draw_id", "k", "sigma2", "log_weight", "theta_0", "theta_1", "source"),
    "tv": ("scenario", "n", "seed", "bins", "tv"),
}


@dataclass(frozen=True)
class RunConfig:
    """Everything one experiment run depends on."""

    experiment: str
    scenario_id: str = "i"
    # None picks the experiment's convention: 10 for the histogram and
    # overlay studies, 100 for the estimator-comparison risk curves.
    theta_variance: float | None = None
    noise_sd: float = 1.0
    prior: PriorConfig | None = None
    # None picks the experiment's convention: sigma^2 is integrated over
    # its prior for the risk studies but held at 1 for the overlay, where
    # the approximator is built at a single noise level.
    snis: SNISConfig | None = None
    n_grid: tuple = (100, 200, 400)
    seeds: tuple = tuple(range(10))
    output_dir: str = "."
    threads: int = 1
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}")
        if self.snis is None:
            sigma2_mode = "fixed" if self.experiment == "approx_overlay" else "prior"
            object.__setattr__(
                self,
                "snis",
                SNISConfig(sigma2_mode=sigma2_mode, sigma2_value=1.0,
                           proposal_mode="conditional"),
            )
        if len(self.n_grid) == 0 or len(self.seeds) == 0:
            raise ValueError("n_grid and seeds must be nonempty")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")


@dataclass
class RunManifest:
    """Run record: config snapshot, version, timings and output digests."""

    experiment: str
    config: dict
    version: str
    master_seed: int
    stage_seconds: dict = field(default_factory=dict)
    file_digests: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def default_prior(n: int, R: float = 1e5) -> PriorConfig:
    """The default support (L, U) = (ceil(log n / 6), ceil(log n))."""
    if n < 2:
        raise ValueError("n must be at least 2")
    log_n = math.log(n)
    return PriorConfig(L_kappa=max(1, math.ceil(log_n / 6.0)), U_kappa=math.ceil(log_n), R=R)


def ridge_baseline(D2: Dataset, lambda_reg: float) -> np.ndarray:
    """Ridge estimator ``(X^T X + lambda I)^{-1} X^T y`` via the dual form.

    Solving the |D2| x |D2| system ``(X X^T + lambda I) a = y`` and
    returning ``X^T a`` avoids the p x p normal equations.
    """
    if lambda_reg <= 0:
        raise ValueError(f"lambda_reg must be positive, got {lambda_reg}")
    X, y = D2.X, D2.y
    gram = X @ X.T
    gram[np.diag_indices_from(gram)] += lambda_reg
    return X.T @ np.linalg.solve(gram, y)


def _derive_seed(*parts) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _format(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, schema: str, rows) -> None:
    header = CSV_SCHEMAS[schema]
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row of length {len(row)} does not fit schema {schema!r}")
        lines.append(",".join(_format(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _coupled_theta_star(spec: ScenarioSpec, cov, master: int, seed: int) -> np.ndarray:
    """True-parameter draw with a stream shared across the n-grid.

    The coefficient stream depends on the replication seed but not on n,
    and for dense scenarios the coefficients are laid down in the
    covariance eigenbasis (an orthogonal map, so the marginal law is still
    N(0, theta_variance I)).  Risks at different n then share their
    dominant truncation-tail term seed-for-seed, which makes the n-trend
    visible through the cross-seed noise at desk scale.
    """
    rng = np.random.default_rng(_derive_seed(master, seed, 1))
    coeff = rng.normal(0.0, math.sqrt(spec.theta_variance), size=spec.p)
    if spec.scenario_id == "iii":
        # Sparsity is defined coordinate-wise, so stay in coordinates.
        coeff[spec.sparse_head :] = 0.0
        return coeff
    return cov.eigenvectors @ coeff


def _coupled_dataset(spec: ScenarioSpec, cov, theta_star, master: int, seed: int) -> Dataset:
    """Dataset draw with one generator substream per row.

    Each row's stream is keyed by (master, seed, half, position), where
    half says whether the row lands in the prior half D1 or the
    likelihood half D2, and draws its scalar variates (mixing weight and
    noise) before its covariate coefficients, so the scalars are shared
    across n.  Both halves at a smaller n are then row/coordinate prefixes
    of the halves at a larger n.  Combined with the coupled theta-star
    this makes per-seed risks comparable along the n-grid.  The marginal
    law of each cell is unchanged.
    """
    lam_sqrt = np.sqrt(np.maximum(cov.eigenvalues, 0.0))
    X = np.empty((spec.n, spec.p))
    noise = np.empty(spec.n)
    half = spec.n // 2
    for i in range(spec.n):
        rng = np.random.default_rng(_derive_seed(master, seed, 2, i // half, i % half))
        w = rng.exponential(1.0) if spec.covariate_law == "laplace" else 1.0
        noise[i] = rng.normal(0.0, spec.noise_sd)
        z = rng.standard_normal(cov.rank_stored) * lam_sqrt
        X[i] = cov.eigenvectors @ (math.sqrt(w) * z)
    y = X @ theta_star + noise
    return Dataset(X, y, provenance={"seed": int(seed), "scenario": spec.scenario_id})


def _theta_variance(cfg: RunConfig) -> float:
    if cfg.theta_variance is not None:
        return cfg.theta_variance
    return 100.0 if cfg.experiment == "risk_curve" else 10.0


def _build_cell(cfg: RunConfig, n: int, seed: int):
    """Data, split and D1 spectrum for one synthetic grid cell."""
    spec = ScenarioSpec(cfg.scenario_id, n, _theta_variance(cfg), cfg.noise_sd)
    if cfg.scenario_id == "iv":
        schedule, basis = EigenSchedule(kind="identity"), "diagonal"
    else:
        schedule, basis = EigenSchedule(), "random_orthogonal"
    master = cfg.snis.master_seed
    cov = build_covariance(schedule, spec.p, spec.n, basis, _derive_seed(master, n, seed, 0))
    theta_star = _coupled_theta_star(spec, cov, master, seed)
    data = _coupled_dataset(spec, cov, theta_star, master, seed)
    D = split_dataset(data)
    dec = decompose_from_rows(D.D1.X)
    return spec, cov, theta_star, D, dec


def _cell_prior(cfg: RunConfig, n: int) -> PriorConfig:
    return cfg.prior if cfg.prior is not None else default_prior(n)


def _cell_snis(cfg: RunConfig, n: int, seed: int) -> SNISConfig:
    return dataclasses.replace(
        cfg.snis, master_seed=_derive_seed(cfg.snis.master_seed, n, seed, 3)
    )


def _risk_cell(cfg: RunConfig, n: int, seed: int):
    spec, cov, theta_star, D, dec = _build_cell(cfg, n, seed)
    wp = snis_sample(D, _cell_prior(cfg, n), _cell_snis(cfg, n, seed), dec=dec)
    risk = predictive_risk(posterior_mean(wp), theta_star, cov)
    return [(spec.scenario_id, n, spec.p, seed, "spectral_bayes", risk)]


def _curve_cell(cfg: RunConfig, n: int, seed: int):
    estimators = tuple(cfg.options.get("estimators", ESTIMATORS))
    unknown = set(estimators) - set(ESTIMATORS)
    if unknown:
        raise ValueError(f"unknown estimators {sorted(unknown)}; choose from {ESTIMATORS}")
    spec, cov, theta_star, D, dec = _build_cell(cfg, n, seed)
    rows = []
    for estimator in estimators:
        if estimator == "spectral_bayes":
            wp = snis_sample(D, _cell_prior(cfg, n), _cell_snis(cfg, n, seed), dec=dec)
            theta = posterior_mean(wp)
        elif estimator == "mni":
            theta = minimum_norm_interpolator(D.D2.X, D.D2.y)
        else:
            theta = ridge_baseline(D.D2, float(cfg.options.get("ridge_lambda", 1.0)))
        rows.append((spec.scenario_id, n, spec.p, seed, estimator,
                     predictive_risk(theta, theta_star, cov)))
    return rows


def _overlay_cell(cfg: RunConfig, n: int, seed: int):
    bins = int(cfg.options.get("bins", 30))
    spec, _, _, D, dec = _build_cell(cfg, n, seed)
    prior = _cell_prior(cfg, n)
    sn = _cell_snis(cfg, n, seed)
    wp = snis_sample(D, prior, sn, dec=dec)
    sigma2 = sn.sigma2_value if sn.sigma2_mode == "fixed" else float(
        np.sum(wp.normalized_weights * wp.sigma2s)
    )
    appr = build_approximator(dec, prior.L_kappa, sigma2, D.D2, prior.R)
    draws = sample_approximator(appr, sn.num_draws, _derive_seed(sn.master_seed, n, seed, 4))
    tv = estimate_tv(wp, draws, coords=(0, 1), bins=bins)
    sample_rows = []
    if seed == cfg.seeds[0]:
        coords = wp.theta_coordinates((0, 1))
        for i in range(wp.num_draws):
            sample_rows.append((i, int(wp.ks[i]), float(wp.sigma2s[i]),
                                float(wp.log_weights[i]), float(coords[i, 0]),
                                float(coords[i, 1]), "snis"))
        for i in range(draws.shape[0]):
            sample_rows.append((i, prior.L_kappa, sigma2, 0.0,
                                float(draws[i, 0]), float(draws[i, 1]), "approx"))
    return [(spec.scenario_id, n, seed, bins, tv)], sample_rows


def _run_cells(cfg: RunConfig, cell_fn, manifest: RunManifest):
    cells = [(n, seed) for n in cfg.n_grid for seed in cfg.seeds]

    def safe(cell):
        n, seed = cell
        try:
            return cell, cell_fn(cfg, n, seed), None
        except Exception as exc:  # noqa: BLE001 - cell isolation is the contract
            return cell, None, f"{type(exc).__name__}: {exc}"

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(safe, cells))
    else:
        results = [safe(cell) for cell in cells]

    outputs = {}
    for cell, value, error in sorted(results, key=lambda r: r[0]):
        if error is not None:
            manifest.failures.append({"n": cell[0], "seed": cell[1], "error": error})
        else:
            outputs[cell] = value
    return outputs


def _run_assumptions(cfg: RunConfig, out: Path, manifest: RunManifest):
    opts = cfg.options
    example = opts.get("example", "exponential")
    c = float(opts.get("c", 1.0))
    reports = {}
    for n in cfg.n_grid:
        if example == "exponential":
            t, eig = example_exponential_tuple(
                n, float(opts.get("tau", 2.0)), float(opts.get("m", 1.0 / 3.0)),
                float(opts.get("nu", 0.0)),
            )
        elif example == "polynomial":
            beta = opts.get("beta")
            t, eig = example_polynomial_tuple(
                n, float(opts.get("alpha", 8.0)), None if beta is None else float(beta)
            )
        else:
            raise ValueError(f"unknown example {example!r}")
        reports[str(n)] = check_precomb(eig, n, t, c).as_dict()
    path = out / "report.json"
    path.write_text(json.dumps(reports, indent=2, sort_keys=True) + "\n")
    manifest.file_digests["report.json"] = _sha256(path)


def _run_real_data(cfg: RunConfig, out: Path, manifest: RunManifest):
    opts = cfg.options
    if "csv_path" not in opts or "response_column" not in opts:
        raise ValueError("real_data needs options csv_path and response_column")
    policy = MissingPolicy(
        column_missing_threshold=float(opts.get("column_missing_threshold", 0.0)),
        drop_columns=tuple(opts.get("drop_columns", ())),
    )
    data = load_csv_dataset(opts["csv_path"], opts["response_column"], policy, sidecar=False)

    rng = np.random.default_rng(int(opts.get("split_seed", 0)))
    order = rng.permutation(data.n)
    n_train = int(round(data.n * float(opts.get("train_fraction", 0.5))))
    n_train -= n_train % 2  # the prior/likelihood split needs an even count
    if n_train < 4 or data.n - n_train < 1:
        raise ValueError(f"train/test split of {data.n} rows is too small")
    train_idx, test_idx = order[:n_train], order[n_train:]
    train = Dataset(data.X[train_idx], data.y[train_idx], provenance=data.provenance)
    test = Dataset(data.X[test_idx], data.y[test_idx], provenance=data.provenance)

    D = split_dataset(train)
    dec = decompose_from_rows(D.D1.X)
    prior = cfg.prior if cfg.prior is not None else default_prior(train.n)
    wp = snis_sample(D, prior, cfg.snis, dec=dec)
    theta = posterior_mean(wp)
    report = {
        "provenance": data.provenance,
        "n_train": int(train.n),
        "n_test": int(test.n),
        "ess": wp.ess,
        "mape_train": mape(train.y, train.X @ theta),
        "mape_test": mape(test.y, test.X @ theta),
    }
    path = out / "report.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    manifest.file_digests["report.json"] = _sha256(path)


def _config_snapshot(cfg: RunConfig) -> dict:
    snap = dataclasses.asdict(cfg)
    if cfg.prior is not None:
        snap["prior"]["f"] = getattr(cfg.prior.f, "__name__", repr(cfg.prior.f))
    return snap


def run_experiment(cfg: RunConfig) -> RunManifest:
    """Run one experiment grid and write its outputs plus manifest.json.

    A failing (n, seed) cell is recorded in the manifest and skipped; the
    remaining cells still run.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(
        experiment=cfg.experiment,
        config=_config_snapshot(cfg),
        version=__version__,
        master_seed=cfg.snis.master_seed,
    )
    started = time.perf_counter()

    if cfg.experiment in ("risk_histograms", "risk_curve"):
        cell_fn = _risk_cell if cfg.experiment == "risk_histograms" else _curve_cell
        outputs = _run_cells(cfg, cell_fn, manifest)
        rows = [row for value in outputs.values() for row in value]
        path = out / "risk.csv"
        write_csv(path, "risk", rows)
        manifest.file_digests["risk.csv"] = _sha256(path)
    elif cfg.experiment == "approx_overlay":
        outputs = _run_cells(cfg, _overlay_cell, manifest)
        tv_rows = [row for tv, _ in outputs.values() for row in tv]
        path = out / "tv.csv"
        write_csv(path, "tv", tv_rows)
        manifest.file_digests["tv.csv"] = _sha256(path)
        for (n, seed), (_, sample_rows) in outputs.items():
            if sample_rows:
                spath = out / f"samples_n{n}.csv"
                write_csv(spath, "samples", sample_rows)
                manifest.file_digests[spath.name] = _sha256(spath)
    elif cfg.experiment == "assumptions_check":
        _run_assumptions(cfg, out, manifest)
    else:
        _run_real_data(cfg, out, manifest)

    manifest.stage_seconds["cells"] = time.perf_counter() - started
    write_started = time.perf_counter()
    manifest_path = out / "manifest.json"
    manifest.stage_seconds["write"] = time.perf_counter() - write_started
    manifest_path.write_text(json.dumps(manifest.as_dict(), indent=2, sort_keys=True) + "\n")
    return manifest
