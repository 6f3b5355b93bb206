"""Experiment harness: grids, CSV outputs, manifests, failure isolation."""

import json
import math

import numpy as np
import pandas as pd
import pytest

from specreg.datagen import Dataset
from specreg.harness import (
    CSV_SCHEMAS,
    RunConfig,
    default_prior,
    ridge_baseline,
    run_experiment,
    write_csv,
)
from specreg.priors import PriorConfig
from specreg.snis import SNISConfig

FAST_SNIS = SNISConfig(num_draws=200, sigma2_mode="fixed", sigma2_value=1.0,
                       proposal_mode="conditional", master_seed=0)


def fast_config(experiment, out, **kw):
    kw.setdefault("n_grid", (10, 14))
    kw.setdefault("seeds", (0, 1))
    kw.setdefault("snis", FAST_SNIS)
    return RunConfig(experiment, output_dir=str(out), **kw)


class TestRunConfig:
    def test_bad_experiment(self):
        with pytest.raises(ValueError):
            RunConfig("bootstrap")

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            RunConfig("risk_histograms", n_grid=())

    def test_sigma2_convention(self):
        # Risk studies integrate sigma^2 over its prior; the overlay holds
        # it fixed because the approximator is built at one noise level.
        assert RunConfig("risk_histograms").snis.sigma2_mode == "prior"
        assert RunConfig("risk_curve").snis.sigma2_mode == "prior"
        assert RunConfig("approx_overlay").snis.sigma2_mode == "fixed"

    def test_explicit_snis_respected(self):
        cfg = RunConfig("risk_histograms", snis=FAST_SNIS)
        assert cfg.snis is FAST_SNIS


class TestDefaultPrior:
    def test_log_rule(self):
        for n in (100, 200, 400):
            prior = default_prior(n)
            assert prior.L_kappa == max(1, math.ceil(math.log(n) / 6.0))
            assert prior.U_kappa == math.ceil(math.log(n))

    def test_grid_values(self):
        assert (default_prior(100).L_kappa, default_prior(100).U_kappa) == (1, 5)
        assert (default_prior(400).L_kappa, default_prior(400).U_kappa) == (1, 6)


class TestRidgeBaseline:
    def test_matches_primal_form(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((6, 15))
        y = rng.standard_normal(6)
        lam = 0.7
        primal = np.linalg.solve(X.T @ X + lam * np.eye(15), X.T @ y)
        dual = ridge_baseline(Dataset(X, y), lam)
        np.testing.assert_allclose(dual, primal, atol=1e-10)

    def test_rejects_nonpositive_lambda(self):
        with pytest.raises(ValueError):
            ridge_baseline(Dataset(np.ones((2, 3)), np.ones(2)), 0.0)


class TestWriteCsv:
    def test_schema_and_repr_floats(self, tmp_path):
        path = tmp_path / "risk.csv"
        write_csv(path, "risk", [("i", 10, 22, 0, "mni", 0.1)])
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(CSV_SCHEMAS["risk"])
        assert lines[1] == "i,10,22,0,mni,0.1"

    def test_row_length_guard(self, tmp_path):
        with pytest.raises(ValueError):
            write_csv(tmp_path / "bad.csv", "tv", [("i", 10, 0, 30)])


class TestRiskHistograms:
    def test_outputs_and_manifest(self, tmp_path):
        cfg = fast_config("risk_histograms", tmp_path)
        manifest = run_experiment(cfg)
        frame = pd.read_csv(tmp_path / "risk.csv")
        assert list(frame.columns) == list(CSV_SCHEMAS["risk"])
        assert len(frame) == 4  # 2 n x 2 seeds
        assert set(frame["estimator"]) == {"spectral_bayes"}
        assert np.isfinite(frame["risk"]).all()
        assert frame["p"].tolist() == [22, 22, 34, 34]
        on_disk = json.loads((tmp_path / "manifest.json").read_text())
        assert on_disk["experiment"] == "risk_histograms"
        assert "risk.csv" in on_disk["file_digests"]
        assert on_disk["failures"] == [] and manifest.failures == []

    def test_byte_determinism(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run_experiment(fast_config("risk_histograms", a))
        run_experiment(fast_config("risk_histograms", b))
        assert (a / "risk.csv").read_bytes() == (b / "risk.csv").read_bytes()

    def test_threads_match_serial(self, tmp_path):
        serial, threaded = tmp_path / "s", tmp_path / "t"
        run_experiment(fast_config("risk_histograms", serial, threads=1))
        run_experiment(fast_config("risk_histograms", threaded, threads=4))
        assert (serial / "risk.csv").read_bytes() == (threaded / "risk.csv").read_bytes()

    def test_theta_star_coupled_across_n(self, tmp_path):
        # The true-parameter stream must not depend on n: the same seed at
        # two n values shares its coefficient prefix.
        from specreg.harness import _build_cell

        cfg = fast_config("risk_histograms", tmp_path)
        _, cov_a, theta_a, _, _ = _build_cell(cfg, 10, seed=0)
        _, cov_b, theta_b, _, _ = _build_cell(cfg, 14, seed=0)
        coeff_a = cov_a.eigenvectors.T @ theta_a
        coeff_b = cov_b.eigenvectors.T @ theta_b
        np.testing.assert_allclose(coeff_a, coeff_b[: coeff_a.size], atol=1e-10)

    def test_failing_cell_is_isolated(self, tmp_path):
        # A prior support beyond the D1 rank breaks every cell at n=10 but
        # the n=14 cells must still be written.
        cfg = fast_config(
            "risk_histograms", tmp_path,
            prior=PriorConfig(L_kappa=1, U_kappa=6),
            n_grid=(10, 14), seeds=(0,),
        )
        manifest = run_experiment(cfg)
        assert [f["n"] for f in manifest.failures] == [10]
        frame = pd.read_csv(tmp_path / "risk.csv")
        assert set(frame["n"]) == {14}


class TestRiskCurve:
    def test_all_estimators(self, tmp_path):
        cfg = fast_config("risk_curve", tmp_path, seeds=(0,))
        run_experiment(cfg)
        frame = pd.read_csv(tmp_path / "risk.csv")
        assert set(frame["estimator"]) == {"spectral_bayes", "mni", "ridge"}
        assert len(frame) == 6

    def test_estimator_subset_option(self, tmp_path):
        cfg = fast_config("risk_curve", tmp_path, seeds=(0,),
                          options={"estimators": ["mni"]})
        run_experiment(cfg)
        frame = pd.read_csv(tmp_path / "risk.csv")
        assert set(frame["estimator"]) == {"mni"}

    def test_unknown_estimator_fails_cells(self, tmp_path):
        cfg = fast_config("risk_curve", tmp_path, seeds=(0,),
                          options={"estimators": ["lasso"]})
        manifest = run_experiment(cfg)
        assert len(manifest.failures) == 2


class TestApproxOverlay:
    def test_outputs(self, tmp_path):
        cfg = fast_config("approx_overlay", tmp_path, options={"bins": 10})
        run_experiment(cfg)
        tv = pd.read_csv(tmp_path / "tv.csv")
        assert list(tv.columns) == list(CSV_SCHEMAS["tv"])
        assert len(tv) == 4
        assert ((tv["tv"] >= 0) & (tv["tv"] <= 1)).all()
        assert (tv["bins"] == 10).all()
        for n in (10, 14):
            samples = pd.read_csv(tmp_path / f"samples_n{n}.csv")
            assert list(samples.columns) == list(CSV_SCHEMAS["samples"])
            assert set(samples["source"]) == {"snis", "approx"}
            # Samples are stored for the first seed only.
            assert len(samples) == 2 * FAST_SNIS.num_draws


class TestAssumptionsCheck:
    def test_exponential_report(self, tmp_path):
        cfg = RunConfig("assumptions_check", n_grid=(10**4, 10**5),
                        output_dir=str(tmp_path),
                        options={"example": "exponential", "tau": 2.0, "m": 1.0 / 3.0})
        run_experiment(cfg)
        report = json.loads((tmp_path / "report.json").read_text())
        assert set(report) == {"10000", "100000"}
        for block in report.values():
            ids = [rec["condition_id"] for rec in block["conditions"]]
            assert ids == ["i", "ii", "iii", "iv-a", "iv-b"]

    def test_polynomial_report(self, tmp_path):
        cfg = RunConfig("assumptions_check", n_grid=(10**4,), output_dir=str(tmp_path),
                        options={"example": "polynomial", "alpha": 8.0})
        run_experiment(cfg)
        report = json.loads((tmp_path / "report.json").read_text())
        assert "10000" in report


@pytest.fixture
def fixture_csv(tmp_path):
    rng = np.random.default_rng(0)
    n = 60
    X = rng.standard_normal((n, 6))
    y = 5.0 + X @ np.array([1.0, -2.0, 0.5, 0.0, 0.0, 1.5]) + 0.1 * rng.standard_normal(n)
    frame = pd.DataFrame(X, columns=[f"x{i}" for i in range(6)])
    frame["y"] = y
    frame.loc[3, "x2"] = np.nan  # one holed column
    path = tmp_path / "data.csv"
    frame.to_csv(path, index=False)
    return path


class TestRealData:
    def test_report(self, tmp_path, fixture_csv):
        cfg = RunConfig(
            "real_data", output_dir=str(tmp_path / "out"), snis=FAST_SNIS,
            prior=PriorConfig(L_kappa=1, U_kappa=3),
            options={"csv_path": str(fixture_csv), "response_column": "y"},
        )
        run_experiment(cfg)
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["provenance"]["dropped_missing_columns"] == 1
        assert report["n_train"] + report["n_test"] == 60
        assert math.isfinite(report["mape_train"])
        assert math.isfinite(report["mape_test"])

    def test_missing_options(self, tmp_path):
        cfg = RunConfig("real_data", output_dir=str(tmp_path))
        with pytest.raises(ValueError, match="csv_path"):
            run_experiment(cfg)

    def test_train_fraction(self, tmp_path, fixture_csv):
        cfg = RunConfig(
            "real_data", output_dir=str(tmp_path / "out"), snis=FAST_SNIS,
            prior=PriorConfig(L_kappa=1, U_kappa=2),
            options={"csv_path": str(fixture_csv), "response_column": "y",
                     "train_fraction": 0.75},
        )
        run_experiment(cfg)
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["n_train"] == 44  # 45 rounded down to even
