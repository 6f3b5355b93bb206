"""Prior densities, the k-prior and the two samplers."""

import math

import numpy as np
import pytest
from scipy import integrate, stats

from specreg.linalg import spectral_decompose
from specreg.priors import (
    ConfigurationError,
    PriorConfig,
    default_truncation_penalty,
    log_prior_sigma2,
    log_prior_theta_unnorm,
    prior_k_logweights,
    sample_inverse_gaussian,
    sample_prior,
    sample_prior_theta_coefficients,
)


@pytest.fixture
def diag_dec():
    return spectral_decompose(np.diag([4.0, 2.0, 1.0, 0.5]))


class TestPriorConfig:
    def test_bad_support(self):
        with pytest.raises(ValueError):
            PriorConfig(L_kappa=3, U_kappa=2)
        with pytest.raises(ValueError):
            PriorConfig(L_kappa=0, U_kappa=2)

    def test_bad_scalars(self):
        with pytest.raises(ValueError):
            PriorConfig(R=0.0)
        with pytest.raises(ValueError):
            PriorConfig(eta=-1.0)

    def test_rejects_increasing_penalty(self):
        with pytest.raises(ValueError, match="non-increasing"):
            PriorConfig(L_kappa=1, U_kappa=3, f=lambda k: float(k))

    def test_support_and_check(self):
        cfg = PriorConfig(L_kappa=2, U_kappa=5)
        assert list(cfg.support) == [2, 3, 4, 5]
        assert cfg.check_k(3) == 3
        with pytest.raises(ValueError):
            cfg.check_k(6)


class TestThetaLogDensity:
    def test_quadratic_form_on_span(self, diag_dec):
        cfg = PriorConfig(L_kappa=2, U_kappa=2)
        theta = np.array([3.0, -1.0, 0.0, 0.0])
        # Coefficients sit on the first two axes: -(9/4 + 1/2).
        got = log_prior_theta_unnorm(theta, diag_dec, 2, cfg)
        assert got == pytest.approx(-(9.0 / 4.0 + 1.0 / 2.0), abs=1e-12)

    def test_off_span_is_minus_inf(self, diag_dec):
        cfg = PriorConfig(L_kappa=2, U_kappa=2)
        theta = np.array([1.0, 0.0, 1.0, 0.0])
        assert log_prior_theta_unnorm(theta, diag_dec, 2, cfg) == -math.inf

    def test_outside_ball_is_minus_inf(self, diag_dec):
        cfg = PriorConfig(L_kappa=1, U_kappa=1, R=2.0)
        theta = np.array([3.0, 0.0, 0.0, 0.0])
        assert log_prior_theta_unnorm(theta, diag_dec, 1, cfg) == -math.inf

    def test_invariant_under_basis_rotation(self):
        rng = np.random.default_rng(0)
        A = rng.standard_normal((6, 6))
        dec = spectral_decompose(A @ A.T)
        cfg = PriorConfig(L_kappa=3, U_kappa=3)
        coeff = rng.standard_normal(3)
        theta = dec.eigenvectors[:, :3] @ coeff
        expected = -np.sum(coeff**2 / dec.eigenvalues[:3])
        assert log_prior_theta_unnorm(theta, dec, 3, cfg) == pytest.approx(expected, rel=1e-10)

    def test_zero_eigendirection_has_no_mass(self):
        dec = spectral_decompose(np.diag([2.0, 0.0]))
        cfg = PriorConfig(L_kappa=2, U_kappa=2)
        assert log_prior_theta_unnorm(np.array([0.0, 1.0]), dec, 2, cfg) == -math.inf
        assert np.isfinite(log_prior_theta_unnorm(np.array([1.0, 0.0]), dec, 2, cfg))


class TestKPrior:
    def test_default_penalty(self):
        assert default_truncation_penalty(3) == -21.0

    def test_normalization(self):
        cfg = PriorConfig(L_kappa=1, U_kappa=6)
        logw = prior_k_logweights(cfg)
        assert sum(math.exp(lw) for _, lw in logw) == pytest.approx(1.0, abs=1e-12)

    def test_monotone_decreasing_mass(self):
        cfg = PriorConfig(L_kappa=1, U_kappa=5)
        probs = [lw for _, lw in prior_k_logweights(cfg)]
        assert all(a > b for a, b in zip(probs, probs[1:]))

    def test_explicit_two_point_oracle(self):
        cfg = PriorConfig(L_kappa=1, U_kappa=2)
        logw = dict(prior_k_logweights(cfg))
        # f(1) = -5, f(2) = -12: p(1) = 1 / (1 + e^{-7}).
        assert math.exp(logw[1]) == pytest.approx(1.0 / (1.0 + math.exp(-7.0)), rel=1e-12)

    def test_custom_flat_penalty(self):
        cfg = PriorConfig(L_kappa=2, U_kappa=4, f=lambda k: 0.0)
        for _, lw in prior_k_logweights(cfg):
            assert lw == pytest.approx(math.log(1.0 / 3.0), abs=1e-12)


class TestSigma2Prior:
    def test_integrates_to_one(self):
        cfg = PriorConfig(eta=1.3, xi=0.7)
        val, err = integrate.quad(
            lambda s: math.exp(log_prior_sigma2(s, cfg)), 1e-9, 200.0, limit=200
        )
        assert val == pytest.approx(1.0, abs=1e-6)

    def test_matches_scipy_invgauss(self):
        # scipy parameterizes invgauss(mu=eta/xi, scale=xi).
        cfg = PriorConfig(eta=2.0, xi=3.0)
        for s in (0.2, 1.0, 2.0, 7.5):
            expected = stats.invgauss.logpdf(s, mu=cfg.eta / cfg.xi, scale=cfg.xi)
            assert log_prior_sigma2(s, cfg) == pytest.approx(expected, rel=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            log_prior_sigma2(0.0, PriorConfig())


class TestInverseGaussianSampler:
    def test_mean_within_one_percent(self):
        rng = np.random.default_rng(20)
        draws = sample_inverse_gaussian(1.0, 1.0, rng, size=10**6)
        assert abs(draws.mean() - 1.0) <= 0.01

    def test_variance_oracle(self):
        # Var = eta^3 / xi.
        rng = np.random.default_rng(21)
        draws = sample_inverse_gaussian(2.0, 5.0, rng, size=10**6)
        assert draws.mean() == pytest.approx(2.0, rel=0.01)
        assert draws.var() == pytest.approx(8.0 / 5.0, rel=0.05)

    def test_ks_against_scipy(self):
        rng = np.random.default_rng(22)
        draws = sample_inverse_gaussian(1.5, 2.5, rng, size=20000)
        _, pvalue = stats.kstest(draws, stats.invgauss(mu=1.5 / 2.5, scale=2.5).cdf)
        assert pvalue > 1e-4

    def test_scalar_mode(self):
        rng = np.random.default_rng(23)
        value = sample_inverse_gaussian(1.0, 1.0, rng)
        assert isinstance(value, float) and value > 0

    def test_rejects_bad_params(self):
        rng = np.random.default_rng(24)
        with pytest.raises(ValueError):
            sample_inverse_gaussian(-1.0, 1.0, rng)


class TestThetaSampler:
    def test_per_direction_variance(self, diag_dec):
        cfg = PriorConfig(L_kappa=3, U_kappa=3)
        rng = np.random.default_rng(30)
        coeff = sample_prior_theta_coefficients(3, diag_dec, cfg, rng, size=10**6)
        target = diag_dec.eigenvalues[:3] / 2.0
        assert np.all(np.abs(coeff.var(axis=0) - target) <= 0.01 * target)

    def test_ball_constraint(self, diag_dec):
        cfg = PriorConfig(L_kappa=2, U_kappa=2, R=1.5)
        rng = np.random.default_rng(31)
        coeff = sample_prior_theta_coefficients(2, diag_dec, cfg, rng, size=5000)
        assert np.linalg.norm(coeff, axis=1).max() <= 1.5

    def test_zero_projection_off_span(self, diag_dec):
        cfg = PriorConfig(L_kappa=2, U_kappa=2)
        rng = np.random.default_rng(32)
        theta, sigma2 = sample_prior(2, diag_dec, cfg, rng)
        off = diag_dec.eigenvectors[:, 2:].T @ theta
        assert np.abs(off).max() <= 1e-10
        assert sigma2 > 0

    def test_tiny_radius_raises(self, diag_dec):
        cfg = PriorConfig(L_kappa=3, U_kappa=3, R=1e-4)
        rng = np.random.default_rng(33)
        with pytest.raises(ConfigurationError, match="acceptance rate"):
            sample_prior_theta_coefficients(3, diag_dec, cfg, rng, size=100)

    def test_needs_positive_eigenvalue(self):
        dec = spectral_decompose(np.diag([1.0, 0.0]))
        cfg = PriorConfig(L_kappa=2, U_kappa=2)
        rng = np.random.default_rng(34)
        with pytest.raises(ValueError, match="lambda_hat_k"):
            sample_prior_theta_coefficients(2, dec, cfg, rng, size=1)

    def test_density_sampler_agreement(self, diag_dec):
        # Every sampled point must have finite log prior density.
        cfg = PriorConfig(L_kappa=2, U_kappa=2)
        rng = np.random.default_rng(35)
        for _ in range(50):
            theta, _ = sample_prior(2, diag_dec, cfg, rng)
            assert np.isfinite(log_prior_theta_unnorm(theta, diag_dec, 2, cfg))
