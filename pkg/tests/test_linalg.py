"""Spectral decomposition, truncation and pseudoinverse properties."""

import numpy as np
import pytest

from specreg.linalg import (
    SpectralDecomposition,
    decompose_from_rows,
    effective_rank,
    empirical_covariance,
    pseudoinverse_truncated,
    require_symmetric,
    spectral_decompose,
    truncate,
)


def random_psd(rng, p, rank=None):
    rank = p if rank is None else rank
    A = rng.standard_normal((p, rank))
    return A @ A.T / rank


class TestEmpiricalCovariance:
    def test_single_row_is_zero(self):
        rows = np.array([[3.0, -1.0, 2.0]])
        assert np.all(empirical_covariance(rows) == 0.0)

    def test_two_rows_closed_form(self):
        # Centered rows are +/- d/2, so the covariance is (d d^T)/4.
        a = np.array([1.0, 2.0])
        b = np.array([3.0, -2.0])
        d = b - a
        expected = np.outer(d, d) / 4.0
        got = empirical_covariance(np.vstack([a, b]))
        np.testing.assert_allclose(got, expected, atol=1e-14)

    def test_matches_definition_oracle(self):
        rng = np.random.default_rng(7)
        rows = rng.standard_normal((13, 5))
        centered = rows - rows.mean(axis=0)
        oracle = sum(np.outer(r, r) for r in centered) / 13
        np.testing.assert_allclose(empirical_covariance(rows), oracle, atol=1e-12)

    def test_psd(self):
        rng = np.random.default_rng(8)
        S = empirical_covariance(rng.standard_normal((20, 6)))
        assert np.linalg.eigvalsh(S).min() >= -1e-12


class TestRequireSymmetric:
    def test_rejects_asymmetric(self):
        M = np.array([[1.0, 2.0], [0.0, 1.0]])
        with pytest.raises(ValueError, match="not symmetric"):
            require_symmetric(M)

    def test_rejects_rectangular(self):
        with pytest.raises(ValueError, match="square"):
            require_symmetric(np.ones((2, 3)))


class TestSpectralDecompose:
    def test_reconstruction_random_psd(self):
        rng = np.random.default_rng(0)
        for trial in range(100):
            p = int(rng.integers(2, 201))
            S = random_psd(rng, p, rank=int(rng.integers(1, p + 1)))
            dec = spectral_decompose(S)
            scale = max(1.0, np.abs(S).max())
            assert np.abs(dec.matrix() - S).max() <= 1e-8 * scale

    def test_eigenvalues_descending_and_clamped(self):
        rng = np.random.default_rng(1)
        dec = spectral_decompose(random_psd(rng, 40, rank=10))
        assert np.all(np.diff(dec.eigenvalues) <= 0)
        assert dec.eigenvalues.min() >= 0.0

    def test_orthonormal_vectors(self):
        rng = np.random.default_rng(2)
        dec = spectral_decompose(random_psd(rng, 15))
        gram = dec.eigenvectors.T @ dec.eigenvectors
        np.testing.assert_allclose(gram, np.eye(15), atol=1e-10)

    def test_known_2x2(self):
        S = np.array([[2.0, 1.0], [1.0, 2.0]])
        dec = spectral_decompose(S)
        np.testing.assert_allclose(dec.eigenvalues, [3.0, 1.0], atol=1e-12)

    def test_eigenvalue_accessor_one_based(self):
        dec = spectral_decompose(np.diag([5.0, 2.0, 1.0]))
        assert dec.eigenvalue(1) == pytest.approx(5.0)
        assert dec.eigenvalue(3) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            dec.eigenvalue(0)


class TestDecomposeFromRows:
    def test_agrees_with_dense_path(self):
        rng = np.random.default_rng(3)
        rows = rng.standard_normal((8, 30))
        economical = decompose_from_rows(rows)
        dense = spectral_decompose(empirical_covariance(rows))
        r = economical.rank_stored
        np.testing.assert_allclose(
            economical.eigenvalues[: r], dense.eigenvalues[: r], atol=1e-10
        )
        np.testing.assert_allclose(economical.matrix(), dense.matrix(), atol=1e-10)

    def test_rank_bounded_by_rows(self):
        rng = np.random.default_rng(4)
        dec = decompose_from_rows(rng.standard_normal((5, 100)))
        # Centering removes one degree of freedom.
        assert np.sum(dec.eigenvalues > 1e-12) <= 4

    def test_padded_eigenvalues(self):
        rng = np.random.default_rng(5)
        dec = decompose_from_rows(rng.standard_normal((4, 9)))
        padded = dec.padded_eigenvalues()
        assert padded.shape == (9,)
        assert np.all(padded[dec.rank_stored :] == 0.0)


class TestTruncate:
    def test_head_plus_tail_reconstructs(self):
        rng = np.random.default_rng(6)
        S = random_psd(rng, 12)
        dec = spectral_decompose(S)
        for k in (1, 5, 12):
            head, tail = truncate(dec, k)
            np.testing.assert_allclose(head + tail, S, atol=1e-10)

    def test_head_rank(self):
        rng = np.random.default_rng(7)
        dec = spectral_decompose(random_psd(rng, 10))
        head, _ = truncate(dec, 3)
        assert np.sum(np.linalg.eigvalsh(head) > 1e-10) == 3

    def test_out_of_range(self):
        dec = spectral_decompose(np.eye(3))
        with pytest.raises(ValueError):
            truncate(dec, 0)
        with pytest.raises(ValueError):
            truncate(dec, 4)


class TestPseudoinverse:
    def test_penrose_conditions(self):
        rng = np.random.default_rng(10)
        for trial in range(100):
            p = int(rng.integers(2, 30))
            dec = spectral_decompose(random_psd(rng, p, rank=int(rng.integers(1, p + 1))))
            k = int(rng.integers(1, p + 1))
            head, _ = truncate(dec, k)
            pinv = pseudoinverse_truncated(dec, k)
            scale = max(1.0, np.abs(head).max())
            assert np.abs(head @ pinv @ head - head).max() <= 1e-10 * scale
            assert np.abs(pinv @ head @ pinv - pinv).max() <= 1e-10 * max(1.0, np.abs(pinv).max())
            assert np.abs((head @ pinv) - (head @ pinv).T).max() <= 1e-10
            assert np.abs((pinv @ head) - (pinv @ head).T).max() <= 1e-10

    def test_diagonal_case(self):
        dec = spectral_decompose(np.diag([4.0, 1.0, 0.0]))
        pinv = pseudoinverse_truncated(dec, 2)
        np.testing.assert_allclose(pinv, np.diag([0.25, 1.0, 0.0]), atol=1e-12)

    def test_matches_numpy_pinv(self):
        rng = np.random.default_rng(11)
        S = random_psd(rng, 9)
        dec = spectral_decompose(S)
        head, _ = truncate(dec, 9)
        np.testing.assert_allclose(
            pseudoinverse_truncated(dec, 9), np.linalg.pinv(head), atol=1e-9
        )


class TestEffectiveRank:
    def test_identity(self):
        assert effective_rank(np.eye(7)) == pytest.approx(7.0)

    def test_spike(self):
        S = np.diag([10.0, 1.0, 1.0])
        assert effective_rank(S) == pytest.approx(1.2)

    def test_rejects_negative_top(self):
        with pytest.raises(ValueError):
            effective_rank(-np.eye(2))


class TestSpectralDecompositionType:
    def test_rejects_increasing_eigenvalues(self):
        with pytest.raises(ValueError):
            SpectralDecomposition(np.array([1.0, 2.0]), np.eye(2), 2)

    def test_economical_storage_matrix(self):
        vecs = np.array([[1.0], [0.0], [0.0]])
        dec = SpectralDecomposition(np.array([2.0]), vecs, 3)
        np.testing.assert_allclose(dec.matrix(), np.diag([2.0, 0.0, 0.0]))
        assert dec.eigenvalue(3) == 0.0
