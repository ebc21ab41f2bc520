import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_spd
from smsrank.errors import DimensionMismatch, NotPositiveDefinite, TooFewPoints
from smsrank.gaussian import fit_gaussian, from_moments, log_density_unnormalized, mahalanobis_sq


def test_unit_square():
    fit = fit_gaussian([(0, 0), (1, 0), (0, 1), (1, 1)], epsilon=0)
    np.testing.assert_allclose(fit.mu, [0.5, 0.5])
    np.testing.assert_allclose(fit.sigma, [[1 / 3, 0], [0, 1 / 3]], atol=1e-15)
    assert fit.count == 4


def test_identical_points_ridge():
    fit = fit_gaussian([(2.0, -1.0), (2.0, -1.0)], epsilon=1e-6)
    np.testing.assert_array_equal(fit.mu, [2.0, -1.0])
    np.testing.assert_allclose(fit.sigma, 1e-6 * np.eye(2), rtol=1e-12)


def test_identical_points_no_ridge():
    with pytest.raises(NotPositiveDefinite):
        fit_gaussian([(2.0, -1.0), (2.0, -1.0)], epsilon=0)


def test_too_few_points():
    with pytest.raises(TooFewPoints):
        fit_gaussian([(1.0, 2.0)])


def test_one_dimensional_input():
    fit = fit_gaussian([1.0, 3.0])
    assert fit.dim == 1
    np.testing.assert_allclose(fit.sigma, [[2.0 + 1e-6]])


def test_more_dims_than_points_is_regularized():
    pts = np.random.default_rng(0).normal(size=(5, 40))
    fit = fit_gaussian(pts)
    assert np.isfinite(fit.log_det)


@settings(max_examples=50)
@given(st.integers(1, 8), st.integers(0, 10_000))
def test_fit_invariants(d, seed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(d + 5, d)) * rng.uniform(0.01, 10, size=d)
    fit = fit_gaussian(pts)
    np.testing.assert_array_equal(fit.sigma, fit.sigma.T)
    np.testing.assert_allclose(fit.chol @ fit.chol.T, fit.sigma, rtol=1e-9, atol=1e-12)
    assert np.allclose(fit.chol, np.tril(fit.chol))
    assert fit.log_det == pytest.approx(2 * np.sum(np.log(np.diag(fit.chol))), abs=1e-9)
    sign, logdet = np.linalg.slogdet(fit.sigma)
    assert sign > 0 and fit.log_det == pytest.approx(logdet, abs=1e-8)
    np.testing.assert_allclose(fit.sigma - 1e-6 * np.eye(d), np.cov(pts, rowvar=False).reshape(d, d),
                               rtol=1e-10, atol=1e-12)


class TestMahalanobis:
    def test_at_mean(self):
        fit = from_moments([1.0, 2.0], [[2.0, 0.3], [0.3, 1.0]])
        assert mahalanobis_sq(fit, [1.0, 2.0]) == 0.0

    def test_identity(self):
        fit = from_moments([0, 0], np.eye(2))
        assert mahalanobis_sq(fit, [3, 4]) == pytest.approx(25, abs=1e-12)

    def test_diagonal(self):
        fit = from_moments([0, 0], np.diag([4.0, 1.0]))
        assert mahalanobis_sq(fit, [2, 0]) == pytest.approx(1, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            mahalanobis_sq(from_moments([0, 0], np.eye(2)), [1, 2, 3])

    def test_batch(self):
        fit = from_moments([0, 0], np.diag([4.0, 1.0]))
        np.testing.assert_allclose(mahalanobis_sq(fit, [[2, 0], [0, 3], [0, 0]]), [1, 9, 0])

    @settings(max_examples=100)
    @given(st.integers(1, 6), st.integers(0, 10_000))
    def test_matches_explicit_inverse(self, d, seed):
        rng = np.random.default_rng(seed)
        sigma = random_spd(rng, d)
        mu, x = rng.normal(size=d), rng.normal(size=d) * 3
        fit = from_moments(mu, sigma)
        diff = x - mu
        expected = diff @ np.linalg.inv(sigma) @ diff
        assert mahalanobis_sq(fit, x) == pytest.approx(expected, rel=1e-8)
        assert mahalanobis_sq(fit, x) >= 0

    @settings(max_examples=100)
    @given(st.integers(1, 6), st.integers(0, 10_000))
    def test_identity_is_euclidean(self, d, seed):
        rng = np.random.default_rng(seed)
        mu, x = rng.normal(size=d), rng.normal(size=d)
        fit = from_moments(mu, np.eye(d))
        assert mahalanobis_sq(fit, x) == pytest.approx(np.sum((x - mu) ** 2), abs=1e-10)

    @settings(max_examples=50)
    @given(st.integers(2, 6), st.integers(0, 10_000))
    def test_axis_permutation(self, d, seed):
        rng = np.random.default_rng(seed)
        pts = rng.normal(size=(d + 4, d))
        x = rng.normal(size=d)
        perm = rng.permutation(d)
        a, b = fit_gaussian(pts), fit_gaussian(pts[:, perm])
        np.testing.assert_allclose(b.mu, a.mu[perm])
        np.testing.assert_allclose(b.sigma, a.sigma[np.ix_(perm, perm)], atol=1e-14)
        assert mahalanobis_sq(b, x[perm]) == pytest.approx(mahalanobis_sq(a, x), rel=1e-9)


class TestLogDensity:
    def test_at_mean(self):
        assert log_density_unnormalized(from_moments([0, 0], np.eye(2)), [0, 0]) == 0.0

    def test_value(self):
        assert log_density_unnormalized(from_moments([0, 0], np.eye(2)), [3, 0]) == pytest.approx(-4.5)

    def test_covariance_scaling(self):
        fit = from_moments([0, 0], 4 * np.eye(2))
        assert log_density_unnormalized(fit, [3, 0]) == pytest.approx(-1.125)
