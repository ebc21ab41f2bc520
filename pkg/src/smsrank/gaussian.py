"""Per-cluster Gaussian fits and the Cholesky-based kernels used on them."""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import DimensionMismatch, NotPositiveDefinite, TooFewPoints

DEFAULT_EPSILON = 1e-6


@dataclass(frozen=True)
class GaussianFit:
    mu: np.ndarray
    sigma: np.ndarray
    chol: np.ndarray  # lower triangular, sigma = chol @ chol.T
    log_det: float
    count: int

    @property
    def dim(self):
        return self.mu.shape[0]


def from_moments(mu, sigma, count=2):
    """Build a fit directly from a mean and an SPD covariance."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    if sigma.shape != (mu.shape[0], mu.shape[0]):
        raise DimensionMismatch(f"mean has dimension {mu.shape[0]}, covariance is {sigma.shape}")
    sigma = 0.5 * (sigma + sigma.T)
    try:
        chol = linalg.cholesky(sigma, lower=True)
    except linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"covariance is not positive definite: {exc}") from exc
    diag = np.diag(chol)
    if not (diag > 0).all() or not np.isfinite(diag).all():
        raise NotPositiveDefinite("covariance is not positive definite")
    log_det = 2.0 * float(np.sum(np.log(diag)))
    return GaussianFit(mu, sigma, chol, log_det, int(count))


def fit_gaussian(points, epsilon=DEFAULT_EPSILON):
    """Mean and ridge-regularized sample covariance (divisor c - 1) of ``points``.

    Parameters
    ----------
    points : array_like, shape (c, d)
        Cluster members, one per row.  A 1-D array is read as c points in
        one dimension.
    epsilon : float
        Added to the covariance diagonal.  With ``epsilon = 0`` a singular
        scatter raises :class:`NotPositiveDefinite`.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    c = x.shape[0]
    if c < 2:
        raise TooFewPoints(f"need at least 2 points to fit a Gaussian, got {c}")
    if epsilon < 0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    mu = x.mean(axis=0)
    xc = x - mu
    sigma = xc.T @ xc / (c - 1)
    sigma[np.diag_indices_from(sigma)] += epsilon
    return from_moments(mu, sigma, c)


def mahalanobis_sq(fit, x):
    """(x - mu)^T sigma^-1 (x - mu) via a triangular solve against the Cholesky factor.

    ``x`` may be a single d-vector or an (k, d) batch.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (fit.dim,):
        raise DimensionMismatch(f"point has dimension {x.shape[-1:]}, fit has {fit.dim}")
    diff = (x - fit.mu).T
    y = linalg.solve_triangular(fit.chol, diff, lower=True, check_finite=False)
    return np.sum(y * y, axis=0)


def log_density_unnormalized(fit, x):
    """ln of exp(-mahalanobis/2); normalizing constants are left out."""
    return -0.5 * mahalanobis_sq(fit, x)
