"""From logits to the per-class soft-label clusters.

SMS pipeline:   softmax(T) -> drop last coordinate
I-SMS pipeline: random projection -> softmax(T) -> drop last coordinate
"""

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateLabels,
    InvalidDimension,
    InvalidRate,
    LengthMismatch,
    NonFiniteInput,
    NonPositiveTemperature,
    NotNormalized,
    SingletonCluster,
    TooFewSamples,
)


@dataclass(frozen=True)
class ClusterPartition:
    clusters: dict  # class id -> sorted row indices

    @property
    def m(self):
        return len(self.clusters)

    @property
    def class_ids(self):
        return list(self.clusters)


def extended_softmax(z, temperature=1.0):
    """Temperature softmax over the last axis.

    The row maximum is subtracted before exponentiating, so any finite input
    is safe from overflow.
    """
    z = np.asarray(z, dtype=float)
    if not temperature > 0 or not np.isfinite(temperature):
        raise NonPositiveTemperature(f"temperature must be positive, got {temperature}")
    if not np.isfinite(z).all():
        raise NonFiniteInput("logits contain NaN or Inf")
    # a gap wider than the float range becomes -inf and exponentiates to 0
    with np.errstate(over="ignore"):
        shifted = (z - z.max(axis=-1, keepdims=True)) / temperature
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def drop_last_dimension(softlabels, atol=1e-9):
    p = np.asarray(softlabels, dtype=float)
    sums = p.sum(axis=-1)
    bad = np.flatnonzero(np.abs(np.atleast_1d(sums) - 1.0) > atol)
    if len(bad):
        raise NotNormalized(f"row {int(bad[0])} sums to {np.atleast_1d(sums)[bad[0]]!r}, not 1")
    return p[..., :-1]


def derive_seed(run_seed, candidate_id):
    """Stable per-candidate seed; independent of processing order."""
    digest = hashlib.sha256(f"{run_seed}:{candidate_id}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def projection_matrix(n, r, seed):
    """r x n matrix with i.i.d. N(0, 1/n) entries drawn from ``seed``."""
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, 1.0 / np.sqrt(n), size=(r, n))


def random_projection(logits, r, seed=0, matrix=None):
    """Project logits onto ``r`` random directions (no bias, no activation).

    When ``r >= n`` the logits are returned unchanged.  ``matrix`` overrides
    the random draw and is applied as given.
    """
    z = np.asarray(logits, dtype=float)
    if matrix is not None:
        W = np.asarray(matrix, dtype=float)
        if W.shape[1] != z.shape[-1]:
            raise InvalidDimension(f"projection expects {W.shape[1]} inputs, logits have {z.shape[-1]}")
        return z @ W.T
    if int(r) != r or r < 2:
        raise InvalidDimension(f"projection dimension must be an integer >= 2, got {r}")
    n = z.shape[-1]
    if r >= n:
        return z
    return z @ projection_matrix(n, int(r), seed).T


def sample_size(n, rate):
    # round half up; never zero
    return max(1, int(np.floor(rate * n + 0.5)))


def sample_rows(n, rate, seed=0):
    """Sorted indices of a uniform sample without replacement."""
    if not (0.0 < rate <= 1.0):
        raise InvalidRate(f"sample rate must be in (0, 1], got {rate}")
    if n < 1:
        raise InvalidRate(f"cannot sample from {n} rows")
    if rate == 1.0:
        return np.arange(n)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n, size=sample_size(n, rate), replace=False))


def partition_by_label(softlabels, labels):
    """Group row indices by label; classes come out in ascending id order."""
    labels = np.asarray(labels)
    if softlabels is not None and len(softlabels) != len(labels):
        raise LengthMismatch(f"{len(softlabels)} soft labels but {len(labels)} labels")
    classes, inverse = np.unique(labels, return_inverse=True)
    order = np.argsort(inverse, kind="stable")
    bounds = np.cumsum(np.bincount(inverse, minlength=len(classes)))[:-1]
    clusters = {}
    for cls, idx in zip(classes.tolist(), np.split(order, bounds)):
        if len(idx) < 2:
            raise SingletonCluster(cls)
        clusters[cls] = idx
    return ClusterPartition(clusters)


def discretize_labels(values, bins=10):
    """Equal-frequency binning of continuous labels into ids ``0..k-1``.

    Sorted positions are split into ``bins`` runs whose sizes differ by at most
    one; runs of equal values straddling a boundary are moved into the lower
    bin.  Bins emptied that way are dropped and the ids renumbered, so ``k``
    can be smaller than ``bins`` when there are many ties.
    """
    v = np.asarray(values, dtype=float)
    n = len(v)
    if bins < 2:
        raise TooFewSamples(f"need at least 2 bins, got {bins}")
    if n < 2 * bins:
        raise TooFewSamples(f"{n} values cannot fill {bins} bins of 2")
    if not np.isfinite(v).all():
        raise NonFiniteInput("regression labels contain NaN or Inf")
    order = np.argsort(v, kind="stable")
    raw = (np.arange(n) * bins) // n
    sv = v[order]
    # first position of each run of equal values decides the run's bin
    starts = np.concatenate(([True], sv[1:] != sv[:-1]))
    run_id = np.cumsum(starts) - 1
    sorted_bins = raw[np.flatnonzero(starts)][run_id]
    _, sorted_bins = np.unique(sorted_bins, return_inverse=True)
    if sorted_bins.max() < 1:
        raise DegenerateLabels("all regression labels fall into one bin")
    out = np.empty(n, dtype=np.int64)
    out[order] = sorted_bins
    return out


def soft_labels(logits, temperature=2.0, r=None, seed=0, matrix=None):
    """Logits -> (optionally projected) soft labels with the last coordinate dropped.

    Returns the N x d matrix and whether a projection was applied.
    """
    z = np.asarray(logits, dtype=float)
    projected = False
    if matrix is not None or (r is not None and r < z.shape[-1]):
        z = random_projection(z, r, seed=seed, matrix=matrix)
        projected = True
    elif r is not None and (int(r) != r or r < 2):
        raise InvalidDimension(f"projection dimension must be an integer >= 2, got {r}")
    return drop_last_dimension(extended_softmax(z, temperature)), projected
