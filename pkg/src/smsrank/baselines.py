"""Comparison rankers: discrete divergences and clustering-quality scores.

Clustering scores take a :class:`~smsrank.softlabel.ClusterPartition` and the
matrix of soft-label vectors it indexes.  ``ORIENTATION`` says whether a
larger value means a better candidate.
"""

import math

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .errors import InfiniteDivergence, InputError, NotNormalized, SupportMismatch

_FLOOR = 1e-12
_LDWC_BLOCK = 2048


def _as_distribution(p, name):
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or not np.isfinite(p).all() or (p < 0).any():
        raise InputError(f"{name} must be a finite nonnegative vector")
    if abs(math.fsum(p) - 1.0) > 1e-9:
        raise NotNormalized(f"{name} sums to {math.fsum(p)!r}, not 1")
    return p


def _pair(p, q):
    p, q = _as_distribution(p, "P"), _as_distribution(q, "Q")
    if p.shape != q.shape:
        raise SupportMismatch(f"supports differ: {p.shape[0]} vs {q.shape[0]}")
    return p, q


def _kl(p, q):
    mask = p > 0
    if (q[mask] == 0).any():
        raise InfiniteDivergence("Q is zero where P has mass")
    return max(0.0, math.fsum(p[mask] * np.log(p[mask] / q[mask])))


def kl_divergence(p, q):
    """KL(P || Q) in nats, with 0 * ln(0 / q) taken as 0."""
    return _kl(*_pair(p, q))


def js_divergence(p, q):
    p, q = _pair(p, q)
    m = 0.5 * (p + q)
    return min(0.5 * _kl(p, m) + 0.5 * _kl(q, m), math.log(2.0))


def _groups(partition, vectors):
    x = np.asarray(vectors, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if partition.m < 2:
        raise InputError("clustering scores need at least two clusters")
    return x, [x[idx] for idx in partition.clusters.values()]


def dbc(partition, vectors):
    """Mean Euclidean distance over unordered pairs of cluster centroids."""
    _, groups = _groups(partition, vectors)
    centroids = np.array([g.mean(axis=0) for g in groups])
    return float(pdist(centroids).mean())


def ldwc(partition, vectors):
    """Largest pairwise distance found inside any single cluster.

    Quadratic in cluster size; distances are scanned in blocks to bound memory.
    """
    _, groups = _groups(partition, vectors)
    best = 0.0
    for g in groups:
        for start in range(0, len(g), _LDWC_BLOCK):
            block = g[start:start + _LDWC_BLOCK]
            best = max(best, float(cdist(block, g[start:]).max()))
    return best


def dbi(partition, vectors):
    """Davies-Bouldin index: mean over clusters of the worst similarity ratio."""
    _, groups = _groups(partition, vectors)
    centroids = np.array([g.mean(axis=0) for g in groups])
    scatter = np.array([np.linalg.norm(g - c, axis=1).mean() for g, c in zip(groups, centroids)])
    sep = cdist(centroids, centroids)
    ratio = (scatter[:, None] + scatter[None, :]) / np.maximum(sep, _FLOOR)
    np.fill_diagonal(ratio, -np.inf)
    return float(ratio.max(axis=1).mean())


def ch(partition, vectors):
    """Calinski-Harabasz score: between/within dispersion ratio."""
    x, groups = _groups(partition, vectors)
    n, m = len(x), len(groups)
    if n <= m:
        raise InputError("Calinski-Harabasz needs more points than clusters")
    overall = x.mean(axis=0)
    between = sum(len(g) * np.sum((g.mean(axis=0) - overall) ** 2) for g in groups)
    within = sum(np.sum((g - g.mean(axis=0)) ** 2) for g in groups)
    return float((between / (m - 1)) / max(within / (n - m), _FLOOR))


CLUSTER_METRICS = {"dbc": dbc, "ldwc": ldwc, "dbi": dbi, "ch": ch}
DIVERGENCES = {"kld": kl_divergence, "jsd": js_divergence}

ORIENTATION = {
    "dbc": True,
    "ldwc": False,
    "dbi": False,
    "ch": True,
    "kld": False,
    "jsd": False,
}
