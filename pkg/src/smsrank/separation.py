"""Separation degree between class Gaussians and its model-level averages."""

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatch, EmptyCandidateSet, SingleBin
from .gaussian import mahalanobis_sq

_BELOW_ONE = math.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class PairSD:
    u: object
    v: object
    value: float


@dataclass(frozen=True)
class ModelSD:
    candidate_id: str
    value: float
    m: int
    pair_values: tuple = field(default=(), repr=False)

    def matrix(self, class_ids):
        """Symmetric m x m table of pair values with a zero diagonal."""
        pos = {c: i for i, c in enumerate(class_ids)}
        out = np.zeros((len(class_ids), len(class_ids)))
        for p in self.pair_values:
            out[pos[p.u], pos[p.v]] = out[pos[p.v], pos[p.u]] = p.value
        return out


def pairwise_sd(gu, gv):
    """Separation degree of two Gaussians, in [0, 1).

    Each determinant-ratio fraction  sqrt|Sv| / (sqrt|Sv| + sqrt|Su| e_v(mu_u))
    equals  logistic(ln sqrt|Sv| - ln sqrt|Su| + mahal_v(mu_u) / 2), which
    stays accurate when e_v(mu_u) underflows.
    """
    if gu.dim != gv.dim:
        raise DimensionMismatch(f"cannot compare fits of dimension {gu.dim} and {gv.dim}")
    a = 0.5 * gv.log_det - 0.5 * gu.log_det
    hv = 0.5 * float(mahalanobis_sq(gv, gu.mu))
    hu = 0.5 * float(mahalanobis_sq(gu, gv.mu))
    # swapping gu/gv negates a exactly and swaps the two terms, so the result is symmetric
    sd = float(expit(a + hv)) + float(expit(-a + hu)) - 1.0
    return min(max(sd, 0.0), _BELOW_ONE)


def _pairs(partition, fits):
    ids = list(partition.clusters) if partition is not None else list(fits)
    return ids, [PairSD(u, v, pairwise_sd(fits[u], fits[v])) for u, v in combinations(ids, 2)]


def model_sd(partition, fits, candidate_id=""):
    """Mean pair separation over all m^2 ordered cluster pairs, diagonal included."""
    ids, pairs = _pairs(partition, fits)
    m = len(ids)
    if m < 1:
        raise EmptyCandidateSet("no clusters")
    total = math.fsum(2.0 * p.value for p in pairs)
    return ModelSD(candidate_id, total / (m * m), m, tuple(pairs))


def regression_sd(partition, fits, p=2.0, candidate_id=""):
    """Pair separations weighted by |u - v|^p over ordered pairs; w_uu = 0."""
    if p < 0:
        raise ValueError(f"norm parameter p must be nonnegative, got {p}")
    ids, pairs = _pairs(partition, fits)
    if len(ids) < 2:
        raise SingleBin("regression separation needs at least two label bins")
    weights = [abs(q.u - q.v) ** p for q in pairs]
    num = math.fsum(2.0 * w * q.value for w, q in zip(weights, pairs))
    den = math.fsum(2.0 * w for w in weights)
    return ModelSD(candidate_id, num / den, len(ids), tuple(pairs))


def rank_candidates(scores, k=None, higher_is_better=True):
    """Candidate ids ordered best-first, ties broken by id; at most ``k`` of them.

    ``scores`` is a mapping id -> value or a sequence of objects with
    ``candidate_id`` and ``value`` attributes (e.g. :class:`ModelSD`).
    """
    if hasattr(scores, "items"):
        items = list(scores.items())
    else:
        items = [(s.candidate_id, s.value) for s in scores]
    if not items:
        raise EmptyCandidateSet("nothing to rank")
    if k is not None and k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    sign = -1.0 if higher_is_better else 1.0
    ordered = sorted(items, key=lambda kv: (sign * kv[1], kv[0]))
    ids = [cid for cid, _ in ordered]
    return ids if k is None else ids[:k]
