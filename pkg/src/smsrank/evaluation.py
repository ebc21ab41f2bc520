"""Scoring a ranking against retrained accuracies (or losses)."""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DegenerateX, LengthMismatch, MissingAccuracy, ZeroVariance


@dataclass
class EvalResult:
    pcc: float
    slope: float
    intercept: float
    topk_curve: list
    normalized_metric: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        d["topk_curve"] = [{"k": k, "value": v} for k, v in self.topk_curve]
        return d


def _centered(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"lengths differ: {x.shape} vs {y.shape}")
    if len(x) < 2:
        raise LengthMismatch("need at least two points")
    return x - x.mean(), y - y.mean()


def pearson(x, y):
    """Sample Pearson correlation coefficient."""
    xc, yc = _centered(x, y)
    sxx, syy = math.fsum(xc * xc), math.fsum(yc * yc)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVariance("Pearson correlation is undefined for a constant input")
    r = math.fsum(xc * yc) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def least_squares_line(x, y):
    """(slope, intercept) of the ordinary least-squares line through the points."""
    xc, yc = _centered(x, y)
    sxx = math.fsum(xc * xc)
    if sxx == 0.0:
        raise DegenerateX("all x values are equal; the trendline is vertical")
    slope = math.fsum(xc * yc) / sxx
    intercept = float(np.mean(y)) - slope * float(np.mean(x))
    return slope, intercept


def topk_lowest_accuracy(ranking, accuracies, K=None, lower_is_better=False):
    """Worst ground-truth value among the top-k ranked ids, for k = 1..K.

    With ``lower_is_better`` (losses) the worst value is the highest one.
    """
    K = len(ranking) if K is None else min(K, len(ranking))
    worst = max if lower_is_better else min
    curve, current = [], None
    for k, mid in enumerate(ranking[:K], start=1):
        if mid not in accuracies:
            raise MissingAccuracy(mid)
        acc = accuracies[mid]
        current = acc if current is None else worst(current, acc)
        curve.append((k, current))
    return curve


def minmax_normalize(values):
    """Scale to [0, 1]; an all-equal input maps to 0.5 everywhere."""
    v = np.asarray(values, dtype=float)
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.full(v.shape, 0.5)
    return (v - lo) / (hi - lo)


def evaluate(ids, raw_metric, ranking, accuracies, K=None, lower_is_better=False):
    """Correlation, trendline and top-k curve of a metric against ground truth."""
    for mid in ids:
        if mid not in accuracies:
            raise MissingAccuracy(mid)
    acc = np.array([accuracies[mid] for mid in ids])
    norm = minmax_normalize(raw_metric)
    slope, intercept = least_squares_line(norm, acc)
    return EvalResult(
        pcc=pearson(raw_metric, acc),
        slope=slope,
        intercept=intercept,
        topk_curve=topk_lowest_accuracy(ranking, accuracies, K, lower_is_better),
        normalized_metric={mid: float(n) for mid, n in zip(ids, norm)},
    )
