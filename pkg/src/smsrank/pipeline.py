"""End-to-end ranking runs over a model database."""

import csv
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import baselines, dataio, evaluation, softlabel
from .errors import CandidateFailure, InputError, SMSError
from .gaussian import DEFAULT_EPSILON, fit_gaussian
from .modeldb import open_database
from .separation import model_sd, rank_candidates, regression_sd

log = logging.getLogger(__name__)

METRICS = ("sms", "isms", "sms-regression", "dbc", "ldwc", "dbi", "ch", "kld", "jsd")
SD_METRICS = ("sms", "isms", "sms-regression")
HIGHER_IS_BETTER = {"sms": True, "isms": True, "sms-regression": True, **baselines.ORIENTATION}


@dataclass(frozen=True)
class RunConfig:
    task: str = "classification"
    metric: str = "sms"
    temperature: float = 2.0
    top_k: int = 5
    projection_dim: int = 25
    sample_rate: float = 1.0
    seed: int = 0
    epsilon: float = DEFAULT_EPSILON
    p: float = 2.0
    bins: int = 10
    threads: int = 1

    def __post_init__(self):
        problems = []
        if self.task not in ("classification", "regression"):
            problems.append(f"task must be classification or regression, got {self.task!r}")
        if self.metric not in METRICS:
            problems.append(f"metric must be one of {', '.join(METRICS)}, got {self.metric!r}")
        if self.metric == "sms-regression" and self.task != "regression":
            problems.append("metric sms-regression requires task regression")
        if not self.temperature > 0:
            problems.append(f"temperature must be > 0, got {self.temperature}")
        if not 0 < self.sample_rate <= 1:
            problems.append(f"sample rate must be in (0, 1], got {self.sample_rate}")
        if self.projection_dim < 2:
            problems.append(f"projection dim must be >= 2, got {self.projection_dim}")
        if self.epsilon < 0:
            problems.append(f"epsilon must be >= 0, got {self.epsilon}")
        if self.p < 0:
            problems.append(f"p must be >= 0, got {self.p}")
        if self.bins < 2:
            problems.append(f"bins must be >= 2, got {self.bins}")
        if self.top_k < 1:
            problems.append(f"top-k must be >= 1, got {self.top_k}")
        if self.threads < 1:
            problems.append(f"threads must be >= 1, got {self.threads}")
        if problems:
            raise InputError("; ".join(problems))

    def echo(self):
        d = asdict(self)
        del d["threads"]  # execution detail, reported under "runtime"
        return d


@dataclass
class TargetData:
    """Target-side inputs shared read-only by every candidate of one run."""
    rows: np.ndarray            # sampled row indices into the full target set
    classes: np.ndarray         # class id (or label bin) per sampled row
    partition: softlabel.ClusterPartition
    n_total: int
    features: np.ndarray = None
    target_distribution: np.ndarray = None
    source_distributions: Path = None
    sample_ids: tuple = None


def prepare_target(labels, config, features=None, target_dist=None, source_dist_dir=None):
    n = len(labels)
    if features is not None and len(features) != n:
        raise InputError(f"features have {len(features)} rows, labels have {n}")
    rows = softlabel.sample_rows(n, config.sample_rate, seed=softlabel.derive_seed(config.seed, "sample"))
    values = labels.labels[rows]
    if labels.task == "regression":
        classes = softlabel.discretize_labels(values, config.bins)
    else:
        classes = values.astype(np.int64)
    partition = softlabel.partition_by_label(None, classes)
    tdist = None
    if config.metric in baselines.DIVERGENCES:
        if target_dist is None or source_dist_dir is None:
            raise InputError(f"metric {config.metric} needs --target-dist and --source-dist-dir")
        tdist = dataio.load_distribution(target_dist)
    return TargetData(rows, classes, partition, n, features, tdist,
                      Path(source_dist_dir) if source_dist_dir else None, labels.sample_ids)


def acquire_logits(db, cand, target):
    """Logits for the sampled target rows, from file or the built-in predictor."""
    path = db.resolve(cand)
    if cand.is_predictor:
        if target.features is None:
            raise InputError(f"candidate {cand.id} is a predictor; --features is required")
        weights = dataio.load_weights(path)
        logits = dataio.predict_logits(weights, target.features[target.rows]).values
    else:
        lm = dataio.load_logits(path)
        if lm.n_samples != target.n_total:
            raise InputError(f"{path}: {lm.n_samples} logit rows, labels have {target.n_total}")
        # rows are joined by order; ids, when both sides have them, must agree
        if lm.sample_ids and target.sample_ids and lm.sample_ids != tuple(target.sample_ids):
            bad = next(i for i, (a, b) in enumerate(zip(lm.sample_ids, target.sample_ids)) if a != b)
            raise InputError(f"{path}: row {bad} has sample_id {lm.sample_ids[bad]!r}, "
                             f"labels have {target.sample_ids[bad]!r}")
        logits = lm.values[target.rows]
    if logits.shape[1] != cand.output_dim:
        raise InputError(f"{path}: {logits.shape[1]} outputs, manifest says {cand.output_dim}")
    return logits


def candidate_vectors(cand_id, logits, config):
    """Soft-label vectors for one candidate plus a note about projection."""
    note = ""
    r = None
    if config.metric == "isms":
        if config.projection_dim >= logits.shape[1]:
            note = (f"projection skipped: proj-dim {config.projection_dim} >= "
                    f"output_dim {logits.shape[1]}")
        else:
            r = config.projection_dim
    vectors, projected = softlabel.soft_labels(
        logits, config.temperature, r=r, seed=softlabel.derive_seed(config.seed, cand_id))
    return vectors, projected, note


def fit_clusters(vectors, partition, epsilon):
    return {u: fit_gaussian(vectors[idx], epsilon) for u, idx in partition.clusters.items()}


def score_candidate(db, cand, target, config):
    """Raw metric value and bookkeeping for one candidate."""
    stage = "predicting"
    t0 = time.perf_counter()
    result = {"model_id": cand.id, "output_dim": cand.output_dim, "projected": False, "note": ""}
    try:
        if config.metric in baselines.DIVERGENCES:
            stage = "distribution"
            src = dataio.load_distribution(target.source_distributions / f"{cand.id}.csv")
            t1 = time.perf_counter()
            value = baselines.DIVERGENCES[config.metric](src, target.target_distribution)
        else:
            logits = acquire_logits(db, cand, target)
            t1 = time.perf_counter()
            stage = "soft-labels"
            vectors, projected, note = candidate_vectors(cand.id, logits, config)
            result.update(projected=projected, note=note, effective_dim=int(vectors.shape[1]))
            if config.metric in SD_METRICS:
                stage = "fitting"
                fits = fit_clusters(vectors, target.partition, config.epsilon)
                stage = "separation"
                if config.metric == "sms-regression":
                    sd = regression_sd(target.partition, fits, config.p, cand.id)
                else:
                    sd = model_sd(target.partition, fits, cand.id)
                value = sd.value
            else:
                stage = config.metric
                value = baselines.CLUSTER_METRICS[config.metric](target.partition, vectors)
    except SMSError as exc:
        raise CandidateFailure(cand.id, stage, exc) from exc
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        err = CandidateFailure(cand.id, stage, exc)
        err.exit_code = 3
        raise err from exc
    t2 = time.perf_counter()
    result["raw_metric"] = float(value)
    result["timing"] = {"predicting_seconds": t1 - t0, "other_seconds": t2 - t1}
    return result


def rank_database(db, labels, config, features=None, target_dist=None, source_dist_dir=None):
    """Score and rank every candidate in ``db``; returns the report dict."""
    if not hasattr(db, "candidates"):
        db = open_database(db)
    if not db.candidates:
        raise InputError(f"database {db.root} has no candidates")
    target = prepare_target(labels, config, features, target_dist, source_dist_dir)
    if target.partition.m < 2:
        log.warning("only one label class present; every separation degree is 0")

    def work(cand):
        return score_candidate(db, cand, target, config)

    if config.threads > 1:
        with ThreadPoolExecutor(config.threads) as pool:
            results = list(pool.map(work, db.candidates))
    else:
        results = [work(c) for c in db.candidates]

    higher = HIGHER_IS_BETTER[config.metric]
    by_id = {r["model_id"]: r for r in results}
    order = rank_candidates({r["model_id"]: r["raw_metric"] for r in results},
                            higher_is_better=higher)
    ids = [r["model_id"] for r in results]
    norm = evaluation.minmax_normalize([by_id[i]["raw_metric"] for i in ids])
    for i, v in zip(ids, norm):
        by_id[i]["normalized_metric"] = float(v)
    for rank, mid in enumerate(order, start=1):
        by_id[mid]["rank"] = rank

    rows = []
    per_candidate = {}
    for mid in order:
        r = dict(by_id[mid])
        per_candidate[mid] = r.pop("timing")
        rows.append(r)
    return {
        "config": config.echo(),
        "higher_is_better": higher,
        "n_samples_total": target.n_total,
        "n_samples_used": int(len(target.rows)),
        "n_clusters": target.partition.m,
        "candidates": rows,
        "selected": order[:config.top_k],
        "runtime": {
            "threads": config.threads,
            "predicting_seconds": sum(t["predicting_seconds"] for t in per_candidate.values()),
            "other_seconds": sum(t["other_seconds"] for t in per_candidate.values()),
            "per_candidate": per_candidate,
        },
    }


def deterministic_part(report):
    """The report without execution-dependent fields (timings, thread count)."""
    return {k: v for k, v in report.items() if k != "runtime"}


def inspect_candidate(db, candidate_id, labels, config, features=None):
    """Pair separation table and per-cluster fit summary for one candidate."""
    cand = db.get(candidate_id)
    target = prepare_target(labels, config, features)
    try:
        logits = acquire_logits(db, cand, target)
        vectors, projected, note = candidate_vectors(cand.id, logits, config)
        fits = fit_clusters(vectors, target.partition, config.epsilon)
        sd = model_sd(target.partition, fits, cand.id)
    except SMSError as exc:
        raise CandidateFailure(cand.id, "inspect", exc) from exc
    classes = target.partition.class_ids
    warnings = []
    if len(classes) < 2:
        warnings.append("only one label class present; the separation table is trivially zero")
    return {
        "model_id": cand.id,
        "classes": [c if isinstance(c, int) else str(c) for c in classes],
        "sd_matrix": sd.matrix(classes).tolist(),
        "model_sd": sd.value,
        "projected": projected,
        "note": note,
        "clusters": [
            {"class": u, "count": f.count, "mean_norm": float(np.linalg.norm(f.mu)),
             "log_det": f.log_det}
            for u, f in fits.items()
        ],
        "warnings": warnings,
    }


def evaluate_report(report, accuracies, K=None, lower_is_better=False):
    """Attach an ``evaluation`` section computed against ground-truth values."""
    rows = report["candidates"]
    ids = [r["model_id"] for r in rows]
    raw = [r["raw_metric"] for r in rows]
    ranking = sorted(rows, key=lambda r: r["rank"])
    res = evaluation.evaluate(ids, raw, [r["model_id"] for r in ranking], accuracies,
                              K or len(ids), lower_is_better)
    out = dict(report)
    out["evaluation"] = {**res.to_dict(), "lower_is_better": lower_is_better}
    return out, res


def write_report(report, out_path):
    """Write the JSON report plus ``<stem>.summary.csv`` beside it."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(report, indent=2) + "\n")
    summary = out_path.with_name(out_path.stem + ".summary.csv")
    with open(summary, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model_id", "raw_metric", "normalized_metric", "rank"])
        for r in report["candidates"]:
            w.writerow([r["model_id"], repr(r["raw_metric"]), repr(r["normalized_metric"]), r["rank"]])
    return summary


def write_plot_data(report, accuracies, out_path):
    """``normalized_metric,accuracy`` pairs for trendline plots."""
    out_path = Path(out_path)
    with open(out_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["normalized_metric", "accuracy"])
        for r in report["candidates"]:
            w.writerow([repr(r["normalized_metric"]), repr(accuracies[r["model_id"]])])
    return out_path
