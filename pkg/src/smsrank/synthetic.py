"""Synthetic model zoos with a known quality ordering.

Each candidate is a logit generator over a labeled target set: class ``c``
emits logits around a class prototype whose distance from the other
prototypes grows with the candidate's quality ``theta``.  Requires
``n_outputs > n_classes``.  Ranking metrics should correlate with ``theta``.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataio import TargetLabels, save_logits
from .modeldb import ModelCandidate, open_database, register_model


@dataclass
class SyntheticZoo:
    labels: np.ndarray
    logits: dict   # id -> N x n matrix
    quality: dict  # id -> theta

    @property
    def ids(self):
        return list(self.logits)


def make_zoo(n_candidates=20, n_classes=4, n_samples=2000, n_outputs=10,
             scale=2.0, theta=None, noise=1.0, seed=0):
    """Draw a zoo; ``theta`` defaults to an even grid on [0.1, 1] in shuffled order."""
    rng = np.random.default_rng(seed)
    if theta is None:
        theta = rng.permutation(np.linspace(0.1, 1.0, n_candidates))
    labels = np.arange(n_samples) % n_classes
    rng.shuffle(labels)
    logits, quality = {}, {}
    for k, q in enumerate(theta):
        cid = f"m{k:02d}"
        # orthonormal prototypes, all orthogonal to the ones vector that softmax
        # ignores, in a random orientation: equal effective pairwise gaps
        basis = np.column_stack([np.ones(n_outputs), rng.normal(size=(n_outputs, n_classes))])
        q_mat, _ = np.linalg.qr(basis)
        protos = q_mat[:, 1:].T
        z = scale * q * protos[labels] + noise * rng.normal(size=(n_samples, n_outputs))
        logits[cid] = z
        quality[cid] = float(q)
    return SyntheticZoo(labels, logits, quality)


def write_zoo(zoo, root, fmt="bin"):
    """Materialize ``zoo`` as a model database plus labels/accuracies CSVs under ``root``."""
    root = Path(root)
    staging = root / "staging"
    staging.mkdir(parents=True, exist_ok=True)
    db = open_database(root / "db", create=True)
    for cid, z in zoo.logits.items():
        src = staging / f"{cid}.{fmt}"
        save_logits(src, z)
        db = register_model(db, ModelCandidate(cid, z.shape[1], "logits-file", str(src),
                                               {"theta": repr(zoo.quality[cid])}))
    with open(root / "labels.csv", "w") as fh:
        fh.write("sample_id,label\n")
        fh.writelines(f"s{i},{y}\n" for i, y in enumerate(zoo.labels))
    with open(root / "accuracies.csv", "w") as fh:
        fh.write("model_id,accuracy\n")
        fh.writelines(f"{cid},{q!r}\n" for cid, q in zoo.quality.items())
    return db


def target_labels(zoo):
    return TargetLabels(np.asarray(zoo.labels, dtype=np.int64), "classification",
                        tuple(f"s{i}" for i in range(len(zoo.labels))))
