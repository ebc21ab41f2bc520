"""Readers and writers for logits, labels, accuracies and predictor weights.

File formats
------------
* CSV logits: header ``z0,...,z{n-1}``, optionally preceded by ``sample_id``.
* Binary logits: magic ``SMSL``, u32 N, u32 n, then N*n float64 values,
  row-major, little-endian.
* Labels CSV: ``sample_id,label``.  Accuracies CSV: ``model_id,accuracy``.
* Distribution CSV: ``p``, one probability per row.
* Weights JSON: ``{"layers": [{"W": [[...]], "b": [...], "activation": "relu"|"none"}]}``.
"""

import csv
import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyFile,
    FileUnreadable,
    NonFiniteValue,
    ParseError,
)

MAGIC = b"SMSL"
_HEADER = struct.Struct("<4sII")


@dataclass(frozen=True)
class LogitMatrix:
    values: np.ndarray
    sample_ids: tuple = None

    @property
    def n_samples(self):
        return self.values.shape[0]

    @property
    def n_outputs(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class TargetLabels:
    labels: np.ndarray
    task: str = "classification"
    sample_ids: tuple = None

    def __len__(self):
        return len(self.labels)


@dataclass(frozen=True)
class Layer:
    W: np.ndarray
    b: np.ndarray
    activation: str = "none"

    @property
    def in_dim(self):
        return self.W.shape[1]

    @property
    def out_dim(self):
        return self.W.shape[0]


@dataclass(frozen=True)
class PredictorWeights:
    layers: tuple

    def __post_init__(self):
        if not self.layers:
            raise ParseError("predictor needs at least one layer")
        for k, (prev, nxt) in enumerate(zip(self.layers, self.layers[1:])):
            if nxt.in_dim != prev.out_dim:
                raise DimensionMismatch(
                    f"layer {k + 1} expects input width {nxt.in_dim}, "
                    f"layer {k} produces {prev.out_dim}")

    @property
    def in_dim(self):
        return self.layers[0].in_dim

    @property
    def out_dim(self):
        return self.layers[-1].out_dim


def _read_text(path):
    try:
        return Path(path).read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise FileUnreadable(f"{path}: {exc}") from exc


def _csv_rows(path):
    text = _read_text(path)
    rows = [r for r in csv.reader(text.splitlines())]
    # blank lines come back as []; keep line numbers by tracking them
    numbered = [(i + 1, [c.strip() for c in r]) for i, r in enumerate(rows) if r]
    if not numbered:
        raise EmptyFile(f"{path}: file is empty")
    return numbered


def _parse_float(token, path, line, col):
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"{path}:{line}: column {col}: not a number: {token!r}") from None
    if not math.isfinite(value):
        raise NonFiniteValue(line - 2, col, where=str(path))
    return value


def _read_matrix_csv(path, names_ok):
    """Parse a numeric CSV with an optional leading ``sample_id`` column.

    ``names_ok`` validates the numeric column names and raises on mismatch.
    """
    rows = _csv_rows(path)
    (hline, header), body = rows[0], rows[1:]
    has_ids = bool(header) and header[0] == "sample_id"
    cols = header[1:] if has_ids else header
    names_ok(cols, path, hline)
    width = len(header)
    ids = []
    data = np.empty((len(body), len(cols)))
    for r, (line, row) in enumerate(body):
        if len(row) != width:
            raise ParseError(f"{path}:{line}: expected {width} fields, got {len(row)}")
        if has_ids:
            ids.append(row[0])
            row = row[1:]
        for c, tok in enumerate(row):
            try:
                data[r, c] = float(tok)
            except ValueError:
                raise ParseError(f"{path}:{line}: column {c}: not a number: {tok!r}") from None
            if not math.isfinite(data[r, c]):
                raise NonFiniteValue(r, c, where=str(path))
    return data, (tuple(ids) if has_ids else None)


def _logit_header_ok(cols, path, line):
    expected = [f"z{j}" for j in range(len(cols))]
    if not cols or cols != expected:
        raise ParseError(f"{path}:{line}: logits header must be z0,...,z{{n-1}}; got {cols}")


def _any_header_ok(cols, path, line):
    if not cols:
        raise ParseError(f"{path}:{line}: no data columns in header")


def load_logits(path, format=None):
    """Load an N x n logit matrix from CSV or the binary ``SMSL`` format.

    ``format`` is ``"csv"`` or ``"binary"``; when omitted it is inferred from
    the file extension (``.bin`` means binary).
    """
    path = Path(path)
    if format is None:
        format = "binary" if path.suffix == ".bin" else "csv"
    if format == "binary":
        return _load_logits_binary(path)
    if format != "csv":
        raise ParseError(f"unknown logits format {format!r}")
    values, ids = _read_matrix_csv(path, _logit_header_ok)
    if values.shape[0] == 0:
        raise EmptyFile(f"{path}: no logit rows")
    return LogitMatrix(values, ids)


def _load_logits_binary(path):
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise FileUnreadable(f"{path}: {exc}") from exc
    if len(raw) < _HEADER.size:
        raise ParseError(f"{path}: offset 0: truncated header")
    magic, n_rows, n_cols = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ParseError(f"{path}: offset 0: bad magic {magic!r}")
    expected = _HEADER.size + 8 * n_rows * n_cols
    if len(raw) != expected:
        raise ParseError(
            f"{path}: offset {min(len(raw), expected)}: expected {expected} bytes, "
            f"found {len(raw)}")
    if n_rows == 0 or n_cols == 0:
        raise EmptyFile(f"{path}: empty matrix")
    values = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(n_rows, n_cols)
    values = values.astype(np.float64)
    bad = np.argwhere(~np.isfinite(values))
    if len(bad):
        raise NonFiniteValue(int(bad[0][0]), int(bad[0][1]), where=str(path))
    return LogitMatrix(values)


def save_logits(path, logits, format=None):
    """Write logits; the inverse of :func:`load_logits`."""
    path = Path(path)
    if isinstance(logits, LogitMatrix):
        values, ids = logits.values, logits.sample_ids
    else:
        values, ids = np.asarray(logits, dtype=float), None
    if format is None:
        format = "binary" if path.suffix == ".bin" else "csv"
    if format == "binary":
        header = _HEADER.pack(MAGIC, values.shape[0], values.shape[1])
        path.write_bytes(header + np.ascontiguousarray(values, dtype="<f8").tobytes())
        return
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        cols = [f"z{j}" for j in range(values.shape[1])]
        w.writerow((["sample_id"] if ids else []) + cols)
        for i, row in enumerate(values):
            # repr gives the shortest string that round-trips exactly
            w.writerow(([ids[i]] if ids else []) + [repr(float(v)) for v in row])


def load_features(path):
    """Load a feature matrix (any column names, optional ``sample_id``)."""
    values, _ = _read_matrix_csv(path, _any_header_ok)
    return values


def _keyed_rows(path, key, value):
    rows = _csv_rows(path)
    (hline, header), body = rows[0], rows[1:]
    for name in (key, value):
        if name not in header:
            raise ParseError(f"{path}:{hline}: missing header column {name!r}")
    ki, vi = header.index(key), header.index(value)
    if not body:
        raise EmptyFile(f"{path}: header only, no records")
    out = []
    for line, row in body:
        if len(row) != len(header):
            raise ParseError(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
        out.append((line, row[ki], row[vi]))
    return out


def load_labels(path, task="classification"):
    """Read a ``sample_id,label`` CSV, preserving row order."""
    rows = _keyed_rows(path, "sample_id", "label")
    ids = tuple(r[1] for r in rows)
    if task == "classification":
        labels = []
        for line, _, tok in rows:
            try:
                v = int(tok)
            except ValueError:
                raise ParseError(f"{path}:{line}: class label must be an integer: {tok!r}") from None
            if v < 0:
                raise ParseError(f"{path}:{line}: class label must be nonnegative: {v}")
            labels.append(v)
        arr = np.asarray(labels, dtype=np.int64)
    elif task == "regression":
        arr = np.asarray([_parse_float(tok, path, line, 1) for line, _, tok in rows])
    else:
        raise ParseError(f"unknown task {task!r}")
    return TargetLabels(arr, task, ids)


def load_accuracies(path):
    """Read ``model_id,accuracy`` into an insertion-ordered dict."""
    out = {}
    for line, mid, tok in _keyed_rows(path, "model_id", "accuracy"):
        out[mid] = _parse_float(tok, path, line, 1)
    return out


def load_distribution(path):
    rows = _csv_rows(path)
    (hline, header), body = rows[0], rows[1:]
    if header != ["p"]:
        raise ParseError(f"{path}:{hline}: distribution header must be 'p'")
    if not body:
        raise EmptyFile(f"{path}: no probabilities")
    return np.asarray([_parse_float(row[0], path, line, 0) for line, row in body])


def load_weights(path):
    text = _read_text(path)
    try:
        doc = json.loads(text)
        layers = []
        for entry in doc["layers"]:
            W = np.asarray(entry["W"], dtype=float)
            b = np.asarray(entry["b"], dtype=float)
            act = entry.get("activation", "none")
            if W.ndim != 2 or b.ndim != 1 or b.shape[0] != W.shape[0]:
                raise ParseError(f"{path}: layer shapes W{W.shape}, b{b.shape} do not agree")
            if act not in ("relu", "none"):
                raise ParseError(f"{path}: unknown activation {act!r}")
            if not (np.isfinite(W).all() and np.isfinite(b).all()):
                raise ParseError(f"{path}: non-finite weight")
            layers.append(Layer(W, b, act))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"{path}: malformed weights document ({exc})") from exc
    return PredictorWeights(tuple(layers))


def save_weights(path, weights):
    doc = {"layers": [{"W": l.W.tolist(), "b": l.b.tolist(), "activation": l.activation}
                      for l in weights.layers]}
    Path(path).write_text(json.dumps(doc))


def predict_logits(weights, features):
    """Forward pass of an affine/rectifier stack over the rows of ``features``."""
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != weights.in_dim:
        raise DimensionMismatch(
            f"features have {x.shape[1]} columns, predictor expects {weights.in_dim}")
    for layer in weights.layers:
        x = x @ layer.W.T + layer.b
        if layer.activation == "relu":
            x = np.maximum(x, 0.0)
    return LogitMatrix(x)
