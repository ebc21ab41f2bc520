"""On-disk model database.

Layout::

    <root>/manifest.json
    <root>/models/<id>.csv | <id>.bin | <id>.weights.json

The manifest is a single JSON document with one candidate record per line so
that a malformed record can be reported by line number.
"""

import json
import os
import re
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from . import dataio
from .errors import (
    CorruptManifest,
    DimensionMismatch,
    DuplicateId,
    FileUnreadable,
    InputError,
    UnknownCandidate,
)

KINDS = ("logits-file", "affine-predictor", "mlp-predictor")
MANIFEST = "manifest.json"
RECORD_KEYS = ("id", "output_dim", "kind", "path", "metadata")
_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


@dataclass(frozen=True)
class ModelCandidate:
    id: str
    output_dim: int
    kind: str
    path: str
    metadata: dict = field(default_factory=dict)

    def to_record(self):
        return {"id": self.id, "output_dim": self.output_dim, "kind": self.kind,
                "path": self.path, "metadata": dict(self.metadata)}

    @classmethod
    def from_record(cls, rec):
        if not isinstance(rec, dict):
            raise ValueError("record is not an object")
        if set(rec) != set(RECORD_KEYS):
            raise ValueError(f"record keys {sorted(rec)} != {sorted(RECORD_KEYS)}")
        if not isinstance(rec["id"], str) or not _ID_RE.match(rec["id"]):
            raise ValueError(f"bad id {rec['id']!r}")
        dim = rec["output_dim"]
        if isinstance(dim, bool) or not isinstance(dim, int) or dim < 2:
            raise ValueError(f"output_dim must be an integer >= 2, got {dim!r}")
        if rec["kind"] not in KINDS:
            raise ValueError(f"unknown kind {rec['kind']!r}")
        if not isinstance(rec["path"], str):
            raise ValueError("path must be a string")
        meta = rec["metadata"]
        if not isinstance(meta, dict) or not all(
                isinstance(k, str) and isinstance(v, str) for k, v in meta.items()):
            raise ValueError("metadata must map strings to strings")
        return cls(rec["id"], dim, rec["kind"], rec["path"], dict(meta))

    @property
    def is_predictor(self):
        return self.kind != "logits-file"


@dataclass(frozen=True)
class ModelDatabase:
    root: Path
    candidates: tuple = ()

    def get(self, candidate_id):
        for c in self.candidates:
            if c.id == candidate_id:
                return c
        raise UnknownCandidate(f"no candidate {candidate_id!r} in {self.root}")

    def resolve(self, candidate):
        """Absolute path of a candidate's prediction source."""
        p = Path(candidate.path)
        return p if p.is_absolute() else self.root / p

    def __len__(self):
        return len(self.candidates)


def _dump_manifest(candidates):
    lines = [json.dumps(c.to_record(), sort_keys=False) for c in candidates]
    body = ",\n    ".join(lines)
    if not lines:
        return '{\n  "version": 1,\n  "candidates": []\n}\n'
    return '{\n  "version": 1,\n  "candidates": [\n    ' + body + "\n  ]\n}\n"


def _record_lines(text):
    """Line number at which each element of the top-level candidates array starts."""
    dec = json.JSONDecoder()
    key = text.find('"candidates"')
    pos = text.find("[", key) + 1
    lines = []
    while pos < len(text):
        while pos < len(text) and text[pos] in " \t\r\n,":
            pos += 1
        if pos >= len(text) or text[pos] == "]":
            break
        lines.append(text.count("\n", 0, pos) + 1)
        _, pos = dec.raw_decode(text, pos)
    return lines


def open_database(root, create=False):
    """Load the database at ``root``; with ``create`` an empty one is made."""
    root = Path(root)
    mpath = root / MANIFEST
    if not mpath.exists():
        if not create:
            raise FileUnreadable(f"{mpath}: no manifest (run 'register' first)")
        db = ModelDatabase(root, ())
        save_database(db)
        return db
    try:
        text = mpath.read_text()
    except OSError as exc:
        raise FileUnreadable(f"{mpath}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptManifest(f"{mpath}:{exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("candidates"), list):
        raise CorruptManifest(f"{mpath}:1: missing 'candidates' list")
    lines = _record_lines(text)
    seen = set()
    out = []
    for i, rec in enumerate(doc["candidates"]):
        line = lines[i] if i < len(lines) else "?"
        try:
            cand = ModelCandidate.from_record(rec)
        except ValueError as exc:
            raise CorruptManifest(f"{mpath}:{line}: record {i}: {exc}") from exc
        if cand.id in seen:
            raise CorruptManifest(f"{mpath}:{line}: record {i}: duplicate id {cand.id!r}")
        seen.add(cand.id)
        out.append(cand)
    return ModelDatabase(root, tuple(out))


def save_database(db):
    """Write the manifest atomically (temp file + rename)."""
    db.root.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=db.root, prefix=".manifest.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(_dump_manifest(db.candidates))
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, db.root / MANIFEST)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def list_models(db):
    if not isinstance(db, ModelDatabase):
        db = open_database(db)
    return list(db.candidates)


def probe_output_dim(kind, path):
    """Output width implied by the file contents; raises if it does not parse."""
    if kind == "logits-file":
        return dataio.load_logits(path).n_outputs
    weights = dataio.load_weights(path)
    if kind == "affine-predictor" and len(weights.layers) != 1:
        raise InputError(f"{path}: affine-predictor must have exactly one layer, "
                         f"found {len(weights.layers)}")
    return weights.out_dim


def _stored_name(candidate, src):
    if candidate.kind == "logits-file":
        ext = ".bin" if Path(src).suffix == ".bin" else ".csv"
        return f"{candidate.id}{ext}"
    return f"{candidate.id}.weights.json"


def register_model(db, candidate, copy=True):
    """Validate ``candidate`` and add it to ``db``; returns the new database.

    With ``copy`` (the default) the source file is copied to
    ``<root>/models/`` and the stored path is made relative to the root.
    """
    if any(c.id == candidate.id for c in db.candidates):
        raise DuplicateId(f"candidate {candidate.id!r} already registered")
    try:
        ModelCandidate.from_record(candidate.to_record())
    except ValueError as exc:
        raise InputError(f"invalid candidate: {exc}") from exc
    src = Path(candidate.path)
    if not src.is_absolute() and not src.exists():
        src = db.root / src
    if not src.is_file():
        raise FileUnreadable(f"{candidate.path}: no such file")
    found = probe_output_dim(candidate.kind, src)
    if found != candidate.output_dim:
        raise DimensionMismatch(
            f"{candidate.path}: file has {found} outputs, declared output_dim={candidate.output_dim}")
    stored = candidate
    if copy:
        models = db.root / "models"
        models.mkdir(parents=True, exist_ok=True)
        dest = models / _stored_name(candidate, src)
        if src.resolve() != dest.resolve():
            shutil.copyfile(src, dest)
        stored = ModelCandidate(candidate.id, candidate.output_dim, candidate.kind,
                                f"models/{dest.name}", dict(candidate.metadata))
    new = ModelDatabase(db.root, db.candidates + (stored,))
    save_database(new)
    return new
