"""Run manifests and schema-checked CSV readers for emitted tables."""
from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .errors import DataError

# column schemas of every table the CLI writes; values are parsed as floats
SCHEMAS = {
    "gamma": ("p", "gamma", "err_est", "h_used", "T_used"),
    "transition": ("radius", "ground_state", "delta"),
    "bounds": ("N", "sum", "bound", "slack", "holds"),
    "weyl": None,  # filled from weyl.WEYL_COLUMNS below
    "beta": ("j", "beta_j", "pi*j/ln j", "ratio"),
    "horn_bound": ("N", "sum", "bound", "chain", "slack", "holds"),
}


def _weyl_columns():
    from .weyl import WEYL_COLUMNS
    return tuple(WEYL_COLUMNS)


def schema(kind: str) -> tuple:
    if kind not in SCHEMAS:
        raise KeyError(f"unknown table kind {kind!r}")
    return SCHEMAS[kind] or _weyl_columns()


def read_table(path, kind: str) -> list[dict]:
    """Rows of a CSV table as dicts of floats; the header must match the schema exactly."""
    cols = schema(kind)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != cols:
            raise DataError(f"{path}: header {header} does not match {cols}")
        rows = []
        for line, rec in enumerate(reader, start=2):
            if len(rec) != len(cols):
                raise DataError(f"{path}:{line}: expected {len(cols)} fields, got {len(rec)}")
            try:
                rows.append({c: float(v) for c, v in zip(cols, rec)})
            except ValueError as exc:
                raise DataError(f"{path}:{line}: {exc}") from None
    return rows


def write_rows(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in r])


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def timestamp() -> str:
    # SOURCE_DATE_EPOCH pins the stamp so manifests are byte-identical too
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return t.strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass
class RunManifest:
    command: str
    params: dict
    version: str = __version__
    fingerprints: dict = field(default_factory=dict)
    timestamp: str = field(default_factory=timestamp)
    outputs: dict = field(default_factory=dict)

    def add_output(self, path, kind: str) -> None:
        p = Path(path)
        self.outputs[p.name] = {"kind": kind, "sha256": file_digest(p)}

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=_jsonable)

    def write(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(self.to_json() + "\n")

    @classmethod
    def read(cls, path) -> "RunManifest":
        with open(path) as fh:
            d = json.load(fh)
        missing = {"command", "params", "version", "fingerprints", "timestamp", "outputs"} - set(d)
        if missing:
            raise DataError(f"{path}: manifest lacks {sorted(missing)}")
        return cls(**d)


def _jsonable(obj):
    if hasattr(obj, "item"):
        return obj.item()
    if isinstance(obj, (set, tuple)):
        return list(obj)
    return str(obj)
