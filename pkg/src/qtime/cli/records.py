"""Result records: deterministic JSON plus optional CSV tables."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field

import numpy as np


def to_jsonable(x):
    """numpy scalars/arrays and complex numbers to plain JSON values."""
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return to_jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


def digest(obj) -> str:
    blob = json.dumps(to_jsonable(obj), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class Table:
    columns: tuple[str, ...]
    rows: list[tuple]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_csv_cell(c) for c in row])
        return buf.getvalue()


def _csv_cell(c):
    if isinstance(c, (float, np.floating)):
        return repr(float(c))
    if isinstance(c, (complex, np.complexfloating)):
        return f"{float(c.real)!r}{float(c.imag):+}j"
    return c


@dataclass
class ResultRecord:
    experiment: str
    inputs_digest: str
    outputs: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self, include_wall_time: bool = True) -> dict:
        d = {
            "experiment": self.experiment,
            "inputs_digest": self.inputs_digest,
            "outputs": to_jsonable(self.outputs),
            "residuals": to_jsonable(self.residuals),
            "checks": to_jsonable(self.checks),
            "tables": {
                name: {"columns": list(t.columns), "rows": to_jsonable([list(r) for r in t.rows])}
                for name, t in self.tables.items()
            },
        }
        if include_wall_time:
            d["wall_time"] = float(self.wall_time)
        return d

    def to_json(self, include_wall_time: bool = True) -> str:
        return json.dumps(self.to_dict(include_wall_time), sort_keys=True, indent=2) + "\n"


def strip_wall_time(text: str) -> str:
    """Canonical JSON of a record with the wall-time field removed."""
    d = json.loads(text)
    d.pop("wall_time", None)
    return json.dumps(d, sort_keys=True, indent=2) + "\n"
