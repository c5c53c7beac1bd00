"""Serializable experiment results.

JSON is canonical: keys sorted, floats written with ``repr`` precision, so a
result read back and written again is byte-identical.  Complex series are
stored as parallel ``real``/``imag`` arrays.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

SCHEMA_VERSION = 1


def provenance(rtol: float = 1e-8, atol: float = 1e-10) -> dict:
    """Package version and integrator settings stamped on every result."""
    from . import __version__
    return {"package": "catsyn", "version": __version__,
            "integrator": {"method": "RK45", "rtol": rtol, "atol": atol}}


def _series_to_json(v):
    arr = np.asarray(v)
    if np.iscomplexobj(arr) and np.any(arr.imag != 0):
        return {"real": [float(x) for x in arr.real], "imag": [float(x) for x in arr.imag]}
    if arr.dtype.kind in "fciu":
        return [float(x) for x in np.real(arr)]
    return [str(x) for x in arr]


def _series_from_json(v):
    if isinstance(v, dict):
        return np.asarray(v["real"], float) + 1j * np.asarray(v["imag"], float)
    if v and isinstance(v[0], str):
        return np.asarray(v, dtype=object)
    return np.asarray(v, float)


def _scalar(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    if isinstance(x, (complex, np.complexfloating)):
        return {"real": float(x.real), "imag": float(x.imag)}
    if isinstance(x, dict):
        return {str(k): _scalar(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_scalar(v) for v in x]
    if x is None or isinstance(x, str):
        return x
    return str(x)


@dataclass
class ExperimentResult:
    id: str
    params: dict
    time_grid: np.ndarray
    observables: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "id": self.id,
            "params": _scalar(self.params),
            "time_grid": [float(t) for t in np.asarray(self.time_grid, float)],
            "observables": {k: _series_to_json(v) for k, v in self.observables.items()},
            "summary": _scalar(self.summary),
            "provenance": _scalar(self.provenance),
            "diagnostics": _scalar(self.diagnostics),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentResult":
        return cls(
            id=d["id"], params=d["params"], time_grid=np.asarray(d["time_grid"], float),
            observables={k: _series_from_json(v) for k, v in d["observables"].items()},
            summary=d["summary"], provenance=d.get("provenance", {}),
            diagnostics=d.get("diagnostics", {}),
            schema_version=d.get("schema_version", SCHEMA_VERSION),
        )

    @classmethod
    def from_json(cls, text: str) -> "ExperimentResult":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        """Series as columns; complex series split into _real/_imag columns."""
        cols = [("t", np.asarray(self.time_grid, float))]
        for name, v in self.observables.items():
            arr = np.asarray(v)
            if np.iscomplexobj(arr) and np.any(arr.imag != 0):
                cols += [(name + "_real", arr.real), (name + "_imag", arr.imag)]
            else:
                cols.append((name, np.real(arr) if arr.dtype.kind in "fciu" else arr))
        nrows = max(len(c) for _, c in cols)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([n for n, _ in cols])
        for i in range(nrows):
            w.writerow([_cell(c[i]) if i < len(c) else "" for _, c in cols])
        return buf.getvalue()


def _cell(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x)) if math.isfinite(x) else str(float(x))
    return str(x)
