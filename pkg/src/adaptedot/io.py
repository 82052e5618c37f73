"""JSON and CSV formats for processes, nested distributions, grids and samples."""

from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path
from typing import Iterable, List, Sequence, Union

import numpy as np

from .approximation import QuantizationGrid
from .canonical import NestedDistribution, from_json as nested_from_json, to_json as nested_to_json
from .process import FilteredProcess

__all__ = [
    "SchemaError",
    "LOAD_TOL",
    "process_from_json",
    "process_to_json",
    "load_json",
    "load_process",
    "load_any",
    "load_grid",
    "load_samples_csv",
    "fmt",
    "write_csv",
    "nested_to_json",
    "nested_from_json",
]

LOAD_TOL = 1e-9


class SchemaError(ValueError):
    """Input does not match the documented file format."""


def fmt(x: float) -> str:
    """Full-precision decimal (17 significant digits)."""
    return format(float(x), ".17g")


def load_json(path: Union[str, Path]):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc


def process_from_json(obj) -> FilteredProcess:
    """Parse ``{"horizon", "dim", "atoms": [{"prob", "path"}], "filtration"}``.

    ``filtration`` may be omitted, meaning the path-generated filtration.
    Probabilities within ``1e-9`` of summing to one are renormalized.
    """
    if not isinstance(obj, dict):
        raise SchemaError("process JSON must be an object")
    try:
        N = int(obj["horizon"])
        d = int(obj["dim"])
        atoms = obj["atoms"]
        probs = np.array([float(a["prob"]) for a in atoms])
        paths = np.array([a["path"] for a in atoms], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed process JSON: {exc}") from exc
    if not len(atoms):
        raise SchemaError("process has no atoms")
    if paths.ndim == 2 and d == 1:
        paths = paths[:, :, None]
    if paths.shape != (len(atoms), N, d):
        raise SchemaError(f"paths have shape {paths.shape}, expected {(len(atoms), N, d)}")
    total = math.fsum(probs.tolist())
    if np.any(probs < 0) or abs(total - 1.0) > LOAD_TOL:
        raise SchemaError(f"atom probabilities sum to {total!r}")
    probs = probs / total
    filt = obj.get("filtration")
    if filt is not None:
        filt = np.array(filt, dtype=np.int64)
        if filt.shape != (N, len(atoms)):
            raise SchemaError(f"filtration has shape {filt.shape}, expected {(N, len(atoms))}")
    try:
        return FilteredProcess(probs, paths, filt)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc


def process_to_json(proc: FilteredProcess) -> dict:
    return {
        "horizon": proc.horizon,
        "dim": proc.dim,
        "atoms": [{"prob": float(w), "path": proc.paths[k].tolist()} for k, w in enumerate(proc.probs)],
        "filtration": proc.filtration.tolist(),
    }


def load_process(path) -> FilteredProcess:
    return process_from_json(load_json(path))


def load_any(path) -> Union[FilteredProcess, NestedDistribution]:
    """Process JSON or nested-distribution JSON (as written by ``canon``)."""
    obj = load_json(path)
    if isinstance(obj, dict) and "horizon" not in obj and "atoms" in obj:
        try:
            return nested_from_json(obj)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed nested distribution: {exc}") from exc
    return process_from_json(obj)


def load_grid(path) -> QuantizationGrid:
    obj = load_json(path)
    try:
        return QuantizationGrid.from_json(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed grid JSON: {exc}") from exc


def load_samples_csv(path, dim: int = 1):
    """Read one path per row; an optional ``weight`` column gives weights.

    A header row is recognised when its first cell is not a number.
    Returns ``(paths, weights)`` with ``paths`` of shape ``(m, N, dim)``.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise SchemaError("sample CSV is empty")
    wcol = None
    try:
        float(rows[0][0])
    except ValueError:
        header = [c.strip().lower() for c in rows[0]]
        rows = rows[1:]
        if "weight" in header:
            wcol = header.index("weight")
    try:
        data = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise SchemaError(f"non-numeric sample entry: {exc}") from exc
    weights = None
    if wcol is not None:
        weights = data[:, wcol]
        data = np.delete(data, wcol, axis=1)
    if data.shape[1] % dim:
        raise SchemaError(f"{data.shape[1]} value columns do not split into dim={dim}")
    return data.reshape(data.shape[0], -1, dim), weights


def write_csv(rows: Iterable[Sequence], header: Sequence[str], out=None) -> str:
    """Write rows with floats at full precision; returns the text as well."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])
    text = buf.getvalue()
    if out is not None:
        Path(out).write_text(text)
    return text
