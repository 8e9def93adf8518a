"""JSON/CSV persistence with atomic writes."""

from __future__ import annotations

import csv
import errno
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .differentials import LaminatedField
from .errors import OutOfDiskError, ValidationError
from .quadrature import build_grid
from .subgroup_lattice import CosetTable


def load_json(path: str | os.PathLike):
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ValidationError(f"{p}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        where = f"line {exc.lineno} column {exc.colno} (char {exc.pos})"
        raise ValidationError(f"{p}: invalid JSON at {where}: {exc.msg}") from exc


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True, default=_default) + "\n"


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write to a sibling temp file, then rename over the target."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=p.parent, prefix=f".{p.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, p)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        if exc.errno == errno.ENOSPC:
            raise OutOfDiskError(f"no space left writing {p}") from exc
        raise


def save_json(path, obj) -> None:
    atomic_write(path, dumps(obj))


def to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def complex_to_json(x: complex) -> list[float]:
    return [float(x.real), float(x.imag)]


def _pairs(z: np.ndarray) -> list:
    return np.stack([z.real, z.imag], axis=-1).tolist()


def _unpairs(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValidationError("expected a list of [re, im] pairs")
    return arr[:, 0] + 1j * arr[:, 1]


def field_to_json(mu: LaminatedField) -> dict:
    """Field file: level, grid (nodes, weights), 1-based per-coset values, Beltrami flag."""
    g = mu.grid
    return {
        "level": mu.level.to_json(),
        "grid": {"genus": g.genus, "depth": g.depth, "nodes": _pairs(g.nodes), "weights": g.weights.tolist()},
        "values": {f"coset_{c + 1}": _pairs(mu.values[c]) for c in range(mu.degree)},
        "beltrami": bool(mu.is_beltrami),
    }


def field_from_json(rec: dict) -> LaminatedField:
    try:
        level = CosetTable.from_json(rec["level"])
        gr = rec["grid"]
        grid = build_grid(int(gr.get("genus", level.genus)), int(gr["depth"]))
        if "nodes" in gr:
            nodes = _unpairs(gr["nodes"])
            if nodes.shape != grid.nodes.shape or np.max(np.abs(nodes - grid.nodes)) > 1e-12:
                raise ValidationError("grid nodes do not match the rebuilt grid")
        vals = np.stack([_unpairs(rec["values"][f"coset_{c + 1}"]) for c in range(level.degree)])
        beltrami = bool(rec.get("beltrami", False))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed field record: {exc}") from exc
    return LaminatedField.from_cosets(level, vals, grid, beltrami)


def table_from_file(path) -> CosetTable:
    rec = load_json(path)
    if isinstance(rec, dict) and "tables" in rec:
        if len(rec["tables"]) != 1:
            raise ValidationError(f"{path}: expected a single coset table, found {len(rec['tables'])}")
        rec = rec["tables"][0]
    return CosetTable.from_json(rec, rec.get("genus") if isinstance(rec, dict) else None)
