"""JSON files for finite systems and shifts of finite type.

Finite system::

    {
      "points": ["a", "b", "c"],
      "metric": {"table": [1, 2, 1]},          # strict upper triangle, row-major
      "map": {"a": "b", "b": "c", "c": "a"},   # or a list aligned with points
      "subsets": {"Z": ["a", "b"]}
    }

``metric.table`` may also be the ragged upper rows ``[[1, 2], [1]]`` or a
full square matrix.  Instead of a table, ``{"coords": [[0, 0], ...],
"kind": "euclidean" | "chebyshev"}`` places the points in R^d.

Shift of finite type::

    {
      "alphabet": ["0", "1"],
      "forbidden": ["11"],                     # or "transitions": 0/1 matrix
      "subsets": {"starts0": ["0"]}            # unions of cylinders
    }
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import FiniteSystem, SubsetRef, validate_metric_table
from .errors import SchemaError
from .metrics import CoordMetric, TableMetric
from .symbolic import CylinderSet, SftSpec


def _table(spec, n: int) -> np.ndarray:
    if not isinstance(spec, list):
        raise SchemaError("metric.table must be a list")
    t = np.zeros((n, n))
    if spec and all(isinstance(r, list) for r in spec):
        if len(spec) == n and all(len(r) == n for r in spec):
            return np.array(spec, dtype=float)
        rows = [r for r in spec if r]
        if len(rows) != n - 1 or any(len(r) != n - 1 - i for i, r in enumerate(rows)):
            raise SchemaError(f"metric.table rows must be a {n}x{n} matrix or upper rows of lengths {n - 1}..1")
        flat = [v for r in rows for v in r]
    else:
        flat = list(spec)
    if len(flat) != n * (n - 1) // 2:
        raise SchemaError(f"metric.table needs {n * (n - 1) // 2} upper-triangle entries for {n} points, got {len(flat)}")
    iu = np.triu_indices(n, 1)
    try:
        t[iu] = np.array(flat, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError("metric.table entries must be numbers") from None
    return t + t.T


def system_from_dict(data: dict, *, validate: bool = True) -> tuple[FiniteSystem, dict[str, SubsetRef]]:
    """Build a finite system and its named subsets from the JSON schema above."""
    if not isinstance(data, dict):
        raise SchemaError("system file must hold a JSON object")
    for key in ("points", "metric", "map"):
        if key not in data:
            raise SchemaError(f"system file is missing {key!r}")
    names = [str(p) for p in data["points"]]
    if len(set(names)) != len(names):
        raise SchemaError("point names must be distinct")
    n = len(names)
    index = {p: i for i, p in enumerate(names)}
    metric = data["metric"]
    if not isinstance(metric, dict):
        raise SchemaError("metric must be an object")
    if "table" in metric:
        t = _table(metric["table"], n)
        if validate:
            validate_metric_table(t, names)
        dist = TableMetric(t)
    elif "coords" in metric:
        coords = metric["coords"]
        if len(coords) != n:
            raise SchemaError(f"metric.coords has {len(coords)} vectors for {n} points")
        try:
            dist = CoordMetric(coords, metric.get("kind", "euclidean"))
        except ValueError as exc:
            raise SchemaError(str(exc)) from None
    else:
        raise SchemaError("metric needs either 'table' or 'coords'")
    raw_map = data["map"]
    try:
        if isinstance(raw_map, dict):
            missing = [p for p in names if p not in raw_map]
            if missing:
                raise SchemaError(f"map has no image for {missing[0]!r}")
            step = [index[str(raw_map[p])] for p in names]
        else:
            if len(raw_map) != n:
                raise SchemaError(f"map list has {len(raw_map)} entries for {n} points")
            step = [index[str(q)] for q in raw_map]
    except KeyError as exc:
        raise SchemaError(f"map refers to unknown point {exc.args[0]!r}") from None
    sys = FiniteSystem(names, dist, step, validate=False)
    subsets = {}
    for name, members in (data.get("subsets") or {}).items():
        unknown = [m for m in members if str(m) not in index]
        if unknown:
            raise SchemaError(f"subset {name!r} refers to unknown point {unknown[0]!r}")
        subsets[str(name)] = sys.subset(str(m) for m in members)
    return sys, subsets


def system_to_dict(sys: FiniteSystem, subsets: dict[str, SubsetRef] | None = None) -> dict:
    names = [str(p) for p in sys.points]
    m = sys.metric
    if isinstance(m, CoordMetric):
        metric = {"coords": m.coords.tolist(), "kind": m.kind}
    else:
        t = m.table()
        metric = {"table": t[np.triu_indices(len(names), 1)].tolist()}
    out = {"points": names, "metric": metric, "map": [names[int(j)] for j in sys.step]}
    if subsets:
        out["subsets"] = {k: [names[i] for i in sorted(v.members)] for k, v in sorted(subsets.items())}
    return out


def sft_from_dict(data: dict) -> tuple[SftSpec, dict[str, CylinderSet]]:
    if "alphabet" not in data:
        raise SchemaError("SFT file is missing 'alphabet'")
    alphabet = [str(a) for a in data["alphabet"]]
    try:
        if "transitions" in data:
            sft = SftSpec.from_matrix(alphabet, data["transitions"], name=str(data.get("name", "")))
        elif "forbidden" in data:
            sft = SftSpec.from_forbidden(alphabet, data["forbidden"], name=str(data.get("name", "")))
        else:
            raise SchemaError("SFT file needs 'transitions' or 'forbidden'")
        subsets = {str(k): CylinderSet.of(sft, v) for k, v in (data.get("subsets") or {}).items()}
    except SchemaError:
        raise
    except (ValueError, TypeError) as exc:
        raise SchemaError(str(exc)) from None
    return sft, subsets


def load(path: str | Path):
    """Load a system file; returns ``(target, subsets)`` for either schema."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    if isinstance(data, dict) and "alphabet" in data:
        return sft_from_dict(data)
    return system_from_dict(data)


def dumps(obj) -> str:
    """Deterministic JSON text (sorted keys, fixed separators, trailing newline)."""
    return json.dumps(obj, sort_keys=True, indent=2, default=_default) + "\n"


def _default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, (set, frozenset, tuple)):
        return list(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")
