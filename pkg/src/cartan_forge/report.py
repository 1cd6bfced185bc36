"""Deterministic report serialization.

JSON reports carry a ``schema_version`` field, sorted keys and every float
printed as ``%.12e`` so identical inputs give byte-identical files.  Files are
written to a temporary sibling and renamed into place.
"""
from __future__ import annotations

import enum
import json
import math
import os
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .expr import Expr

__all__ = ["SCHEMA_VERSION", "to_json", "format_float", "atomic_write_text", "write_json", "write_csv", "ReportError"]

SCHEMA_VERSION = "1.0"


class ReportError(OSError):
    pass


def format_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return "%.12e" % x


def _emit(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        return str(int(obj))
    if isinstance(obj, (float, np.floating, Fraction)):
        return format_float(obj)
    if isinstance(obj, enum.Enum):
        return _emit(obj.value, indent, level)
    if isinstance(obj, (str, Expr)):
        return json.dumps(str(obj))
    if isinstance(obj, np.ndarray):
        return _emit(obj.tolist(), indent, level)
    if isinstance(obj, Mapping):
        if not obj:
            return "{}"
        items = sorted((str(k), v) for k, v in obj.items())
        body = (",\n").join(f"{pad}{json.dumps(k)}: {_emit(v, indent, level + 1)}" for k, v in items)
        return "{\n" + body + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.number, Fraction, str, Expr)) or v is None for v in obj):
            return "[" + ", ".join(_emit(v, indent, level + 1) for v in obj) + "]"
        body = (",\n").join(pad + _emit(v, indent, level + 1) for v in obj)
        return "[\n" + body + "\n" + end + "]"
    if hasattr(obj, "as_dict"):
        return _emit(obj.as_dict(), indent, level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_json(payload: Mapping, indent: int = 2) -> str:
    """Canonical JSON text; ``schema_version`` is added when missing."""
    doc = dict(payload)
    doc.setdefault("schema_version", SCHEMA_VERSION)
    return _emit(doc, indent, 0) + "\n"


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    except OSError as exc:
        raise ReportError(f"cannot write {path}: {exc}") from exc
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise ReportError(f"cannot write {path}: {exc}") from exc
    return path


def write_json(path, payload: Mapping) -> Path:
    return atomic_write_text(path, to_json(payload))


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Numeric cells as ``%.12e``; integers and strings verbatim."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (bool, str)):
                cells.append(str(v))
            elif isinstance(v, (int, np.integer)):
                cells.append(str(int(v)))
            else:
                cells.append("%.12e" % float(v))
        lines.append(",".join(cells))
    return atomic_write_text(path, "\n".join(lines) + "\n")
