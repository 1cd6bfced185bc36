"""JSON geometry files: loading with key-level validation, and export.

A geometry file is a JSON object::

    {
      "name": "sphere2",                          (optional)
      "dimension": 2,
      "coordinates": ["theta", "phi"],
      "bounds": [[0.3, 2.8], [-3, 7]],            (optional sampling box)
      "signature": [1, 1],
      "parameters": {"r": 1.0},                   (numbers or constant expressions)
      "coframe": [["r", "0"], ["0", "r*sin(theta)"]],
      "connection": "levi-civita",                (or an n x n x n array of
                                                   coefficient strings: entry
                                                   [i][j][mu] multiplies dx^mu
                                                   in omega^i_j)
      "curves": {"c": {"coords": ["theta", "s"], "param": "s", "interval": [0, 1]}},
      "loops": {"l": {"square": {"base": [1, 0], "h": 0.01, "plane": [0, 1]}}},
      "fields": {"grid": {"lower": [0, 0, 0], "upper": [1, 1, 1], "nodes": 9},
                 "p": [[...]], "q": [[...]], "X": [...], "L": [...]},
      "experiments": [{"name": "geo", "op": "geodesic",
                       "args": {"x0": [1, 0], "v0": [0, 1], "t_end": 1}}]
    }

Every validation failure raises :class:`GeometryFileError` whose ``key``
names the offending entry (for example ``coframe[1][1]``).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .cartan import CartanConnection, FrameField, MetricityError, levi_civita
from .cosserat import Grid, LoadField, MediumField
from .expr import Chart, Expr, ParseError, UnknownSymbolError, evaluate, parse
from .exterior import Form, SingularCoframeError
from .transport import CurveSpec, square_loop

__all__ = ["GeometryFileError", "GeometrySpec", "load_geometry", "parse_geometry", "export_entry", "KNOWN_OPS"]

KNOWN_OPS = ("curvature", "transport", "geodesic", "autoparallel", "holonomy", "einstein", "cosserat")
_TOP_KEYS = {
    "name", "description", "dimension", "coordinates", "bounds", "signature", "parameters",
    "coframe", "connection", "curves", "loops", "fields", "experiments", "schema_version",
}


class GeometryFileError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass
class GeometrySpec:
    name: str
    frame: FrameField
    connection: CartanConnection
    is_levi_civita: bool
    curves: dict[str, CurveSpec] = field(default_factory=dict)
    loops: dict[str, CurveSpec] = field(default_factory=dict)
    medium: tuple[MediumField, LoadField] | None = None
    experiments: list[dict] = field(default_factory=list)
    document: dict = field(default_factory=dict)


def _require(doc: Mapping, key: str, where: str = ""):
    if key not in doc:
        raise GeometryFileError(where + key, "missing required key")
    return doc[key]


def _expr(text, key: str, symbols) -> Expr:
    if isinstance(text, bool):
        raise GeometryFileError(key, "expected an expression string or number")
    if isinstance(text, (int, float)):
        text = repr(text)
    if not isinstance(text, str):
        raise GeometryFileError(key, "expected an expression string or number")
    try:
        return parse(text, symbols)
    except UnknownSymbolError as exc:
        raise GeometryFileError(key, f"unknown symbol {exc.name!r}") from exc
    except ParseError as exc:
        raise GeometryFileError(key, str(exc)) from exc


def _list(v, key: str, length: int | None = None) -> list:
    if not isinstance(v, list):
        raise GeometryFileError(key, "expected a list")
    if length is not None and len(v) != length:
        raise GeometryFileError(key, f"expected {length} entries, got {len(v)}")
    return v


def _numbers(v, key: str, length: int | None = None) -> list[float]:
    out = []
    for k, x in enumerate(_list(v, key, length)):
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise GeometryFileError(f"{key}[{k}]", "expected a number")
        out.append(float(x))
    return out


def parse_geometry(doc: Mapping, name: str = "") -> GeometrySpec:
    """Validate a decoded geometry document and build its objects."""
    if not isinstance(doc, Mapping):
        raise GeometryFileError("<root>", "expected a JSON object")
    unknown = sorted(set(doc) - _TOP_KEYS)
    if unknown:
        raise GeometryFileError(unknown[0], "unknown key")
    n = _require(doc, "dimension")
    if isinstance(n, bool) or not isinstance(n, int) or not 2 <= n <= 4:
        raise GeometryFileError("dimension", "must be an integer between 2 and 4")
    coords = _list(_require(doc, "coordinates"), "coordinates", n)
    if not all(isinstance(c, str) for c in coords):
        raise GeometryFileError("coordinates", "names must be strings")
    bounds = None
    if "bounds" in doc:
        b = _list(doc["bounds"], "bounds", n)
        bounds = [tuple(_numbers(pair, f"bounds[{k}]", 2)) for k, pair in enumerate(b)]
    try:
        chart = Chart(tuple(coords), tuple(bounds) if bounds else None)
    except ValueError as exc:
        raise GeometryFileError("bounds" if bounds and "bounds" in str(exc) else "coordinates", str(exc)) from exc
    sig = _list(_require(doc, "signature"), "signature", n)
    if any(s not in (1, -1) or isinstance(s, bool) for s in sig):
        raise GeometryFileError("signature", "entries must be +1 or -1")

    params: dict[str, float] = {}
    raw_params = doc.get("parameters", {})
    if not isinstance(raw_params, Mapping):
        raise GeometryFileError("parameters", "expected an object")
    for pname, pval in sorted(raw_params.items()):
        key = f"parameters.{pname}"
        if not pname.isidentifier() or pname in coords:
            raise GeometryFileError(key, "invalid parameter name")
        e = _expr(pval, key, ())
        try:
            params[pname] = evaluate(e)
        except ArithmeticError as exc:
            raise GeometryFileError(key, f"cannot evaluate: {exc}") from exc
    symbols = tuple(coords) + tuple(params)

    cf = _list(_require(doc, "coframe"), "coframe", n)
    coframe = []
    for i, row in enumerate(cf):
        row = _list(row, f"coframe[{i}]", n)
        coframe.append(Form.one_form(chart, [_expr(c, f"coframe[{i}][{mu}]", symbols) for mu, c in enumerate(row)]))
    try:
        frame = FrameField(chart, tuple(sig), coframe, params)
    except SingularCoframeError as exc:
        raise GeometryFileError("coframe", str(exc)) from exc

    conn_doc = _require(doc, "connection")
    if conn_doc == "levi-civita":
        connection = levi_civita(frame)
        is_lc = True
    else:
        rows = _list(conn_doc, "connection", n)
        omega = []
        for i, row in enumerate(rows):
            row = _list(row, f"connection[{i}]", n)
            out = []
            for j, coeffs in enumerate(row):
                coeffs = _list(coeffs, f"connection[{i}][{j}]", n)
                out.append(Form.one_form(chart, [_expr(c, f"connection[{i}][{j}][{mu}]", symbols) for mu, c in enumerate(coeffs)]))
            omega.append(out)
        try:
            connection = CartanConnection(frame, omega, validate=True, label=name)
        except MetricityError as exc:
            raise GeometryFileError("connection", str(exc)) from exc
        is_lc = False

    curves = {}
    for cname, cdoc in sorted(doc.get("curves", {}).items()):
        curves[cname] = _curve(cdoc, f"curves.{cname}", n)
    loops = {}
    for lname, ldoc in sorted(doc.get("loops", {}).items()):
        key = f"loops.{lname}"
        if isinstance(ldoc, Mapping) and "square" in ldoc:
            sq = ldoc["square"]
            base = _numbers(_require(sq, "base", key + ".square."), key + ".square.base", n)
            h = _require(sq, "h", key + ".square.")
            if isinstance(h, bool) or not isinstance(h, (int, float)) or not h > 0:
                raise GeometryFileError(key + ".square.h", "must be a positive number")
            plane = sq.get("plane", [0, 1])
            if (not isinstance(plane, list) or len(plane) != 2 or len(set(plane)) != 2
                    or not all(isinstance(a, int) and 0 <= a < n for a in plane)):
                raise GeometryFileError(key + ".square.plane", "needs two distinct axis indices")
            loops[lname] = square_loop(base, float(h), tuple(plane))
        else:
            loops[lname] = _curve(ldoc, key, n)

    medium = _fields(doc["fields"]) if "fields" in doc else None

    experiments = []
    for k, ex in enumerate(_list(doc.get("experiments", []), "experiments")):
        key = f"experiments[{k}]"
        if not isinstance(ex, Mapping):
            raise GeometryFileError(key, "expected an object")
        op = _require(ex, "op", key + ".")
        if op not in KNOWN_OPS:
            raise GeometryFileError(key + ".op", f"unknown operation {op!r}")
        args = ex.get("args", {})
        if not isinstance(args, Mapping):
            raise GeometryFileError(key + ".args", "expected an object")
        experiments.append({"name": str(ex.get("name", f"{op}-{k}")), "op": op, "args": dict(args)})

    return GeometrySpec(
        name=str(doc.get("name", name or "geometry")),
        frame=frame,
        connection=connection,
        is_levi_civita=is_lc,
        curves=curves,
        loops=loops,
        medium=medium,
        experiments=experiments,
        document=dict(doc),
    )


def _curve(cdoc, key: str, n: int) -> CurveSpec:
    if not isinstance(cdoc, Mapping):
        raise GeometryFileError(key, "expected an object")
    if "points" in cdoc:
        pts = [tuple(_numbers(p, f"{key}.points[{k}]", n)) for k, p in enumerate(_list(cdoc["points"], key + ".points"))]
        if len(pts) < 2:
            raise GeometryFileError(key + ".points", "need at least two points")
        return CurveSpec(points=tuple(pts))
    param = cdoc.get("param", "s")
    if not isinstance(param, str) or not param.isidentifier():
        raise GeometryFileError(key + ".param", "must be an identifier")
    exprs = [_expr(c, f"{key}.coords[{k}]", (param,)) for k, c in enumerate(_list(_require(cdoc, "coords", key + "."), key + ".coords", n))]
    interval = _numbers(cdoc.get("interval", [0.0, 1.0]), key + ".interval", 2)
    if not interval[1] > interval[0]:
        raise GeometryFileError(key + ".interval", "must be increasing")
    return CurveSpec(coords=tuple(exprs), param=param, interval=tuple(interval))


def _fields(fdoc) -> tuple[MediumField, LoadField]:
    if not isinstance(fdoc, Mapping):
        raise GeometryFileError("fields", "expected an object")
    gdoc = _require(fdoc, "grid", "fields.")
    lower = _numbers(_require(gdoc, "lower", "fields.grid."), "fields.grid.lower", 3)
    upper = _numbers(_require(gdoc, "upper", "fields.grid."), "fields.grid.upper", 3)
    nodes = _require(gdoc, "nodes", "fields.grid.")
    nodes = [nodes] * 3 if isinstance(nodes, int) else _list(nodes, "fields.grid.nodes", 3)
    if not all(isinstance(v, int) and v >= 3 for v in nodes):
        raise GeometryFileError("fields.grid.nodes", "need integers >= 3")
    if any(u <= lo for lo, u in zip(lower, upper)):
        raise GeometryFileError("fields.grid.upper", "must exceed lower on every axis")
    grid = Grid.box(lower, upper, tuple(nodes))
    syms = ("x1", "x2", "x3")

    def mat(name):
        if name not in fdoc:
            return None
        rows = _list(fdoc[name], f"fields.{name}", 3)
        return [[_expr(c, f"fields.{name}[{i}][{j}]", syms) for j, c in enumerate(_list(r, f"fields.{name}[{i}]", 3))] for i, r in enumerate(rows)]

    def vec(name):
        if name not in fdoc:
            return None
        return [_expr(c, f"fields.{name}[{i}]", syms) for i, c in enumerate(_list(fdoc[name], f"fields.{name}", 3))]

    return MediumField(grid, mat("p"), mat("q")), LoadField(vec("X"), vec("L"))


def load_geometry(path) -> GeometrySpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise GeometryFileError("<file>", f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GeometryFileError("<json>", f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return parse_geometry(doc, name=path.stem)


def export_entry(entry) -> dict:
    """Geometry document for a catalog entry; reloading it rebuilds the same objects."""
    F = entry.frame
    doc = {
        "name": entry.name,
        "description": entry.description,
        "dimension": F.n,
        "coordinates": list(F.chart.coordinates),
        "signature": list(F.signature),
        "parameters": {k: float(v) for k, v in sorted(F.params.items())},
        "coframe": [[str(c) for c in row] for row in F.matrix],
    }
    if F.chart.bounds is not None:
        doc["bounds"] = [list(b) for b in F.chart.bounds]
    if entry.connection_matrix is None:
        doc["connection"] = "levi-civita"
    else:
        doc["connection"] = [[[str(c) for c in w.one_form_coefficients()] for w in row] for row in entry.connection_matrix]
    return doc
