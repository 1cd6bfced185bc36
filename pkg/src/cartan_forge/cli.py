"""Command-line front end: ``cartan-forge <subcommand> ...``.

Geometry arguments are JSON geometry files or ``catalog:NAME`` (for example
``catalog:sphere2(2)``).  Every run writes a JSON summary (and CSV data when
requested) into the output directory; identical inputs give byte-identical
files.  Exit status: 0 success, 1 computational failure, 2 input error.
"""
from __future__ import annotations

import argparse
import itertools
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import catalog as _catalog
from .cartan import Status, first_bianchi, is_flat, second_bianchi, zero_verdict
from .cosserat import (
    LoadField,
    ShapeMismatchError,
    classical_limit_check,
    force_residual,
    geometry_to_medium,
    read_medium_csv,
    torque_residual,
)
from .einstein import (
    EINSTEIN_FORM_SIGN,
    LAGRANGIAN_CONSTANT,
    cartan_constraint,
    covariant_exterior_derivative,
    einstein_form,
    einstein_tensor,
    generalized_einstein_form,
    hodge_einstein_form,
    lagrangian_coefficient,
    three_dim_einstein,
    vector_couple_invariant,
)
from .exterior import frame_components
from .geometry_file import GeometryFileError, GeometrySpec, export_entry, load_geometry, parse_geometry
from .kernel import KernelError
from .report import ReportError, to_json, write_csv, write_json
from .transport import (
    DomainExitError,
    NonClosedLoopError,
    TransportError,
    autoparallel,
    geodesic,
    loop_holonomy,
    parallel_transport,
)

__all__ = ["main", "build_parser", "InputError"]

DEFAULT_OUT = "cartan_forge_out"


class InputError(ValueError):
    pass


class ComputationFailure(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# shared helpers


def _load(source: str) -> GeometrySpec:
    if source.startswith("catalog:"):
        name = source[len("catalog:"):]
        try:
            entry = _catalog.builtin(name)
        except (_catalog.UnknownEntryError, ValueError) as exc:
            raise InputError(f"catalog: {exc}") from exc
        return parse_geometry(export_entry(entry), name=entry.name)
    return load_geometry(source)


def _stem(spec: GeometrySpec) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in spec.name)


def _frame_key(prefix: str, upper: int, lower: Sequence[int]) -> str:
    return f"{prefix}^{upper + 1}_" + "".join(str(i + 1) for i in lower)


def _verdict(items, spec: GeometrySpec, args) -> dict:
    return zero_verdict(items, spec.frame, tolerance=args.tolerance, seed=args.seed).as_dict()


def _vector(text: str | None, n: int, what: str) -> np.ndarray | None:
    if text is None:
        return None
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise InputError(f"--{what}: expected comma-separated numbers") from exc
    if len(vals) != n:
        raise InputError(f"--{what}: expected {n} components, got {len(vals)}")
    return np.array(vals)


def _experiment_args(spec: GeometrySpec, op: str) -> dict:
    for ex in spec.experiments:
        if ex["op"] == op:
            return ex["args"]
    return {}


def _pick(flag_value, ex_args: dict, key: str, n: int, what: str):
    if flag_value is not None:
        return flag_value
    if key in ex_args:
        v = np.asarray(ex_args[key], dtype=float)
        if v.shape != (n,):
            raise InputError(f"experiment argument {key} needs {n} components")
        return v
    raise InputError(f"--{what} is required (no experiment in the file provides {key!r})")


class _Emitter:
    def __init__(self, args, stem: str, command: str):
        self.out = Path(args.out)
        self.fmt = args.format
        self.base = f"{stem}.{command}"
        self.written: list[str] = []

    def json(self, payload: dict) -> None:
        if self.fmt in ("json", "both"):
            write_json(self.out / f"{self.base}.json", payload)
            self.written.append(f"{self.base}.json")

    def csv(self, suffix: str, header, rows) -> None:
        if self.fmt in ("csv", "both"):
            name = f"{self.base}{suffix}.csv"
            write_csv(self.out / name, header, rows)
            self.written.append(name)


def _finish(em: _Emitter, payload: dict, ok: bool = True) -> int:
    em.json(payload)
    for name in em.written:
        print(str(em.out / name))
    if em.fmt == "csv" and not em.written:
        sys.stdout.write(to_json(payload))
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# subcommands


def cmd_check(args) -> int:
    spec = _load(args.geometry)
    n = spec.frame.n
    payload = {
        "command": "check",
        "geometry": spec.name,
        "dimension": n,
        "coordinates": list(spec.frame.chart.coordinates),
        "signature": list(spec.frame.signature),
        "connection": "levi-civita" if spec.is_levi_civita else "explicit",
        "metricity": "validated",
        "curves": sorted(spec.curves),
        "loops": sorted(spec.loops),
        "fields": spec.medium is not None,
        "experiments": [ex["name"] for ex in spec.experiments],
        "valid": True,
    }
    return _finish(_Emitter(args, _stem(spec), "check"), payload)


def _curvature_payload(spec: GeometrySpec, args) -> dict:
    C = spec.connection
    n = C.n
    data = C.data
    tors, curv = {}, {}
    for i in range(n):
        for j, k in itertools.combinations(range(n), 2):
            v = data.A_torsion(i, j, k)
            if v:
                tors[_frame_key("A", i, (j, k))] = str(v)
    for i, j in itertools.product(range(n), repeat=2):
        for k, l in itertools.combinations(range(n), 2):
            v = data.A_curvature(i, j, k, l)
            if v:
                curv[_frame_key("A", i, (j, k, l))] = str(v)
    omega = {}
    for i, j in itertools.product(range(n), repeat=2):
        w = C.omega[i][j]
        if not w.is_zero_literal:
            omega[f"omega^{i + 1}_{j + 1}"] = str(w)
    return {
        "command": "curvature",
        "geometry": spec.name,
        "parameters": dict(spec.frame.params),
        "connection_forms": omega,
        "torsion_components": tors,
        "curvature_components": curv,
        "flatness": {
            "rotational": is_flat(C, "rotational").value,
            "torsion": is_flat(C, "torsion").value,
            "both": is_flat(C, "both").value,
        },
        "bianchi": {
            "first": _verdict(first_bianchi(C), spec, args),
            "second": _verdict(second_bianchi(C), spec, args),
        },
    }


def cmd_curvature(args) -> int:
    spec = _load(args.geometry)
    payload = _curvature_payload(spec, args)
    ok = payload["bianchi"]["first"]["status"] != Status.REFUTED.value and payload["bianchi"]["second"]["status"] != Status.REFUTED.value
    return _finish(_Emitter(args, _stem(spec), "curvature"), payload, ok)


def _curve(spec: GeometrySpec, name: str | None, pool: dict, what: str):
    if not pool:
        raise InputError(f"the geometry defines no {what}s")
    if name is None:
        name = sorted(pool)[0]
    if name not in pool:
        raise InputError(f"unknown {what} {name!r}; available: {', '.join(sorted(pool))}")
    return name, pool[name]


def cmd_transport(args) -> int:
    spec = _load(args.geometry)
    n = spec.frame.n
    ex = _experiment_args(spec, "transport")
    cname, curve = _curve(spec, args.curve or ex.get("curve"), spec.curves, "curve")
    v0 = _pick(_vector(args.v0, n, "v0"), ex, "v0", n, "v0")
    v, path = parallel_transport(spec.connection, curve, v0, args.step, return_path=True)
    payload = {
        "command": "transport",
        "geometry": spec.name,
        "curve": cname,
        "step": args.step,
        "v0": v0.tolist(),
        "v_final": v.tolist(),
        "frame_norm_initial": float(np.dot(np.asarray(spec.frame.signature), v0**2)),
        "frame_norm_final": float(np.dot(np.asarray(spec.frame.signature), v**2)),
    }
    em = _Emitter(args, _stem(spec), "transport")
    em.csv("", ["k"] + [f"v{i + 1}" for i in range(n)], ([k, *row] for k, row in enumerate(path)))
    return _finish(em, payload)


def _trajectory(args, op: str) -> int:
    spec = _load(args.geometry)
    n = spec.frame.n
    ex = _experiment_args(spec, op)
    x0 = _pick(_vector(args.x0, n, "x0"), ex, "x0", n, "x0")
    v0 = _pick(_vector(args.v0, n, "v0"), ex, "v0", n, "v0")
    t_end = args.t_end if args.t_end is not None else float(ex.get("t_end", 1.0))
    if op == "geodesic":
        traj = geodesic(spec.frame, x0, v0, args.step, t_end)
    else:
        traj = autoparallel(spec.connection, x0, v0, args.step, t_end)
    norm = traj.norm2()
    payload = {
        "command": op,
        "geometry": spec.name,
        "step": args.step,
        "t_end": t_end,
        "x0": x0.tolist(),
        "v0": v0.tolist(),
        "steps": int(len(traj.t) - 1),
        "x_final": traj.x[-1].tolist(),
        "v_final": traj.v[-1].tolist(),
        "frame_norm_drift": float(np.max(np.abs(norm - norm[0]))),
    }
    em = _Emitter(args, _stem(spec), op)
    em.csv("", ["t"] + [f"x{i + 1}" for i in range(n)] + [f"v{i + 1}" for i in range(n)],
           ([traj.t[k], *traj.x[k], *traj.v[k]] for k in range(len(traj.t))))
    return _finish(em, payload)


def cmd_geodesic(args) -> int:
    return _trajectory(args, "geodesic")


def cmd_autoparallel(args) -> int:
    return _trajectory(args, "autoparallel")


def cmd_holonomy(args) -> int:
    spec = _load(args.geometry)
    ex = _experiment_args(spec, "holonomy")
    lname, loop = _curve(spec, args.loop or ex.get("loop"), spec.loops, "loop")
    res = loop_holonomy(spec.connection, loop, args.step)
    payload = {"command": "holonomy", "geometry": spec.name, "loop": lname, **res.as_dict()}
    return _finish(_Emitter(args, _stem(spec), "holonomy"), payload)


def _forms_dict(forms, F, prefix: str) -> dict:
    out = {}
    for i, f in forms:
        for key, v in sorted(frame_components(f, F).items()):
            if v:
                out[f"{prefix}{i}[" + "".join(str(k + 1) for k in key) + "]"] = str(v)
    return out


def cmd_einstein(args) -> int:
    spec = _load(args.geometry)
    C = spec.connection
    F = spec.frame
    n = C.n
    ed = einstein_tensor(C, alpha=args.alpha, beta=args.beta)
    payload = {
        "command": "einstein",
        "geometry": spec.name,
        "alpha": args.alpha,
        "beta": args.beta,
        "ricci": [[str(e) for e in row] for row in ed.ricci],
        "scalar_curvature": str(ed.R),
        "einstein_tensor": [[str(e) for e in row] for row in ed.G],
    }
    ok = True
    if n == 4:
        Pi = einstein_form(C)
        H = hodge_einstein_form(F, einstein_tensor(C).G)
        diff = [Pi.vec(i, C.chart) - H[i] * EINSTEIN_FORM_SIGN for i in range(4)]
        gen = generalized_einstein_form(C)
        cons = cartan_constraint(C)
        lag = lagrangian_coefficient(C)
        eps = F.signature
        prod = eps[0] * eps[1] * eps[2] * eps[3]
        # positively oriented coframe: det theta is the volume density
        expected = einstein_tensor(C).R * (LAGRANGIAN_CONSTANT * prod) * F.det
        payload.update({
            "einstein_form": _forms_dict(Pi.vector.items(), F, "Pi^"),
            "einstein_form_sign": EINSTEIN_FORM_SIGN,
            "hodge_agreement": _verdict(diff, spec, args),
            "conservation": _verdict(covariant_exterior_derivative(Pi, C).forms(), spec, args),
            "bivector_part": _forms_dict(((f"{a + 1}{b + 1}", f) for (a, b), f in gen.bivector.items()), F, "Pi^"),
            "generalized_conservation": _verdict(covariant_exterior_derivative(gen, C).forms(), spec, args),
            "cartan_constraint": [str(e) for e in cons],
            "cartan_constraint_verdict": _verdict(cons, spec, args),
            "lagrangian_coefficient": str(lag),
            "lagrangian_constant": LAGRANGIAN_CONSTANT,
            "lagrangian_check": _verdict([lag - expected], spec, args),
        })
        ok = payload["hodge_agreement"]["status"] != "refuted" and payload["lagrangian_check"]["status"] != "refuted"
    elif n == 3:
        inv = vector_couple_invariant(C)
        payload.update({
            "three_dim_einstein": _forms_dict(enumerate(three_dim_einstein(C)), F, "T^"),
            "vector_part": _forms_dict(inv.vector.items(), F, "F^"),
            "couple_part": _forms_dict(((f"{a + 1}{b + 1}", f) for (a, b), f in inv.bivector.items()), F, "B^"),
        })
    return _finish(_Emitter(args, _stem(spec), "einstein"), payload, ok)


def cmd_cosserat(args) -> int:
    if args.csv:
        try:
            M = read_medium_csv(args.csv)
        except (OSError, ShapeMismatchError, ValueError) as exc:
            raise InputError(f"{args.csv}: {exc}") from exc
        L = LoadField()
        stem = Path(args.csv).stem
        extra: dict = {}
    else:
        if args.geometry is None:
            raise InputError("cosserat needs a geometry file with a 'fields' section or --csv")
        spec = _load(args.geometry)
        stem = _stem(spec)
        extra = {}
        if spec.frame.n == 3:
            extra["geometry_medium"] = geometry_to_medium(spec.connection, args.tolerance).as_dict()
        if spec.medium is None:
            if not extra:
                raise InputError("fields: the geometry has no Cosserat fields")
            M = None
        else:
            M, L = spec.medium
    payload = {"command": "cosserat", "source": stem, **extra}
    em = _Emitter(args, stem, "cosserat")
    if M is not None:
        fr = force_residual(M, L)
        tr = torque_residual(M, L)
        cl = classical_limit_check(M, L, args.tolerance)
        payload.update({
            "grid": {"shape": list(M.grid.shape), "spacing": list(M.grid.spacing), "origin": list(M.grid.origin)},
            "mode": "symbolic" if fr.exprs is not None else "array",
            "force_residual": fr.summary(),
            "torque_residual": tr.summary(),
            "classical_limit": cl.as_dict(),
        })
        if fr.exprs is not None:
            payload["force_residual"]["exprs"] = [str(e) for e in fr.exprs]
            payload["torque_residual"]["exprs"] = [str(e) for e in tr.exprs]
        X1, X2, X3 = M.grid.nodes()
        rows = []
        for a, b, c in itertools.product(*(range(s) for s in M.grid.shape)):
            rows.append([a, b, c, X1[a, b, c], X2[a, b, c], X3[a, b, c],
                         *fr.values[:, a, b, c], *tr.values[:, a, b, c]])
        em.csv("", ["i", "j", "k", "x1", "x2", "x3", "rf1", "rf2", "rf3", "rt1", "rt2", "rt3"], rows)
    return _finish(em, payload)


def cmd_catalog(args) -> int:
    action = args.action
    if action == "list":
        payload = {"command": "catalog-list", "entries": []}
        for name in _catalog.NAMES:
            e = _catalog.builtin(name)
            payload["entries"].append({
                "name": name,
                "dimension": e.frame.n,
                "signature": list(e.frame.signature),
                "parameters": dict(e.frame.params),
                "connection": "levi-civita" if e.is_levi_civita else "explicit",
                "description": e.description,
            })
        for item in payload["entries"]:
            print(item["name"])
        em = _Emitter(args, "catalog", "list")
        em.json(payload)
        return 0
    if not args.name:
        raise InputError(f"catalog {action} needs an entry name")
    entry = _catalog.corrupted_fixture() if args.name == "sphere2-corrupted" else _load_entry(args.name)
    if action == "export":
        path = Path(args.out) / f"{entry.name}.json"
        write_json(path, export_entry(entry))
        print(str(path))
        return 0
    report = _catalog.verify_ledger(entry)
    em = _Emitter(args, entry.name, "verify")
    payload = {"command": "catalog-verify", **report.as_dict()}
    for r in report.results:
        print(f"{'PASS' if r.passed else 'FAIL'} {entry.name} {r.claim.kind} {' '.join(map(str, r.claim.args))}".rstrip())
    return _finish(em, payload, report.passed)


def _load_entry(name: str):
    try:
        return _catalog.builtin(name)
    except (_catalog.UnknownEntryError, ValueError) as exc:
        raise InputError(f"catalog: {exc}") from exc


def cmd_verify(args) -> int:
    """Structure identities plus every experiment listed in the file."""
    spec = _load(args.geometry)
    C = spec.connection
    checks = {
        "first_bianchi": _verdict(first_bianchi(C), spec, args),
        "second_bianchi": _verdict(second_bianchi(C), spec, args),
        "dd_zero": _verdict([f.d().d() for f in spec.frame.coframe], spec, args),
    }
    results = []
    for ex in spec.experiments:
        sub = argparse.Namespace(**vars(args))
        sub.format = "json"
        a = ex["args"]
        for key in ("x0", "v0"):
            setattr(sub, key, ",".join(repr(float(v)) for v in a[key]) if key in a else None)
        sub.t_end = float(a["t_end"]) if "t_end" in a else None
        sub.step = float(a.get("step", args.step))
        sub.curve = a.get("curve")
        sub.loop = a.get("loop")
        sub.alpha = float(a.get("alpha", args.alpha))
        sub.beta = float(a.get("beta", args.beta))
        sub.csv = None
        try:
            code = _DISPATCH[ex["op"]](sub)
        except (TransportError, KernelError, ArithmeticError, NonClosedLoopError) as exc:
            code = 1
            results.append({"name": ex["name"], "op": ex["op"], "exit": code, "error": str(exc)})
            continue
        results.append({"name": ex["name"], "op": ex["op"], "exit": code})
    ok = all(v["status"] != "refuted" for v in checks.values()) and all(r["exit"] == 0 for r in results)
    payload = {"command": "verify", "geometry": spec.name, "checks": checks, "experiments": results, "passed": ok}
    return _finish(_Emitter(args, _stem(spec), "verify"), payload, ok)


_DISPATCH = {
    "check": cmd_check,
    "curvature": cmd_curvature,
    "transport": cmd_transport,
    "geodesic": cmd_geodesic,
    "autoparallel": cmd_autoparallel,
    "holonomy": cmd_holonomy,
    "einstein": cmd_einstein,
    "cosserat": cmd_cosserat,
    "catalog": cmd_catalog,
    "verify": cmd_verify,
}


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--step", type=float, default=1e-3, help="integration step (default 1e-3)")
    common.add_argument("--t-end", dest="t_end", type=float, default=None, help="final parameter time")
    common.add_argument("--tolerance", type=float, default=1e-10, help="numeric zero tolerance")
    common.add_argument("--out", default=os.environ.get("CARTAN_FORGE_OUT", DEFAULT_OUT),
                        help="output directory (default $CARTAN_FORGE_OUT or ./cartan_forge_out)")
    common.add_argument("--format", choices=("json", "csv", "both"), default="json")
    common.add_argument("--seed", type=int, default=1922, help="seed for sampled zero tests")
    common.add_argument("--loop", default=None, help="loop name for holonomy")
    common.add_argument("--curve", default=None, help="curve name for transport")
    common.add_argument("--x0", default=None, help="initial point, comma separated")
    common.add_argument("--v0", default=None, help="initial vector, comma separated")
    common.add_argument("--alpha", type=float, default=1.0, help="Einstein tensor coefficient alpha")
    common.add_argument("--beta", type=float, default=0.0, help="Einstein tensor coefficient beta")

    p = argparse.ArgumentParser(prog="cartan-forge", description="Riemann-Cartan moving-frame computations.")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "check": "validate a geometry file",
        "curvature": "torsion and curvature components, flatness, Bianchi checks",
        "transport": "parallel transport of a frame vector along a curve",
        "geodesic": "integrate a Levi-Civita geodesic",
        "autoparallel": "integrate an autoparallel of the file's connection",
        "holonomy": "rotation and translation defect around a loop",
        "einstein": "Einstein tensor, Einstein form and related reports",
        "verify": "structure identities and every experiment in the file",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, parents=[common], help=text)
        sp.add_argument("geometry", help="geometry JSON file or catalog:NAME")
    sp = sub.add_parser("cosserat", parents=[common], help="Cosserat equilibrium residual reports")
    sp.add_argument("geometry", nargs="?", default=None, help="geometry JSON file with a 'fields' section")
    sp.add_argument("--csv", default=None, help="node-array CSV input instead of a geometry file")
    sp = sub.add_parser("catalog", parents=[common], help="list, export or verify catalog entries")
    sp.add_argument("action", choices=("list", "export", "verify"))
    sp.add_argument("name", nargs="?", default=None)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _DISPATCH[args.command](args)
    except (InputError, GeometryFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ReportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DomainExitError as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 1
    except NonClosedLoopError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TransportError, KernelError, ArithmeticError, ComputationFailure) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
