"""Reference geometries, the Lie-group teleparallel constructor and ledgers.

Every entry carries machine-checkable claims ("ledger") that
:func:`verify_ledger` re-derives with the cartan, transport and einstein
modules.  Parameters (radius ``r``, torsion strength ``alpha``) stay symbolic
in the forms and are bound numerically through ``FrameField.params``.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .cartan import (
    CartanConnection,
    Flatness,
    FrameField,
    Signature,
    Status,
    first_bianchi,
    is_flat,
    levi_civita,
    second_bianchi,
    zero_verdict,
)
from .expr import ONE, ZERO, Chart, Expr, as_expr, cos, evaluate, exp, is_zero, sin, sqrt, symbol, ZeroStatus
from .exterior import Form

__all__ = [
    "StructureConstants",
    "JacobiError",
    "CatalogEntry",
    "Claim",
    "ClaimResult",
    "LedgerReport",
    "UnknownEntryError",
    "NAMES",
    "builtin",
    "lie_group_teleparallel",
    "so3_constants",
    "verify_ledger",
    "corrupted_fixture",
    "levi_civita_symbol",
]

NAMES = (
    "flat2", "flat3", "polar2", "sphere2", "sphere3_lc", "sphere3_tele",
    "staircase", "minkowski", "diag4", "mink-torsion",
)

DEFAULTS = {"sphere2": 1.0, "sphere3_lc": 1.0, "sphere3_tele": 1.0, "staircase": 0.3, "mink-torsion": 0.3}


class UnknownEntryError(KeyError):
    pass


class JacobiError(ValueError):
    pass


def levi_civita_symbol(*idx: int) -> int:
    if len(set(idx)) != len(idx):
        return 0
    inv = sum(1 for a, b in itertools.combinations(idx, 2) if a > b)
    return -1 if inv % 2 else 1


# ---------------------------------------------------------------------------
# Lie groups


@dataclass(frozen=True)
class StructureConstants:
    """Brackets ``[X_i, X_j] = sum_k c[k][i][j] X_k`` (0-based indices)."""

    c: tuple

    def __post_init__(self):
        arr = [[[Fraction(v) for v in row] for row in plane] for plane in self.c]
        n = len(arr)
        if any(len(p) != n or any(len(r) != n for r in p) for p in arr):
            raise ValueError("structure constants must be an n x n x n array")
        for k, i, j in itertools.product(range(n), repeat=3):
            if arr[k][i][j] != -arr[k][j][i]:
                raise ValueError(f"c^{k + 1}_{i + 1}{j + 1} is not antisymmetric in its lower indices")
        object.__setattr__(self, "c", tuple(tuple(tuple(r) for r in p) for p in arr))
        bad = self.jacobi_violations()
        if bad:
            i, j, k, l, val = bad[0]
            raise JacobiError(
                f"Jacobi identity fails for (i,j,k)=({i + 1},{j + 1},{k + 1}) in component {l + 1}: sum {val}"
            )

    @property
    def n(self) -> int:
        return len(self.c)

    def jacobi_violations(self) -> list[tuple]:
        n, c = self.n, self.c
        out = []
        for i, j, k in itertools.combinations(range(n), 3):
            for l in range(n):
                s = sum(
                    c[m][i][j] * c[l][m][k] + c[m][j][k] * c[l][m][i] + c[m][k][i] * c[l][m][j]
                    for m in range(n)
                )
                if s:
                    out.append((i, j, k, l, s))
        return out

    def ad(self, i: int) -> list[list[Fraction]]:
        """(ad X_i)^k_j = c^k_ij."""
        n = self.n
        return [[self.c[k][i][j] for j in range(n)] for k in range(n)]

    def killing(self) -> list[list[Fraction]]:
        n = self.n
        ads = [np.array(self.ad(i), dtype=object) for i in range(n)]
        return [[sum(np.diag(ads[i].dot(ads[j]))) for j in range(n)] for i in range(n)]


def so3_constants() -> StructureConstants:
    return StructureConstants(tuple(tuple(tuple(levi_civita_symbol(i, j, k) for j in range(3)) for i in range(3)) for k in range(3)))


def _matmul(a, b):
    n = len(a)
    return [[sum((a[i][k] * b[k][j] for k in range(n)), ZERO) for j in range(n)] for i in range(n)]


def _frac_matmul(a, b):
    n = len(a)
    return [[sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)] for i in range(n)]


def _expm_symbolic(M: list[list[Fraction]], t: Expr) -> list[list[Expr]]:
    """exp(t M) for matrices that are nilpotent or satisfy M^3 = kappa M."""
    n = len(M)
    eye = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    powers = [eye]
    for _ in range(n):
        powers.append(_frac_matmul(powers[-1], M))
    if all(v == 0 for row in powers[-1] for v in row):
        out = [[ZERO] * n for _ in range(n)]
        for p, Mp in enumerate(powers[:-1]):
            coef = t**p * Fraction(1, math.factorial(p))
            for i in range(n):
                for j in range(n):
                    if Mp[i][j]:
                        out[i][j] = out[i][j] + coef * Mp[i][j]
        return out
    M2, M3 = powers[2], powers[3]
    kappa = None
    for i in range(n):
        for j in range(n):
            if M[i][j]:
                kappa = M3[i][j] / M[i][j]
                break
        if kappa is not None:
            break
    if kappa is None or any(M3[i][j] != kappa * M[i][j] for i in range(n) for j in range(n)):
        raise ValueError("exp(t ad X) is only supported for nilpotent ad X or (ad X)^3 = kappa ad X")
    w = sqrt(abs(kappa))
    if kappa < 0:
        f1 = sin(w * t) / w
        f2 = (1 - cos(w * t)) / w**2
    elif kappa > 0:
        f1 = (exp(w * t) - exp(-w * t)) / (2 * w)
        f2 = ((exp(w * t) + exp(-w * t)) / 2 - 1) / w**2
    else:
        f1, f2 = t, t**2 / 2
    return [[as_expr(eye[i][j]) + f1 * M[i][j] + f2 * M2[i][j] for j in range(n)] for i in range(n)]


def _lie_coframe(sc: StructureConstants, coords: Sequence[str], side: str) -> list[list[Expr]]:
    """Coefficient matrix theta[k][a] of the invariant Maurer-Cartan forms."""
    n = sc.n
    xs = [symbol(c) for c in coords]
    cols = []
    for a in range(n):
        vec = [ONE if k == a else ZERO for k in range(n)]
        # factors listed innermost first: Ad(e^{-x_n X_n})...Ad(e^{-x_{a+1} X_{a+1}}) X_a
        # on the left, Ad(e^{x_1 X_1})...Ad(e^{x_{a-1} X_{a-1}}) X_a on the right
        if side == "left":
            chain = [(b, -1) for b in range(a + 1, n)]
        else:
            chain = [(b, 1) for b in reversed(range(a))]
        for b, sign in chain:
            E = _expm_symbolic(sc.ad(b), xs[b] * sign)
            vec = [sum((E[k][m] * vec[m] for m in range(n)), ZERO) for k in range(n)]
        cols.append(vec)
    return [[cols[a][k] for a in range(n)] for k in range(n)]


# ---------------------------------------------------------------------------
# ledger


@dataclass(frozen=True)
class Claim:
    """A machine-checkable property of a catalog entry.

    ``kind`` is one of: ``bianchi``, ``dd_zero``, ``rotationally_flat``,
    ``torsion_free``, ``curvature_component``, ``scalar_curvature``,
    ``torsion_totally_antisymmetric``, ``torsion_constant``,
    ``autoparallels_straight``, ``autoparallels_match_geodesics``.
    """

    kind: str
    expected: object = True
    args: tuple = ()
    origin: str = "construction"
    tolerance: float = 1e-12


@dataclass(frozen=True)
class ClaimResult:
    claim: Claim
    passed: bool
    measured: object
    detail: str = ""

    def as_dict(self) -> dict:
        return {
            "kind": self.claim.kind,
            "args": list(self.claim.args),
            "expected": _plain(self.claim.expected),
            "measured": _plain(self.measured),
            "passed": self.passed,
            "origin": self.claim.origin,
            "detail": self.detail,
        }


def _plain(v):
    if isinstance(v, (Expr, Form)):
        return str(v)
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


@dataclass
class LedgerReport:
    name: str
    results: list[ClaimResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def as_dict(self) -> dict:
        return {"entry": self.name, "passed": self.passed, "claims": [r.as_dict() for r in self.results]}


@dataclass
class CatalogEntry:
    name: str
    frame: FrameField
    connection_matrix: list[list[Form]] | None
    ledger: list[Claim]
    parameters: dict[str, float] = field(default_factory=dict)
    description: str = ""
    killing_metric: list[list[Fraction]] | None = None
    structure: StructureConstants | None = None
    lie_scale: Expr = ONE

    @property
    def connection(self) -> CartanConnection:
        cached = self.__dict__.get("_conn")
        if cached is None:
            if self.connection_matrix is None:
                cached = levi_civita(self.frame)
            else:
                cached = CartanConnection(self.frame, self.connection_matrix, label=self.name)
            self.__dict__["_conn"] = cached
        return cached

    @property
    def is_levi_civita(self) -> bool:
        return self.connection_matrix is None


def lie_group_teleparallel(
    sc: StructureConstants,
    side: str = "left",
    scale: object = 1,
    coords: Sequence[str] | None = None,
    bounds: Sequence[tuple[float, float]] | None = None,
    params: dict[str, float] | None = None,
    name: str | None = None,
) -> CatalogEntry:
    """Flat connection of the left (or right) invariant coframe of a Lie group.

    Second-kind canonical coordinates ``g = exp(x1 X1) exp(x2 X2) ...``; the
    connection forms vanish in the invariant frame, so the curvature is zero
    and the torsion is ``-c`` (left) or ``+c`` (right) in frame components
    (divided by ``scale``).  The signature comes from the negated Killing
    form when it is diagonal, otherwise it is taken Euclidean.
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    n = sc.n
    coords = tuple(coords or [f"x{i + 1}" for i in range(n)])
    chart = Chart(coords, tuple(bounds) if bounds else None)
    theta = _lie_coframe(sc, coords, side)
    scale = as_expr(scale)
    coframe = [Form.one_form(chart, [scale * theta[k][a] for a in range(n)]) for k in range(n)]
    B = sc.killing()
    diag = all(B[i][j] == 0 for i in range(n) for j in range(n) if i != j)
    if diag and all(B[i][i] != 0 for i in range(n)):
        eps = tuple(1 if -B[i][i] > 0 else -1 for i in range(n))
    else:
        eps = (1,) * n
    frame = FrameField(chart, eps, coframe, params)
    zero = [[Form.zero(chart, 1) for _ in range(n)] for _ in range(n)]
    sign = -1 if side == "left" else 1
    ledger = [
        Claim("bianchi"),
        Claim("dd_zero"),
        Claim("rotationally_flat", True, origin="Lie-group construction"),
        Claim("torsion_structure_constants", sign, origin="Lie-group construction"),
    ]
    return CatalogEntry(
        name=name or f"lie-{side}",
        frame=frame,
        connection_matrix=zero,
        ledger=ledger,
        parameters=dict(params or {}),
        description=f"{side}-invariant teleparallel connection",
        killing_metric=B,
        structure=sc,
        lie_scale=scale,
    )


# ---------------------------------------------------------------------------
# builtin entries

_S3_BOUNDS = ((-2.0, 2.0), (-1.2, 1.2), (-2.0, 2.0))


def _flat(n: int) -> CatalogEntry:
    coords = tuple(f"x{i + 1}" for i in range(n))
    chart = Chart(coords, ((-1.0, 1.0),) * n)
    frame = FrameField(chart, (1,) * n, [Form.dx(chart, i) for i in range(n)])
    return CatalogEntry(
        f"flat{n}", frame, None,
        [Claim("bianchi"), Claim("dd_zero"), Claim("rotationally_flat", True), Claim("torsion_free", True),
         Claim("scalar_curvature", ZERO, origin="closed form")],
        description=f"Euclidean {n}-space, identity coframe",
    )


def _polar2() -> CatalogEntry:
    chart = Chart(("r", "phi"), ((0.5, 2.0), (-3.0, 3.0)))
    r = symbol("r")
    frame = FrameField(chart, (1, 1), [Form.dx(chart, 0), Form.dx(chart, 1) * r])
    return CatalogEntry(
        "polar2", frame, None,
        [Claim("bianchi"), Claim("dd_zero"), Claim("rotationally_flat", True, origin="hand solve"),
         Claim("torsion_free", True), Claim("connection_form", -Form.dx(chart, 1), args=(0, 1), origin="hand solve")],
        description="Euclidean plane in polar coordinates",
    )


def _sphere2(rv: float) -> CatalogEntry:
    chart = Chart(("theta", "phi"), ((0.3, math.pi - 0.3), (-3.0, 7.0)))
    r, th = symbol("r"), symbol("theta")
    frame = FrameField(chart, (1, 1), [Form.dx(chart, 0) * r, Form.dx(chart, 1) * (r * sin(th))], {"r": rv})
    return CatalogEntry(
        "sphere2", frame, None,
        [Claim("bianchi"), Claim("dd_zero"), Claim("rotationally_flat", False), Claim("torsion_free", True),
         Claim("curvature_component", r**-2, args=(0, 1, 0, 1), origin="Christoffel oracle"),
         Claim("scalar_curvature", 2 * r**-2, origin="Christoffel oracle"),
         Claim("connection_form", -Form.dx(chart, 1) * cos(th), args=(0, 1), origin="Christoffel oracle")],
        parameters={"r": rv},
        description="round 2-sphere of radius r",
    )


def _sphere3(rv: float, tele: bool) -> CatalogEntry:
    r = symbol("r")
    base = lie_group_teleparallel(
        so3_constants(), "left", scale=r / 2, bounds=_S3_BOUNDS, params={"r": rv},
    )
    if tele:
        ledger = [
            Claim("bianchi"), Claim("dd_zero"), Claim("rotationally_flat", True, origin="Lie-group construction"),
            Claim("torsion_totally_antisymmetric", True), Claim("torsion_constant", True),
            Claim("torsion_structure_constants", -1, origin="Lie-group construction"),
            Claim("autoparallels_match_geodesics", True, tolerance=1e-6, origin="great-circle oracle"),
        ]
        return CatalogEntry(
            "sphere3_tele", base.frame, base.connection_matrix, ledger, {"r": rv},
            "left-invariant teleparallel connection on the 3-sphere of radius r", base.killing_metric,
            base.structure, base.lie_scale,
        )
    ledger = [
        Claim("bianchi"), Claim("dd_zero"), Claim("rotationally_flat", False), Claim("torsion_free", True),
        Claim("curvature_component", r**-2, args=(0, 1, 0, 1), origin="constant curvature"),
        Claim("scalar_curvature", 6 * r**-2, origin="constant curvature"),
    ]
    return CatalogEntry(
        "sphere3_lc", base.frame, None, ledger, {"r": rv},
        "round 3-sphere of radius r with its Levi-Civita connection", base.killing_metric,
    )


def _staircase(av: float) -> CatalogEntry:
    chart = Chart(("x1", "x2", "x3"), ((-1.0, 1.0),) * 3)
    a = symbol("alpha")
    frame = FrameField(chart, (1, 1, 1), [Form.dx(chart, i) for i in range(3)], {"alpha": av})
    omega = [[Form.one_form(chart, [a * levi_civita_symbol(i, j, k) for k in range(3)]) for j in range(3)] for i in range(3)]
    return CatalogEntry(
        "staircase", frame, omega,
        [Claim("bianchi"), Claim("dd_zero"), Claim("torsion_totally_antisymmetric", True),
         Claim("torsion_constant", True), Claim("staircase_curvature", True, origin="hand expansion"),
         Claim("autoparallels_straight", True, tolerance=1e-9, origin="antisymmetry identity")],
        parameters={"alpha": av},
        description="Euclidean 3-space with constant contorsion alpha*eps_ijk dx^k",
    )


def _minkowski() -> CatalogEntry:
    chart = Chart(("t", "x", "y", "z"), ((-1.0, 1.0),) * 4)
    frame = FrameField(chart, (1, -1, -1, -1), [Form.dx(chart, i) for i in range(4)])
    return CatalogEntry(
        "minkowski", frame, None,
        [Claim("bianchi"), Claim("dd_zero"), Claim("rotationally_flat", True), Claim("torsion_free", True),
         Claim("scalar_curvature", ZERO)],
        description="Minkowski space, signature (+---)",
    )


def _diag4() -> CatalogEntry:
    chart = Chart(("t", "x", "y", "z"), ((-0.5, 0.5),) + ((-1.0, 1.0),) * 3)
    t = symbol("t")
    frame = FrameField(chart, (1, -1, -1, -1), [Form.dx(chart, 0)] + [Form.dx(chart, i) * exp(t) for i in (1, 2, 3)])
    return CatalogEntry(
        "diag4", frame, None,
        [Claim("bianchi"), Claim("dd_zero"), Claim("rotationally_flat", False), Claim("torsion_free", True),
         Claim("scalar_curvature", as_expr(-12), origin="Christoffel oracle")],
        description="g = diag(1, -e^{2t}, -e^{2t}, -e^{2t})",
    )


def _mink_torsion(av: float) -> CatalogEntry:
    chart = Chart(("t", "x", "y", "z"), ((-1.0, 1.0),) * 4)
    a = symbol("alpha")
    frame = FrameField(chart, (1, -1, -1, -1), [Form.dx(chart, i) for i in range(4)], {"alpha": av})
    omega = [[Form.zero(chart, 1) for _ in range(4)] for _ in range(4)]
    for i in range(1, 4):
        for j in range(1, 4):
            coeffs = [ZERO] + [a * levi_civita_symbol(i - 1, j - 1, k - 1) for k in range(1, 4)]
            omega[i][j] = Form.one_form(chart, coeffs)
    return CatalogEntry(
        "mink-torsion", frame, omega,
        [Claim("bianchi"), Claim("dd_zero"), Claim("torsion_totally_antisymmetric", True),
         Claim("torsion_constant", True)],
        parameters={"alpha": av},
        description="Minkowski coframe with spatial contorsion alpha*eps_abc dx^c",
    )


_NAME_RE = re.compile(r"^([a-z0-9_\-]+?)(?:\(([^)]*)\))?$")


def builtin(name: str, param: float | None = None) -> CatalogEntry:
    """Construct a catalog entry by name, e.g. ``sphere2``, ``sphere2(2)``."""
    m = _NAME_RE.match(name.strip())
    if not m or m.group(1) not in NAMES:
        raise UnknownEntryError(name)
    key, arg = m.group(1), m.group(2)
    if arg:
        try:
            param = float(arg)
        except ValueError:
            raise UnknownEntryError(name) from None
    if param is None:
        param = DEFAULTS.get(key)
    elif key not in DEFAULTS:
        raise ValueError(f"catalog entry {key!r} takes no parameter")
    if key == "flat2":
        return _flat(2)
    if key == "flat3":
        return _flat(3)
    if key == "polar2":
        return _polar2()
    if key == "sphere2":
        return _sphere2(param)
    if key == "sphere3_lc":
        return _sphere3(param, tele=False)
    if key == "sphere3_tele":
        return _sphere3(param, tele=True)
    if key == "staircase":
        return _staircase(param)
    if key == "minkowski":
        return _minkowski()
    if key == "diag4":
        return _diag4()
    return _mink_torsion(param)


def corrupted_fixture() -> CatalogEntry:
    """Negative control: sphere2 with a deliberately wrong curvature claim."""
    e = _sphere2(1.0)
    r = symbol("r")
    e.ledger = [c for c in e.ledger if c.kind != "scalar_curvature"] + [
        Claim("scalar_curvature", 3 * r**-2, origin="corrupted on purpose")
    ]
    e.name = "sphere2-corrupted"
    return e


# ---------------------------------------------------------------------------
# verification


def _check_claim(entry: CatalogEntry, claim: Claim) -> ClaimResult:
    from . import einstein, transport

    C = entry.connection
    F = entry.frame
    n = F.n
    data = C.data
    kind = claim.kind
    if kind == "bianchi":
        v1 = zero_verdict(first_bianchi(C), F)
        v2 = zero_verdict(second_bianchi(C), F)
        ok = v1.holds and v2.holds
        return ClaimResult(claim, ok == claim.expected, [v1.status.value, v2.status.value],
                           f"max residual {max(v1.max_residual, v2.max_residual):.3e}")
    if kind == "dd_zero":
        forms = list(F.coframe) + [w for row in C.omega for w in row]
        forms += [f.d() for f in forms]
        v = zero_verdict([f.d().d() for f in forms], F)
        return ClaimResult(claim, v.holds == claim.expected, v.status.value)
    if kind == "rotationally_flat":
        fl = is_flat(C, "rotational")
        if fl is Flatness.UNKNOWN:
            v = zero_verdict(data.curvature, F)
            flat = v.holds
        else:
            flat = fl is Flatness.PROVEN_FLAT
        return ClaimResult(claim, flat == claim.expected, fl.value)
    if kind == "torsion_free":
        v = zero_verdict(data.torsion, F)
        return ClaimResult(claim, v.holds == claim.expected, v.status.value)
    if kind == "curvature_component":
        i, j, k, l = claim.args
        got = data.A_curvature(i, j, k, l)
        return _compare(claim, got, F)
    if kind == "scalar_curvature":
        got = einstein.ricci_scalar(C).R
        return _compare(claim, got, F)
    if kind == "connection_form":
        i, j = claim.args
        diff = C.omega[i][j] - claim.expected
        v = zero_verdict(diff, F)
        return ClaimResult(claim, v.holds, str(C.omega[i][j]))
    if kind == "torsion_totally_antisymmetric":
        eps = F.signature
        res = []
        for i, j, k in itertools.product(range(n), repeat=3):
            res.append(data.A_torsion(i, j, k) * eps[i] + data.A_torsion(j, i, k) * eps[j])
        v = zero_verdict(res, F)
        return ClaimResult(claim, v.holds == claim.expected, v.status.value)
    if kind == "torsion_constant":
        free = set()
        for comps in data.torsion_components:
            for c in comps.values():
                free |= c.free_symbols
        const = not (free & set(F.chart.coordinates))
        return ClaimResult(claim, const == claim.expected, sorted(free))
    if kind == "torsion_structure_constants":
        # with omega = s*theta the frame components are A^i_jk = sign * c^i_jk / s
        sc, s = entry.structure, entry.lie_scale
        res = []
        for i, j, k in itertools.product(range(n), repeat=3):
            if j < k:
                res.append(data.A_torsion(i, j, k) - s**-1 * sc.c[i][j][k] * claim.expected)
        v = zero_verdict(res, F)
        return ClaimResult(claim, v.holds, v.status.value)
    if kind == "staircase_curvature":
        a = symbol("alpha")
        res = []
        for i in range(n):
            for j in range(n):
                if i != j:
                    expect = Form(F.chart, 2, {(j, i): a**2})
                    res.append(data.curvature[i][j] - expect)
        v = zero_verdict(res, F)
        return ClaimResult(claim, v.holds, v.status.value)
    if kind == "autoparallels_straight":
        worst = 0.0
        for x0, v0 in _sample_initial(n):
            tr = transport.autoparallel(C, x0, v0, 1e-3, 1.0, check_domain=False)
            line = np.asarray(x0) + np.outer(tr.t, v0)
            worst = max(worst, float(np.max(np.abs(tr.x - line))))
        return ClaimResult(claim, worst < claim.tolerance, worst)
    if kind == "autoparallels_match_geodesics":
        worst = 0.0
        lc = levi_civita(F)
        for x0, v0 in [((0.1, 0.2, -0.3), (0.3, -0.2, 0.25)), ((-0.4, 0.1, 0.5), (-0.1, 0.2, 0.3))]:
            a = transport.autoparallel(C, x0, v0, 1e-3, 1.0)
            g = transport.autoparallel(lc, x0, v0, 1e-3, 1.0)
            worst = max(worst, float(np.max(np.abs(a.x - g.x))))
        return ClaimResult(claim, worst < claim.tolerance, worst)
    raise ValueError(f"unknown claim kind {kind!r}")


def _sample_initial(n: int):
    rng = np.random.default_rng(7)
    for _ in range(3):
        yield tuple(rng.uniform(-0.3, 0.3, n)), tuple(rng.uniform(-0.5, 0.5, n))


def _compare(claim: Claim, got: Expr, F: FrameField) -> ClaimResult:
    expected = as_expr(claim.expected)
    diff = got - expected
    if not diff:
        return ClaimResult(claim, True, str(got), "structurally equal")
    v = zero_verdict(diff, F, tolerance=claim.tolerance)
    return ClaimResult(claim, v.holds, str(got), f"max deviation {v.max_residual:.3e}")


def verify_ledger(entry: CatalogEntry) -> LedgerReport:
    results = []
    for claim in entry.ledger:
        try:
            results.append(_check_claim(entry, claim))
        except Exception as exc:  # a crashing claim is a failed claim, never a crash of the report
            results.append(ClaimResult(claim, False, None, f"error: {exc}"))
    return LedgerReport(entry.name, results)
