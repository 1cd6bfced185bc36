"""Acceptance criteria 1 to 10.

Each criterion is a function returning ``(passed, detail)``; the test prints
one ``PASS``/``FAIL`` line per criterion and the terminal summary repeats
them.  Tolerances are fixed here and must not be relaxed.  Run directly with
``python tests/test_acceptance.py`` for the bare report.
"""
import itertools
import json
import math
import os
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from cartan_forge.cartan import Flatness, Status, first_bianchi, is_flat, levi_civita, second_bianchi, zero_verdict
from cartan_forge.catalog import NAMES, builtin
from cartan_forge.cosserat import (
    CYCLIC_3,
    Grid,
    LoadField,
    MediumField,
    classical_limit_check,
    force_residual,
    torque_residual,
)
from cartan_forge.einstein import (
    EINSTEIN_FORM_SIGN,
    LAGRANGIAN_CONSTANT,
    cartan_constraint,
    covariant_exterior_derivative,
    einstein_form,
    generalized_einstein_form,
    lagrangian_coefficient,
)
from cartan_forge.expr import ZERO, as_expr, cos, differentiate, evaluate, exp, sin, symbol
from cartan_forge.exterior import frame_components
from cartan_forge.transport import autoparallel, geodesic, loop_holonomy, square_loop
from oracle import CoordinateOracle, max_numeric_gap

POINTS = 20
IDENTITY_TOL = 1e-10
ORACLE_TOL = 1e-12
EINSTEIN_TOL = 1e-9
HOLONOMY_REL = 1e-3
STAIRCASE_LINE_TOL = 1e-9
COINCIDENCE_TOL = 1e-6
RATIO_RANGE = (3.5, 4.5)
ROOT = Path(__file__).resolve().parents[1]

RESULTS: dict[int, tuple[bool, str]] = {}
_CACHE: dict = {}


def entry(name):
    if name not in _CACHE:
        _CACHE[name] = builtin(name)
    return _CACHE[name]


def worst(v) -> float:
    return v.max_residual if v.status is not Status.PROVEN else 0.0


# ---------------------------------------------------------------------------


def criterion_1():
    details, ok = [], True
    for name in NAMES:
        C = entry(name).connection
        dd = [f.d().d() for f in C.frame.coframe] + [w.d().d() for row in C.omega for w in row]
        checks = [zero_verdict(x, C.frame, IDENTITY_TOL, POINTS) for x in (dd, first_bianchi(C), second_bianchi(C))]
        ok &= all(v.holds for v in checks)
        details.append(f"{name}:" + "/".join(v.status.value for v in checks))
    return ok, "; ".join(details)


def criterion_2():
    details, ok = [], True
    for name in ("flat2", "flat3", "polar2", "sphere2", "sphere3_lc", "minkowski", "diag4"):
        e = entry(name)
        C = levi_civita(e.frame)
        tors = zero_verdict(C.data.torsion, e.frame, IDENTITY_TOL, POINTS).status is Status.PROVEN
        o = CoordinateOracle(e.frame)
        pairs = [
            (C.data.A_curvature(i, j, k, l), o.frame_riemann(i, j, k, l))
            for i, j in itertools.product(range(C.n), repeat=2)
            for k, l in itertools.combinations(range(C.n), 2)
        ]
        gap = max_numeric_gap(o, pairs, e.frame.sample_points(POINTS))
        ok &= tors and gap < ORACLE_TOL
        details.append(f"{name}: torsion {'proven-zero' if tors else 'NOT proven'}, oracle gap {gap:.1e}")
    return ok, "; ".join(details)


def criterion_3():
    flat = {n: is_flat(entry(n).connection, "rotational") for n in ("polar2", "sphere3_tele", "sphere2", "sphere3_lc")}
    k = entry("sphere2").connection.data.A_curvature(0, 1, 0, 1)
    exact = k == symbol("r") ** -2
    ok = (
        flat["polar2"] is Flatness.PROVEN_FLAT
        and flat["sphere3_tele"] is Flatness.PROVEN_FLAT
        and flat["sphere2"] is Flatness.NOT_FLAT
        and flat["sphere3_lc"] is Flatness.NOT_FLAT
        and exact
    )
    return ok, ", ".join(f"{n} {v.value}" for n, v in flat.items()) + f"; sphere2 sectional curvature {k}"


def criterion_4():
    C = entry("sphere2").connection
    th0 = math.pi / 3
    scaled, rel = [], {}
    for h in (1e-1, 1e-2, 1e-3):
        res = loop_holonomy(C, square_loop([th0, 0.0], h), h / 10)
        err = abs(res.rotation[1, 0] - res.predicted_rotation[1, 0])
        scaled.append(err / h**2)
        rel[h] = err / abs(res.predicted_rotation[1, 0])
    slopes = [math.log10(scaled[i] / scaled[i + 1]) for i in range(2)]
    decay_ok = all(s >= 1.0 for s in slopes)
    S = entry("staircase").connection
    h = 1e-3
    trel = 0.0
    for plane in ((0, 1), (1, 2), (0, 2)):
        res = loop_holonomy(S, square_loop([0.1, 0.2, -0.1], h, plane), h / 10)
        pred = res.predicted_translation
        trel = max(trel, float(np.max(np.abs(res.translation - pred)) / np.max(np.abs(pred))))
    ok = decay_ok and rel[1e-2] < HOLONOMY_REL and trel < HOLONOMY_REL
    detail = (
        "err/h^2 = " + ", ".join(f"{s:.2e}" for s in scaled)
        + f" (decade slopes {slopes[0]:.2f}, {slopes[1]:.2f}); rel err at h=1e-2 {rel[1e-2]:.1e};"
        + f" staircase translation rel err {trel:.1e} at h=1e-3"
    )
    return ok, detail


def criterion_5():
    S = entry("staircase").connection
    v0 = np.array([0.3, -0.4, 0.5])
    x0 = np.array([0.0, 0.1, -0.2])
    tr = autoparallel(S, x0, v0, 1e-3, 1.0)
    line = float(np.max(np.abs(tr.x - (x0 + np.outer(tr.t, v0)))))
    x0, v0 = [0.1, -0.2, 0.3], [0.4, 0.2, -0.3]
    a = autoparallel(entry("sphere3_tele").connection, x0, v0, 1e-3, 1.0)
    g = geodesic(entry("sphere3_lc").frame, x0, v0, 1e-3, 1.0)
    coincide = float(np.max(np.abs(a.x - g.x)))
    oracle = float(np.max(np.abs(a.x - _coordinate_geodesic(entry("sphere3_lc").frame, x0, v0, a.t))))
    ok = line < STAIRCASE_LINE_TOL and coincide < COINCIDENCE_TOL and oracle < COINCIDENCE_TOL
    return ok, (
        f"staircase deviation from straight line {line:.1e}; sphere3 tele vs LC {coincide:.1e},"
        f" tele vs coordinate-Christoffel geodesic {oracle:.1e}"
    )


def _coordinate_geodesic(frame, x0, v0, t):
    """Independent route: sympy Christoffels integrated by scipy at tight tolerance."""
    import sympy as sp
    from scipy.integrate import solve_ivp

    o = CoordinateOracle(frame)
    subs = {o.param_syms[k]: v for k, v in frame.params.items()}
    G = sp.lambdify(o.coords, [[[g.subs(subs) for g in row] for row in plane] for plane in o.christoffel], "numpy")

    def rhs(_, y):
        x, v = y[:3], y[3:]
        return np.concatenate([v, -np.einsum("abc,b,c->a", np.asarray(G(*x), dtype=float), v, v)])

    sol = solve_ivp(rhs, (t[0], t[-1]), list(x0) + list(v0), rtol=1e-12, atol=1e-12, dense_output=True)
    return sol.sol(t)[:3].T


def criterion_6():
    e = entry("diag4")
    C = e.connection
    o = CoordinateOracle(e.frame)
    Gf = o.frame_tensor(o.einstein_coordinate)
    eps = e.frame.signature
    Pi = einstein_form(C)
    comps = [frame_components(Pi.vec(i, C.chart), e.frame) for i in range(4)]
    gap = 0.0
    for p_ in e.frame.sample_points(POINTS):
        for i, p in itertools.product(range(4), repeat=2):
            rest = tuple(q for q in range(4) if q != p)
            ours = evaluate(comps[i].get(rest, ZERO), p_, e.frame.params)
            theirs = EINSTEIN_FORM_SIGN * (-1) ** p * eps[i] * eps[p] * o.numeric(Gf[i, p], p_)
            gap = max(gap, abs(ours - theirs))
    D = covariant_exterior_derivative(Pi, C)
    cons = zero_verdict(D.forms(), e.frame, EINSTEIN_TOL, POINTS)
    ok = gap < EINSTEIN_TOL and cons.holds and worst(cons) < EINSTEIN_TOL
    return ok, f"global sign {EINSTEIN_FORM_SIGN:+d}, Pi vs dual oracle G gap {gap:.1e}; D Pi {cons.status.value} ({cons.max_residual:.1e})"


def criterion_7():
    parts = []
    reduce_ok = all(generalized_einstein_form(entry(n).connection) == einstein_form(entry(n).connection) for n in ("minkowski", "diag4"))
    MT = entry("mink-torsion").connection
    a = symbol("alpha")
    reduce_ok &= generalized_einstein_form(MT).subs({"alpha": 0}) == einstein_form(MT).subs({"alpha": 0})
    parts.append(f"zero-torsion reduction {'structural' if reduce_ok else 'FAILED'}")
    biv = generalized_einstein_form(MT).bivector_part()
    linear = (not biv.is_zero_literal) and biv.subs({"alpha": 2 * a}) == biv * 2 and biv.subs({"alpha": 0}).is_zero_literal
    parts.append(f"bivector part {'nonzero, exactly linear in alpha' if linear else 'NOT linear'}")
    res = cartan_constraint(MT)
    at0 = [evaluate(r, {}, {"alpha": 0.0}) for r in res]
    at03 = [evaluate(r, {}, {"alpha": 0.3}) for r in res]
    constraint_ok = all(v == 0 for v in at0) and any(abs(v) > 0 for v in at03)
    parts.append(
        "constraint residual at alpha=0 " + str(at0) + ", at alpha=0.3 " + str(at03)
        + ("" if constraint_ok else " (identically zero on this fixture, nonzero value required)")
    )
    return reduce_ok and linear and constraint_ok, "; ".join(parts)


def criterion_8():
    e = entry("diag4")
    o = CoordinateOracle(e.frame)
    import sympy as sp

    expected = LAGRANGIAN_CONSTANT * e.frame.signature.product * o.scalar * sp.sqrt(abs(o.metric.det()))
    coef = lagrangian_coefficient(e.connection)
    gap = max(abs(evaluate(coef, p) - o.numeric(expected, p)) for p in e.frame.sample_points(POINTS))
    return gap < EINSTEIN_TOL, f"coefficient {coef} vs {LAGRANGIAN_CONSTANT} * prod(eps) * R * sqrt|g|, gap {gap:.1e}"


def _manufactured():
    x1, x2, x3 = (symbol(f"x{i}") for i in (1, 2, 3))
    p = [
        [sin(x1) * x2, x2**2 * x3, cos(x3) + x1],
        [x1 * x3**2, exp(x2 / 2), sin(x1 + x2)],
        [x2 * x3, x1**2 * x2, cos(x1) * x3],
    ]
    q = [
        [x2**3, cos(x1 * x2), x3],
        [sin(x3), x1 * x2 * x3, exp(x1 / 3)],
        [x1**2, sin(x2), cos(x3) * x1],
    ]

    def div(b):
        return [sum((differentiate(b[i][j], f"x{i + 1}") for i in range(3)), ZERO) for j in range(3)]

    dq = div(q)
    L = [None] * 3
    for j, k, l in CYCLIC_3:
        L[j] = dq[j] + p[k][l] - p[l][k]
    return p, q, LoadField(div(p), L)


def criterion_9():
    from cartan_forge.expr import evaluate_array

    p, q, loads = _manufactured()
    grid = Grid.box((0, 0, 0), (1, 1, 1), 5)
    M = MediumField(grid, p, q)
    exact = force_residual(M, loads).exact_zero and torque_residual(M, loads).exact_zero
    ratios = []
    for fn in (force_residual, torque_residual):
        errs = []
        for n in (9, 17):
            g = Grid.box((0.1, 0.2, 0.3), (0.9, 1.0, 1.1), n)
            env = g.env()
            Xa = np.asarray([np.broadcast_to(evaluate_array(c, env), g.shape) for c in loads.X])
            La = np.asarray([np.broadcast_to(evaluate_array(c, env), g.shape) for c in loads.L])
            errs.append(fn(MediumField(g, p, q).to_arrays(), LoadField(Xa, La)).max_norm)
        ratios.append(errs[0] / errs[1])
    conv = all(RATIO_RANGE[0] <= r <= RATIO_RANGE[1] for r in ratios)
    anti = [[ZERO] * 3 for _ in range(3)]
    anti[1][2] = as_expr(1)
    need = torque_residual(MediumField(grid, anti), LoadField()).exprs
    required_L = [-e for e in need]
    torque_ok = required_L == [as_expr(1), ZERO, ZERO]
    x1, x2, x3 = (symbol(f"x{i}") for i in (1, 2, 3))
    good = classical_limit_check(MediumField(grid, [[0, x3, x2], [x3, 0, x1], [x2, x1, 0]]))
    bad_p = [[ZERO] * 3 for _ in range(3)]
    bad_p[0][1] = as_expr(1)
    bad = classical_limit_check(MediumField(grid, bad_p))
    classical = good.passed and not bad.passed and bad.max_violation == 1.0
    ok = exact and conv and torque_ok and classical
    return ok, (
        f"symbolic residuals {'exactly zero' if exact else 'NONZERO'}; convergence ratios "
        + ", ".join(f"{r:.2f}" for r in ratios)
        + f"; required L = ({', '.join(map(str, required_L))}); classical limit pass={good.passed}, "
        + f"negative fixture violation {bad.max_violation}"
    )


def _cli(args, out):
    return subprocess.run(
        [sys.executable, "-m", "cartan_forge.cli", *args, "--out", str(out)],
        capture_output=True, text=True, check=False,
    )


def criterion_10():
    demo = str(ROOT / "geometries" / "sphere2_demo.json")
    medium = str(ROOT / "geometries" / "staircase_medium.json")
    runs = [
        ["curvature", "catalog:sphere2"],
        ["holonomy", demo],
        ["geodesic", demo, "--format", "both"],
        ["einstein", "catalog:diag4"],
        ["cosserat", medium, "--format", "both"],
        ["verify", demo],
    ]
    identical = True
    with tempfile.TemporaryDirectory() as tmp:
        snaps = []
        for rep in ("a", "b"):
            out = Path(tmp) / rep
            for r in runs:
                identical &= _cli(r, out).returncode == 0
            snaps.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        identical &= snaps[0] == snaps[1] and len(snaps[0]) > 0
        ver = {n: _cli(["catalog", "verify", n], Path(tmp) / "v").returncode for n in NAMES}
        neg = _cli(["catalog", "verify", "sphere2-corrupted"], Path(tmp) / "v").returncode
    failing = [n for n, c in ver.items() if c != 0]
    ok = identical and not failing and neg == 1
    return ok, (
        f"{len(snaps[0])} report files byte-identical across runs: {identical}; catalog verify "
        + (f"failed on {failing}" if failing else f"passed on all {len(NAMES)} entries")
        + f"; corrupted fixture exit {neg}"
    )


CRITERIA = {
    1: ("structure-equation identities", criterion_1),
    2: ("Levi-Civita against coordinate oracle", criterion_2),
    3: ("flatness ledger", criterion_3),
    4: ("holonomy-curvature convergence", criterion_4),
    5: ("geodesic/autoparallel coincidence", criterion_5),
    6: ("Einstein form equivalence and conservation", criterion_6),
    7: ("generalized form reduction and constraint", criterion_7),
    8: ("Lagrangian coefficient", criterion_8),
    9: ("Cosserat residuals", criterion_9),
    10: ("determinism and catalog verification", criterion_10),
}


def report_line(n: int) -> str:
    ok, detail = RESULTS[n]
    return f"{'PASS' if ok else 'FAIL'} criterion {n} ({CRITERIA[n][0]}): {detail}"


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n):
    ok, detail = CRITERIA[n][1]()
    RESULTS[n] = (bool(ok), detail)
    print(report_line(n))
    assert ok, report_line(n)


if __name__ == "__main__":
    failed = 0
    for n in sorted(CRITERIA):
        RESULTS[n] = CRITERIA[n][1]()
        print(report_line(n))
        failed += not RESULTS[n][0]
    sys.exit(1 if failed else 0)
