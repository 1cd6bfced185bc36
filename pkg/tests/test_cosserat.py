import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cartan_forge.cartan import FrameField, Status, levi_civita
from cartan_forge.cosserat import (
    CSV_HEADER,
    CYCLIC_3,
    Grid,
    LoadField,
    MediumField,
    NormalError,
    ShapeMismatchError,
    classical_limit_check,
    force_residual,
    geometry_to_medium,
    integral_balance,
    read_medium_csv,
    torque_residual,
    traction,
    write_medium_csv,
)
from cartan_forge.einstein import DimensionError
from cartan_forge.expr import ZERO, Chart, as_expr, cos, differentiate, exp, sin, symbol
from cartan_forge.exterior import Form

x1, x2, x3 = symbol("x1"), symbol("x2"), symbol("x3")
X = (x1, x2, x3)
GRID = Grid.box((0, 0, 0), (1, 1, 1), 5)


def zeros3():
    return [[ZERO] * 3 for _ in range(3)]


def manufactured():
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
    return p, q


def div(block):
    return [sum((differentiate(block[i][j], f"x{i + 1}") for i in range(3)), ZERO) for j in range(3)]


def balancing_loads(p, q):
    Xf = div(p)
    dq = div(q)
    Lf = [None] * 3
    for j, k, l in CYCLIC_3:
        Lf[j] = dq[j] + p[k][l] - p[l][k]
    return LoadField(Xf, Lf)


def test_zero_fields():
    M = MediumField(GRID)
    assert force_residual(M, LoadField()).exact_zero
    assert torque_residual(M, LoadField()).exact_zero


def test_linear_stress_fixture():
    p = zeros3()
    p[0][0] = x1
    r = force_residual(MediumField(GRID, p), LoadField([1, 0, 0]))
    assert r.exact_zero and r.max_norm == 0.0


def test_manufactured_residuals_exactly_zero():
    p, q = manufactured()
    M = MediumField(GRID, p, q)
    L = balancing_loads(p, q)
    assert force_residual(M, L).exact_zero
    assert torque_residual(M, L).exact_zero


def test_antisymmetric_stress_requires_torque():
    p = zeros3()
    p[1][2] = as_expr(1)
    M = MediumField(GRID, p)
    r = torque_residual(M, LoadField())
    assert [str(e) for e in r.exprs] == ["-1", "0", "0"]
    assert torque_residual(M, LoadField(None, [1, 0, 0])).exact_zero


def test_symmetric_stress_no_torque():
    p = [[x1, x2, x3], [x2, x1 * x2, 0], [x3, 0, x3**2]]
    assert torque_residual(MediumField(GRID, p), LoadField()).exact_zero


@given(st.lists(st.integers(-5, 5), min_size=3, max_size=3))
def test_antisymmetric_delta_shifts_torque_by_axial_vector(d):
    p, q = manufactured()
    base = torque_residual(MediumField(GRID, p, q), LoadField()).exprs
    delta = [[0, d[2], -d[1]], [-d[2], 0, d[0]], [d[1], -d[0], 0]]
    shifted = [[p[i][j] + delta[i][j] for j in range(3)] for i in range(3)]
    new = torque_residual(MediumField(GRID, shifted, q), LoadField()).exprs
    # residual_j loses (delta_kl - delta_lk) = 2 d_j, so the required L gains 2 d_j
    for j in range(3):
        assert new[j] - base[j] + 2 * d[j] == ZERO


def order_ratio(residual_fn):
    p, q = manufactured()
    errs = []
    for n in (9, 17):
        g = Grid.box((0.1, 0.2, 0.3), (0.9, 1.0, 1.1), n)
        sym = MediumField(g, p, q)
        loads = balancing_loads(p, q)
        Xa = np.asarray([np.broadcast_to(v, g.shape) for v in (sym_eval(c, g) for c in loads.X)])
        La = np.asarray([np.broadcast_to(v, g.shape) for v in (sym_eval(c, g) for c in loads.L)])
        r = residual_fn(sym.to_arrays(), LoadField(Xa, La))
        errs.append(r.max_norm)
    return errs[0] / errs[1]


def sym_eval(e, g):
    from cartan_forge.expr import evaluate_array

    return evaluate_array(e, g.env())


def test_force_convergence_order_two():
    assert 3.5 <= order_ratio(force_residual) <= 4.5


def test_torque_convergence_order_two():
    assert 3.5 <= order_ratio(torque_residual) <= 4.5


def test_integral_balance_second_order():
    p, q = manufactured()
    errs = []
    for n in (9, 17, 33):
        g = Grid.box((0, 0, 0), (1, 1, 1), n)
        errs.append(np.max(np.abs(integral_balance(MediumField(g, p, q), balancing_loads(p, q)))))
    assert errs[1] < errs[0] and errs[2] < errs[1]
    assert 3.5 <= errs[1] / errs[2] <= 4.5


def test_integral_balance_sub_box():
    p = zeros3()
    p[0][0] = x1
    g = Grid.box((0, 0, 0), (1, 1, 1), 5)
    bal = integral_balance(MediumField(g, p), LoadField([1, 0, 0]), (1, 0, 2), (3, 4, 4))
    assert np.allclose(bal, 0, atol=1e-14)


def test_traction_examples():
    M = MediumField(GRID, [[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    F, J = traction(M, (1, 0, 0))
    assert F == (as_expr(1), ZERO, ZERO)
    q = zeros3()
    q[0][1] = as_expr(3)
    _, J = traction(MediumField(GRID, None, q), (1, 0, 0))
    assert J == (ZERO, as_expr(3), ZERO)
    Fa, _ = traction(M.to_arrays(), (0, 1, 0))
    assert np.array_equal(Fa[1], np.ones(GRID.shape))
    with pytest.raises(NormalError):
        traction(M, (0, 0, 2))


def test_classical_limit_fixtures():
    lam, mu = 2, 3
    # displacement u = (x2 x3, x1 x3, x1 x2) is harmonic and divergence-free, so
    # p = 2 mu strain + lam (div u) I solves the Navier equations with no loads
    strain = [[0, x3, x2], [x3, 0, x1], [x2, x1, 0]]
    divu = 0
    p = [[strain[i][j] * (2 * mu) + (lam * divu if i == j else 0) for j in range(3)] for i in range(3)]
    v = classical_limit_check(MediumField(GRID, p))
    assert v.applicable and v.passed and v.max_violation <= 1e-10
    bad = zeros3()
    bad[0][1] = as_expr(1)
    v = classical_limit_check(MediumField(GRID, bad))
    assert v.applicable and not v.passed and v.max_violation == 1.0


def test_classical_limit_not_applicable_with_loads():
    v = classical_limit_check(MediumField(GRID), LoadField([1, 0, 0]))
    assert not v.applicable and not v.passed


def test_shape_errors():
    with pytest.raises(ShapeMismatchError):
        MediumField(GRID, np.zeros((3, 3, 4, 5, 5)))
    with pytest.raises(ShapeMismatchError):
        force_residual(MediumField(GRID), LoadField(np.zeros((3, 2, 2, 2))))
    with pytest.raises(ShapeMismatchError):
        Grid((2, 5, 5), (0.1, 0.1, 0.1))
    with pytest.raises(ShapeMismatchError):
        Grid((5, 5, 5), (0.1, 0.0, 0.1))


def test_csv_round_trip(tmp_path):
    p, q = manufactured()
    M = MediumField(Grid.box((0, 0, 0), (1, 0.5, 2), (3, 4, 5)), p, q)
    path = tmp_path / "medium.csv"
    write_medium_csv(M, path)
    assert path.read_text().splitlines()[0] == ",".join(CSV_HEADER)
    back = read_medium_csv(path)
    assert back.grid.shape == M.grid.shape
    a, b = M.node_values(), back.node_values()
    assert np.allclose(a[0], b[0], rtol=1e-11) and np.allclose(a[1], b[1], rtol=1e-11)


def test_csv_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("i,j,k,x1,x2\n")
    with pytest.raises(ShapeMismatchError):
        read_medium_csv(path)


def test_geometry_flat(entries):
    m = geometry_to_medium(entries("flat3").connection)
    assert m.stress_zero and m.couple_zero
    assert m.equilibrium.status is Status.PROVEN


def test_geometry_tele_isotropic_couple(entries):
    C = entries("sphere3_tele").connection
    m = geometry_to_medium(C)
    assert m.stress_zero and not m.couple_zero
    diag = [m.couple_axial[c][c] for c in range(3)]
    assert diag[0] == diag[1] == diag[2] and diag[0] != ZERO
    for c, i in itertools.product(range(3), repeat=2):
        if c != i:
            assert m.couple_axial[c][i] == ZERO
    assert m.equilibrium.holds


def test_geometry_sphere_line_pure_stress():
    chart = Chart(("theta", "phi", "z"), ((0.3, math.pi - 0.3), (-3.0, 3.0), (-1.0, 1.0)))
    th = symbol("theta")
    F = FrameField(chart, (1, 1, 1), [Form.dx(chart, 0), Form.dx(chart, 1) * sin(th), Form.dx(chart, 2)])
    m = geometry_to_medium(levi_civita(F))
    assert not m.stress_zero and m.couple_zero
    assert m.stress[2][2] != ZERO
    assert m.equilibrium.holds


def test_geometry_staircase_both(entries):
    m = geometry_to_medium(entries("staircase").connection)
    assert not m.stress_zero and not m.couple_zero
    assert m.equilibrium.holds
    assert set(m.as_dict()) == {"stress", "couple", "couple_axial", "equilibrium", "stress_zero", "couple_zero"}


def test_geometry_dimension_error(entries):
    with pytest.raises(DimensionError):
        geometry_to_medium(entries("sphere2").connection)
