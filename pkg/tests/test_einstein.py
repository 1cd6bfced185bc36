import itertools
import math

import numpy as np
import pytest
import sympy as sp

from cartan_forge.cartan import FrameField, Status, levi_civita, zero_verdict
from cartan_forge.catalog import builtin
from cartan_forge.einstein import (
    EINSTEIN_FORM_SIGN,
    LAGRANGIAN_CONSTANT,
    DimensionError,
    axial_from_rotation_matrix,
    cartan_constraint,
    covariant_exterior_derivative,
    einstein_form,
    einstein_form_compact,
    einstein_tensor,
    generalized_einstein_form,
    hilbert_lagrangian,
    hodge_einstein_form,
    lagrangian_coefficient,
    ricci_scalar,
    three_dim_einstein,
    vector_couple_equilibrium,
    vector_couple_invariant,
)
from cartan_forge.expr import Chart, ZeroStatus, as_expr, evaluate, is_zero, sin, symbol
from cartan_forge.exterior import Form, frame_components
from oracle import CoordinateOracle

FOUR_D = ["minkowski", "diag4"]


def s2_times_line():
    chart = Chart(("theta", "phi", "z"), ((0.3, math.pi - 0.3), (-3.0, 3.0), (-1.0, 1.0)))
    th = symbol("theta")
    frame = FrameField(chart, (1, 1, 1), [Form.dx(chart, 0), Form.dx(chart, 1) * sin(th), Form.dx(chart, 2)])
    return levi_civita(frame)


def test_two_dimensional_alpha_part_vanishes(entries):
    data = einstein_tensor(entries("sphere2").connection)
    for row in data.G:
        for g in row:
            assert is_zero(g, params={"r": 1.0}) is not ZeroStatus.PROVEN_NONZERO
    assert zero_verdict(data.G, entries("sphere2").frame).holds


def test_minkowski_einstein_tensor_zero(entries):
    data = einstein_tensor(entries("minkowski").connection)
    assert all(not g for row in data.G for g in row)


def test_cosmological_only(entries):
    data = einstein_tensor(entries("diag4").connection, alpha=0, beta=1)
    eps = entries("diag4").frame.signature
    for i, j in itertools.product(range(4), repeat=2):
        assert data.G[i][j] == as_expr(eps[i] if i == j else 0)


def test_cartan_sign_is_a_flag_only(entries):
    C = entries("diag4").connection
    a = einstein_tensor(C)
    b = einstein_tensor(C, cartan_sign=True)
    assert b.cartan_sign and not a.cartan_sign
    assert a.G == b.G


def test_ricci_scalar_sphere(entries):
    assert ricci_scalar(entries("sphere2").connection).R == 2 * symbol("r") ** -2


def test_diag4_scalar_against_oracle(entries):
    e = entries("diag4")
    o = CoordinateOracle(e.frame)
    assert sp.simplify(o.scalar + 12) == 0
    assert ricci_scalar(e.connection).R == as_expr(-12)


@pytest.mark.parametrize("name", ["sphere2", "flat3", "sphere3_lc"])
def test_dimension_errors(entries, name):
    C = entries(name).connection
    for fn in (einstein_form, einstein_form_compact, cartan_constraint, hilbert_lagrangian):
        with pytest.raises(DimensionError):
            fn(C)


def test_three_dim_ops_reject_four_dimensions(entries):
    C = entries("diag4").connection
    for fn in (three_dim_einstein, vector_couple_invariant):
        with pytest.raises(DimensionError):
            fn(C)


def test_einstein_form_matches_oracle_tensor(entries):
    """Pi^i against the sympy Einstein tensor, read through frame components."""
    e = entries("diag4")
    C = e.connection
    o = CoordinateOracle(e.frame)
    Gf = o.frame_tensor(o.einstein_coordinate)
    eps = e.frame.signature
    Pi = einstein_form(C)
    worst = 0.0
    for p_ in e.frame.sample_points(20):
        for i in range(4):
            comps = frame_components(Pi.vec(i, C.chart), e.frame)
            for p in range(4):
                rest = tuple(q for q in range(4) if q != p)
                ours = evaluate(comps.get(rest, as_expr(0)), p_, e.frame.params)
                theirs = EINSTEIN_FORM_SIGN * (-1) ** p * eps[i] * eps[p] * o.numeric(Gf[i, p], p_)
                worst = max(worst, abs(ours - theirs))
    assert worst < 1e-9


@pytest.mark.parametrize("name", FOUR_D)
def test_einstein_form_matches_hodge_route(entries, name):
    C = entries(name).connection
    hodge = hodge_einstein_form(C.frame, einstein_tensor(C).G)
    Pi = einstein_form(C)
    for i in range(4):
        diff = Pi.vec(i, C.chart) - hodge[i] * EINSTEIN_FORM_SIGN
        assert zero_verdict(diff, C.frame).holds


@pytest.mark.parametrize("name", FOUR_D + ["mink-torsion"])
def test_compact_and_expanded_agree(entries, name):
    C = entries(name).connection
    Pi = einstein_form(C)
    for i, f in enumerate(einstein_form_compact(C)):
        assert zero_verdict(Pi.vec(i, C.chart) - f, C.frame).status is Status.PROVEN


@pytest.mark.parametrize("name", FOUR_D)
def test_conservation(entries, name):
    C = entries(name).connection
    D = covariant_exterior_derivative(einstein_form(C), C)
    v = zero_verdict(D.forms(), C.frame)
    assert v.holds and v.max_residual < 1e-9


def test_covariant_derivative_of_zero(entries):
    C = entries("diag4").connection
    Z = einstein_form(entries("minkowski").connection)
    assert Z.is_zero_literal
    Z = type(Z)(4, 3, {}, {})
    assert covariant_exterior_derivative(Z, C).is_zero_literal


def test_covariant_derivative_is_linear(entries):
    C = entries("mink-torsion").connection
    G = generalized_einstein_form(C)
    lhs = covariant_exterior_derivative(G * 3, C)
    rhs = covariant_exterior_derivative(G, C) * 3
    for a, b in zip(lhs.forms(), rhs.forms()):
        assert zero_verdict(a - b, C.frame).status is Status.PROVEN


@pytest.mark.parametrize("name", FOUR_D)
def test_generalized_reduces_at_zero_torsion(entries, name):
    C = entries(name).connection
    assert generalized_einstein_form(C) == einstein_form(C)


def test_generalized_reduces_on_mink_torsion_at_alpha_zero(entries):
    C = entries("mink-torsion").connection
    G0 = generalized_einstein_form(C).subs({"alpha": 0})
    E0 = einstein_form(C).subs({"alpha": 0})
    assert G0 == E0
    assert G0.bivector_part().is_zero_literal


def test_bivector_part_is_linear_in_alpha(entries):
    C = entries("mink-torsion").connection
    biv = generalized_einstein_form(C).bivector_part()
    assert not biv.is_zero_literal
    a = symbol("alpha")
    assert biv.subs({"alpha": 2 * a}) == biv * 2
    assert biv.subs({"alpha": a * 0}).is_zero_literal


@pytest.mark.parametrize("name", FOUR_D)
def test_cartan_constraint_zero_without_torsion(entries, name):
    assert all(not r for r in cartan_constraint(entries(name).connection))


def test_lagrangian_minkowski_zero(entries):
    assert hilbert_lagrangian(entries("minkowski").connection).is_zero_literal


def test_lagrangian_against_oracle(entries):
    e = entries("diag4")
    o = CoordinateOracle(e.frame)
    density = sp.sqrt(abs(o.metric.det()))
    expected = LAGRANGIAN_CONSTANT * e.frame.signature.product * o.scalar * density
    coef = lagrangian_coefficient(e.connection)
    for p in e.frame.sample_points(20):
        assert abs(evaluate(coef, p) - o.numeric(expected, p)) < 1e-9


def test_lagrangian_rigid_rotation_invariance(entries):
    e = entries("diag4")
    w = e.frame.coframe
    c, s = as_expr(3) / 5, as_expr(4) / 5
    rotated = [w[0], w[1] * c - w[2] * s, w[1] * s + w[2] * c, w[3]]
    F2 = FrameField(e.frame.chart, e.frame.signature, rotated)
    a = lagrangian_coefficient(e.connection)
    b = lagrangian_coefficient(levi_civita(F2))
    assert is_zero(a - b, bounds=F2.chart.bounds_map()) is not ZeroStatus.PROVEN_NONZERO
    assert zero_verdict(a - b, F2).status in (Status.PROVEN, Status.NUMERIC)


def test_axial_vector_of_rotation_matrix():
    a, b, c = symbol("a"), symbol("b"), symbol("c")
    M = [[0, c, -b], [-c, 0, a], [b, -a, 0]]
    assert axial_from_rotation_matrix(M) == (a, b, c)


def test_three_sphere_analogue(entries):
    C = entries("sphere3_lc").connection
    r = symbol("r")
    for i, f in enumerate(three_dim_einstein(C)):
        k, l = [q for q in range(3) if q != i]
        comps = frame_components(f, C.frame)
        assert set(comps) == {(k, l)}
        val = comps[(k, l)]
        assert ZeroStatus.PROVEN_ZERO in (is_zero(val - r**-2), is_zero(val + r**-2))
        assert abs(abs(evaluate(val, {}, {"r": 1.0})) - 1.0) < 1e-12


def test_vector_couple_flat(entries):
    C = entries("flat3").connection
    assert vector_couple_invariant(C).is_zero_literal
    assert vector_couple_equilibrium(C).is_zero_literal


def test_vector_couple_tele_pure_couple(entries):
    C = entries("sphere3_tele").connection
    G = vector_couple_invariant(C)
    assert not G.vector and len(G.bivector) == 3
    assert zero_verdict(vector_couple_equilibrium(C).forms(), C.frame).holds


def test_vector_couple_s2_line_pure_vector():
    C = s2_times_line()
    G = vector_couple_invariant(C)
    assert G.vector and not G.bivector
    assert zero_verdict(vector_couple_equilibrium(C).forms(), C.frame).holds


def test_vector_couple_staircase_equilibrium(entries):
    C = entries("staircase").connection
    G = vector_couple_invariant(C)
    assert G.vector and G.bivector
    assert zero_verdict(vector_couple_equilibrium(C).forms(), C.frame).holds


def test_mink_torsion_parameter_scaling():
    small = builtin("mink-torsion", 0.1).connection
    big = builtin("mink-torsion", 0.2).connection
    bs = generalized_einstein_form(small).bivector_part()
    bb = generalized_einstein_form(big).bivector_part()
    p = small.frame.sample_points(1)[0]
    for key in bs.bivector:
        for blade, coef in bs.bivector[key].coeffs.items():
            x = evaluate(coef, p, small.frame.params)
            y = evaluate(bb.bivector[key].coeffs[blade], p, big.frame.params)
            assert np.isclose(y, 2 * x, rtol=1e-14, atol=0)


@pytest.mark.parametrize("which", ["sphere3_lc", "s2xR"])
def test_three_dim_analogue_is_dual_einstein_tensor(entries, which):
    """T~^i = -sum_p G_ip *omega^p against the sympy Einstein tensor."""
    C = s2_times_line() if which == "s2xR" else entries(which).connection
    o = CoordinateOracle(C.frame)
    Gf = o.frame_tensor(o.einstein_coordinate)
    from cartan_forge.exterior import blade_sign

    comps = [frame_components(f, C.frame) for f in three_dim_einstein(C)]
    gap = 0.0
    for pt in C.frame.sample_points(10):
        for i, p in itertools.product(range(3), repeat=2):
            k, l = [q for q in range(3) if q != p]
            ours = evaluate(comps[i].get((k, l), as_expr(0)), pt, C.frame.params)
            theirs = -blade_sign((p, k, l)) * o.numeric(Gf[i, p], pt)
            gap = max(gap, abs(ours - theirs))
    assert gap < 1e-12
