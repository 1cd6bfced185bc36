import math

import numpy as np
import pytest

from cartan_forge.cartan import levi_civita
from cartan_forge.expr import as_expr, cos, sin, symbol
from cartan_forge.transport import (
    CurveSpec,
    DomainExitError,
    NonClosedLoopError,
    autoparallel,
    geodesic,
    loop_holonomy,
    parallel_transport,
    square_loop,
)

s = symbol("s")
TH0 = math.pi / 3


def latitude(th0=TH0):
    return CurveSpec(coords=(as_expr(th0), s), interval=(0.0, 2 * math.pi))


def latitude_exact(th0=TH0):
    a = 2 * math.pi * math.cos(th0)
    return np.array([math.cos(a), -math.sin(a)])


def test_flat_transport_is_trivial(entries):
    C = entries("flat3").connection
    curve = CurveSpec(coords=(sin(s), s**2, cos(s)), interval=(0, 1))
    v = parallel_transport(C, curve, [0.3, -0.2, 0.9], 1e-2)
    assert np.allclose(v, [0.3, -0.2, 0.9], atol=1e-15)


def test_latitude_holonomy_angle(entries):
    v = parallel_transport(entries("sphere2").connection, latitude(), [1.0, 0.0], 1e-3)
    assert np.max(np.abs(v - latitude_exact())) < 1e-12


def test_rk4_order_on_latitude(entries):
    C = entries("sphere2").connection
    e1 = np.max(np.abs(parallel_transport(C, latitude(), [1, 0], 0.2) - latitude_exact()))
    e2 = np.max(np.abs(parallel_transport(C, latitude(), [1, 0], 0.1) - latitude_exact()))
    assert 12 <= e1 / e2 <= 20


def test_norm_drift(entries):
    C = entries("sphere2").connection
    curve = CurveSpec(coords=(1.0 + 0.3 * sin(3 * s), s), interval=(0.0, 1.0))
    v0 = np.array([0.6, 0.8])
    v, path = parallel_transport(C, curve, v0, 1e-3, return_path=True)
    norms = np.sum(path**2, axis=1)
    assert np.max(np.abs(norms - 1.0)) < 1e-10


def test_flat_loop_holonomy(entries):
    C = entries("flat3").connection
    res = loop_holonomy(C, square_loop([0.1, 0.2, 0.0], 0.3, (0, 2)), 1e-2)
    assert np.allclose(res.rotation, np.eye(3), atol=1e-14)
    assert np.allclose(res.translation, 0, atol=1e-14)
    assert math.isclose(res.area[0, 2], 0.09, rel_tol=1e-12)


def test_non_closed_loop_rejected(entries):
    C = entries("flat2").connection
    with pytest.raises(NonClosedLoopError):
        loop_holonomy(C, CurveSpec(points=((0, 0), (0.1, 0), (0.1, 0.1))), 1e-2)


def test_closure_snaps_tiny_gaps(entries):
    C = entries("flat2").connection
    pts = ((0, 0), (0.1, 0), (0.1, 0.1), (0, 0.1), (1e-13, 0))
    res = loop_holonomy(C, CurveSpec(points=pts), 1e-2)
    assert np.allclose(res.translation, 0, atol=1e-15)


def test_sphere_small_loop(entries):
    C = entries("sphere2").connection
    h = 1e-2
    res = loop_holonomy(C, square_loop([TH0, 0.0], h), h / 10)
    angle = res.rotation[1, 0]
    pred = res.predicted_rotation[1, 0]
    assert abs(angle - pred) / abs(pred) < 1e-3
    assert res.metricity_defect((1, 1)) < 1e-9
    assert abs(np.real(res.generator)[1, 0] - angle) < 1e-6


def test_holonomy_serialization(entries):
    res = loop_holonomy(entries("sphere2").connection, square_loop([TH0, 0.0], 0.05), 5e-3)
    d = res.as_dict()
    assert {"rotation", "translation", "loop_area"} <= d.keys()


def test_geodesic_examples(entries):
    tr = geodesic(entries("flat2").frame, [0.1, 0.2], [1.0, -0.5], 1e-3, 0.5)
    assert np.allclose(tr.x[-1], [0.6, -0.05], atol=1e-12)
    sph = entries("sphere2").frame
    tr = geodesic(sph, [math.pi / 2, 0.0], [0.0, 1.0], 1e-3, 1.0)
    assert np.max(np.abs(tr.x[:, 0] - math.pi / 2)) < 1e-8
    assert abs(tr.x[-1, 1] - 1.0) < 1e-8
    pol = entries("polar2").frame
    tr = geodesic(pol, [1.0, 0.0], [0.2, 0.7], 1e-3, 1.0)
    xy = np.column_stack([tr.x[:, 0] * np.cos(tr.x[:, 1]), tr.x[:, 0] * np.sin(tr.x[:, 1])])
    line = np.array([1.0, 0.0]) + np.outer(tr.t, [0.2, 0.7])
    assert np.max(np.abs(xy - line)) < 1e-8


def test_geodesic_energy_conservation(entries):
    tr = geodesic(entries("sphere2").frame, [1.0, 0.0], [0.3, 0.8], 1e-3, 1.0)
    n2 = tr.norm2()
    assert np.max(np.abs(n2 - n2[0])) < 1e-10


def test_autoparallel_of_levi_civita_is_geodesic(entries):
    F = entries("sphere2").frame
    a = autoparallel(levi_civita(F), [1.0, 0.0], [0.3, 0.8], 1e-3, 1.0)
    g = geodesic(F, [1.0, 0.0], [0.3, 0.8], 1e-3, 1.0)
    assert np.array_equal(a.x, g.x)


def test_staircase_autoparallels_straight(entries):
    C = entries("staircase").connection
    v0 = np.array([0.3, -0.4, 0.5])
    tr = autoparallel(C, [0.0, 0.1, -0.2], v0, 1e-3, 1.0)
    line = np.array([0.0, 0.1, -0.2]) + np.outer(tr.t, v0)
    assert np.max(np.abs(tr.x - line)) < 1e-9


def test_domain_exit(entries):
    with pytest.raises(DomainExitError):
        geodesic(entries("flat2").frame, [0.9, 0.0], [1.0, 0.0], 1e-2, 1.0)


def test_zero_velocity_rejected(entries):
    with pytest.raises(ValueError):
        geodesic(entries("flat2").frame, [0.0, 0.0], [0.0, 0.0], 1e-2, 1.0)


def test_trajectory_csv_header(entries):
    tr = geodesic(entries("sphere2").frame, [1.0, 0.0], [0.3, 0.8], 1e-2, 0.1)
    lines = tr.to_csv().splitlines()
    assert lines[0] == "t,x1,x2,v1,v2"
    assert len(lines) == len(tr.t) + 1
