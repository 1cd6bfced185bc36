"""Riemann-Cartan moving-frames engine.

Submodules: :mod:`expr` (scalar expressions), :mod:`exterior` (forms and
multivectors), :mod:`cartan` (frames, connections, structure equations),
:mod:`transport` (parallel transport, holonomy, autoparallels),
:mod:`einstein` (Einstein tensor and forms), :mod:`cosserat` (Cosserat
equilibrium), :mod:`catalog` (reference geometries) and :mod:`cli`.
"""
from .cartan import (
    CartanConnection,
    Flatness,
    FrameField,
    Signature,
    Status,
    Verdict,
    curvature,
    is_flat,
    levi_civita,
    torsion,
    zero_verdict,
)
from .catalog import NAMES, builtin, lie_group_teleparallel, verify_ledger
from .expr import Chart, Expr, ZeroStatus, as_expr, evaluate, is_zero, parse, symbol
from .exterior import Form, MultiVector, frame_components, grassmann_dual, wedge
from .kernel import BACKEND_NAME
from .transport import CurveSpec, autoparallel, geodesic, loop_holonomy, parallel_transport, square_loop

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "CartanConnection",
    "Chart",
    "CurveSpec",
    "Expr",
    "Flatness",
    "Form",
    "FrameField",
    "MultiVector",
    "NAMES",
    "Signature",
    "Status",
    "Verdict",
    "ZeroStatus",
    "as_expr",
    "autoparallel",
    "builtin",
    "curvature",
    "evaluate",
    "frame_components",
    "geodesic",
    "grassmann_dual",
    "is_flat",
    "is_zero",
    "levi_civita",
    "lie_group_teleparallel",
    "loop_holonomy",
    "parallel_transport",
    "parse",
    "square_loop",
    "symbol",
    "torsion",
    "verify_ledger",
    "wedge",
    "zero_verdict",
]
