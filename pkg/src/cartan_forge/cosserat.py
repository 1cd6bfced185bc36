"""Cosserat elastostatics on regular three-dimensional grids.

Index convention: ``p[i][j]`` is the force component ``j`` transmitted across
a surface element whose normal points along axis ``i``; ``q[i][j]`` is the
corresponding couple component.  With that pairing

* force balance:   ``X_j = sum_i d p_ij / d x_i``
* moment balance:  ``L_j = sum_i d q_ij / d x_i + p_kl - p_lk`` for cyclic ``(j, k, l)``
* tractions:       ``F_j = sum_i p_ij n_i`` and ``J_j = sum_i q_ij n_i``

Fields are either symbolic (``Expr`` over ``x1, x2, x3``) or node arrays of
shape ``(3, 3, N1, N2, N3)``.  Symbolic inputs give exact residuals; array
inputs use second-order central differences with second-order one-sided
stencils on the boundary (``numpy.gradient`` with ``edge_order=2``).
"""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .cartan import CartanConnection, Verdict, zero_verdict
from .einstein import DimensionError, vector_couple_equilibrium
from .exterior import MultiVector, bivector_to_polar, blade_sign, frame_components, grassmann_dual
from .expr import ZERO, Expr, as_expr, differentiate, evaluate_array

__all__ = [
    "Grid",
    "MediumField",
    "LoadField",
    "ResidualField",
    "ClassicalVerdict",
    "MediumSystem",
    "ShapeMismatchError",
    "NormalError",
    "COORDS",
    "CYCLIC_3",
    "force_residual",
    "torque_residual",
    "traction",
    "classical_limit_check",
    "integral_balance",
    "geometry_to_medium",
    "read_medium_csv",
    "write_medium_csv",
    "CSV_HEADER",
]

COORDS = ("x1", "x2", "x3")
#: (j, k, l) cyclic permutations of (0, 1, 2) used by the moment balance.
CYCLIC_3 = ((0, 1, 2), (1, 2, 0), (2, 0, 1))
NORMAL_TOL = 1e-12
CSV_HEADER = ["i", "j", "k", "x1", "x2", "x3"] + [
    f"{s}{a}{b}" for s in "pq" for a in (1, 2, 3) for b in (1, 2, 3)
]


class ShapeMismatchError(ValueError):
    pass


class NormalError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Regular node grid: ``shape`` nodes per axis, ``spacing`` h, ``origin``."""

    shape: tuple[int, int, int]
    spacing: tuple[float, float, float]
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        shape = tuple(int(s) for s in self.shape)
        spacing = tuple(float(h) for h in self.spacing)
        origin = tuple(float(o) for o in self.origin)
        if len(shape) != 3 or len(spacing) != 3 or len(origin) != 3:
            raise ShapeMismatchError("a grid needs three extents, spacings and origin values")
        if any(s < 3 for s in shape):
            raise ShapeMismatchError("each axis needs at least 3 nodes for second-order stencils")
        if any(not h > 0 for h in spacing):
            raise ShapeMismatchError("grid spacing must be positive")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)

    @classmethod
    def box(cls, lower: Sequence[float], upper: Sequence[float], nodes: Sequence[int] | int) -> "Grid":
        if isinstance(nodes, int):
            nodes = (nodes,) * 3
        spacing = tuple((u - lo) / (n - 1) for lo, u, n in zip(lower, upper, nodes))
        return cls(tuple(nodes), spacing, tuple(lower))

    def axes(self) -> list[np.ndarray]:
        return [o + h * np.arange(n) for o, h, n in zip(self.origin, self.spacing, self.shape)]

    def nodes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.meshgrid(*self.axes(), indexing="ij"))

    def env(self, params: Mapping[str, float] | None = None) -> dict:
        env = dict(zip(COORDS, self.nodes()))
        env.update(params or {})
        return env


def _is_symbolic(block) -> bool:
    return not isinstance(block, np.ndarray)


def _matrix(block, grid: Grid, name: str):
    """Normalize a 3x3 block to either a list of Expr rows or an array."""
    if block is None:
        return [[ZERO] * 3 for _ in range(3)]
    if isinstance(block, np.ndarray):
        want = (3, 3) + grid.shape
        if block.shape != want:
            raise ShapeMismatchError(f"{name} has shape {block.shape}, expected {want}")
        return np.asarray(block, dtype=float)
    rows = [list(r) for r in block]
    if len(rows) != 3 or any(len(r) != 3 for r in rows):
        raise ShapeMismatchError(f"{name} must be 3x3")
    return [[as_expr(c) for c in r] for r in rows]


def _vector(block, grid: Grid, name: str):
    if block is None:
        return [ZERO] * 3
    if isinstance(block, np.ndarray):
        want = (3,) + grid.shape
        if block.shape != want:
            raise ShapeMismatchError(f"{name} has shape {block.shape}, expected {want}")
        return np.asarray(block, dtype=float)
    vals = list(block)
    if len(vals) != 3:
        raise ShapeMismatchError(f"{name} must have three components")
    return [as_expr(c) for c in vals]


@dataclass
class MediumField:
    """Stress ``p`` and couple stress ``q`` on a grid, symbolic or as node arrays."""

    grid: Grid
    p: object = None
    q: object = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.p = _matrix(self.p, self.grid, "p")
        self.q = _matrix(self.q, self.grid, "q")

    @property
    def symbolic(self) -> bool:
        return _is_symbolic(self.p) and _is_symbolic(self.q)

    def node_values(self) -> tuple[np.ndarray, np.ndarray]:
        return _block_values(self.p, self.grid, self.params), _block_values(self.q, self.grid, self.params)

    def to_arrays(self) -> "MediumField":
        p, q = self.node_values()
        return MediumField(self.grid, p, q, dict(self.params))


@dataclass
class LoadField:
    """Body force ``X`` and body torque ``L`` densities."""

    X: object = None
    L: object = None

    def resolved(self, grid: Grid) -> tuple:
        return _vector(self.X, grid, "X"), _vector(self.L, grid, "L")


def _block_values(block, grid: Grid, params) -> np.ndarray:
    if isinstance(block, np.ndarray):
        return block
    env = grid.env(params)
    flat = [[evaluate_array(c, env) for c in row] for row in block] if isinstance(block[0], list) else [
        evaluate_array(c, env) for c in block
    ]
    return np.asarray(flat, dtype=float)


@dataclass
class ResidualField:
    """Residual 3-vector per node; ``exprs`` is set when computed symbolically."""

    values: np.ndarray
    exprs: list[Expr] | None = None

    @property
    def norms(self) -> np.ndarray:
        return np.sqrt(np.sum(self.values**2, axis=0))

    @property
    def max_norm(self) -> float:
        return float(np.max(self.norms))

    @property
    def mean_norm(self) -> float:
        return float(np.mean(self.norms))

    @property
    def exact_zero(self) -> bool:
        return self.exprs is not None and all(not e for e in self.exprs)

    def summary(self) -> dict:
        return {"max_norm": self.max_norm, "mean_norm": self.mean_norm, "exact_zero": self.exact_zero}


def _divergence_symbolic(block) -> list[Expr]:
    return [sum((differentiate(block[i][j], COORDS[i]) for i in range(3)), ZERO) for j in range(3)]


def _divergence_array(block: np.ndarray, grid: Grid) -> np.ndarray:
    out = np.zeros((3,) + grid.shape)
    for i in range(3):
        for j in range(3):
            out[j] += np.gradient(block[i, j], grid.spacing[i], axis=i, edge_order=2)
    return out


def _antisym(p, j: int, k: int, l: int):
    return p[k][l] - p[l][k]


def _assemble(M: MediumField, load, symbolic_parts, array_parts) -> ResidualField:
    """Symbolic path when every input is symbolic, else node arrays."""
    if M.symbolic and all(_is_symbolic(v) for v in load):
        exprs = symbolic_parts()
        vals = _block_values(exprs, M.grid, M.params)
        return ResidualField(vals, exprs)
    return ResidualField(array_parts())


def force_residual(M: MediumField, L: LoadField) -> ResidualField:
    """residual_j = X_j - sum_i d p_ij / d x_i."""
    X, _ = L.resolved(M.grid)

    def sym():
        div = _divergence_symbolic(M.p)
        return [X[j] - div[j] for j in range(3)]

    def arr():
        p, _ = M.node_values()
        return _block_values(X, M.grid, M.params) - _divergence_array(p, M.grid)

    return _assemble(M, (X,), sym, arr)


def torque_residual(M: MediumField, L: LoadField) -> ResidualField:
    """residual_j = L_j - sum_i d q_ij / d x_i - (p_kl - p_lk), (j, k, l) cyclic."""
    _, Lv = L.resolved(M.grid)

    def sym():
        div = _divergence_symbolic(M.q)
        return [Lv[j] - div[j] - _antisym(M.p, j, k, l) for j, k, l in CYCLIC_3]

    def arr():
        p, q = M.node_values()
        div = _divergence_array(q, M.grid)
        out = _block_values(Lv, M.grid, M.params) - div
        for j, k, l in CYCLIC_3:
            out[j] -= p[k, l] - p[l, k]
        return out

    return _assemble(M, (Lv,), sym, arr)


def traction(M: MediumField, n: Sequence[float]) -> tuple:
    """Surface force ``F_j = sum_i p_ij n_i`` and couple ``J_j = sum_i q_ij n_i``.

    ``n`` is a constant unit normal.  Symbolic media return Expr triples,
    array media return arrays of shape ``(3, N1, N2, N3)``.
    """
    n = [float(c) for c in n]
    if len(n) != 3:
        raise NormalError("the normal needs three components")
    norm = float(np.sqrt(sum(c * c for c in n)))
    if abs(norm - 1.0) > NORMAL_TOL:
        raise NormalError(f"normal {n} is not a unit vector (|n| = {norm:.12e})")
    if M.symbolic:
        F = tuple(sum((M.p[i][j] * as_expr(n[i]) for i in range(3) if n[i]), ZERO) for j in range(3))
        J = tuple(sum((M.q[i][j] * as_expr(n[i]) for i in range(3) if n[i]), ZERO) for j in range(3))
        return F, J
    p, q = M.node_values()
    nv = np.asarray(n)
    return np.einsum("i,ij...->j...", nv, p), np.einsum("i,ij...->j...", nv, q)


@dataclass
class ClassicalVerdict:
    """Outcome of the symmetric-stress reduction check."""

    applicable: bool
    passed: bool
    max_violation: float
    asymmetry: float
    divergence: float
    tolerance: float

    def as_dict(self) -> dict:
        return {
            "applicable": self.applicable,
            "passed": self.passed,
            "max_violation": self.max_violation,
            "asymmetry": self.asymmetry,
            "divergence": self.divergence,
            "tolerance": self.tolerance,
        }


def _max_abs(vals) -> float:
    vals = np.asarray(vals, dtype=float)
    return float(np.max(np.abs(vals))) if vals.size else 0.0


def classical_limit_check(M: MediumField, L: LoadField | None = None, tolerance: float = 1e-10) -> ClassicalVerdict:
    """With no body loads and no couple stress the stress must be symmetric and divergence-free.

    Returns ``applicable = False`` (and ``passed = False``) when the loads or
    the couple stress do not vanish, since the reduction then says nothing.
    """
    L = L or LoadField()
    X, Lv = L.resolved(M.grid)
    p, q = M.node_values()
    loads = max(_max_abs(_block_values(X, M.grid, M.params)), _max_abs(_block_values(Lv, M.grid, M.params)), _max_abs(q))
    asym = _max_abs([p[k, l] - p[l, k] for _, k, l in CYCLIC_3])
    if M.symbolic:
        div = _max_abs(_block_values(_divergence_symbolic(M.p), M.grid, M.params))
    else:
        div = _max_abs(_divergence_array(p, M.grid))
    worst = max(asym, div)
    applicable = loads <= tolerance
    return ClassicalVerdict(applicable, applicable and worst <= tolerance, worst, asym, div, tolerance)


def _trapezoid(values: np.ndarray, spacing: Sequence[float], axes: Sequence[int]) -> np.ndarray:
    out = values
    for ax in sorted(axes, reverse=True):
        out = trapezoid(out, dx=spacing[ax], axis=ax)
    return out


def integral_balance(M: MediumField, L: LoadField, lo: Sequence[int] | None = None, hi: Sequence[int] | None = None) -> np.ndarray:
    """Net outward traction over a grid-aligned box minus the integrated body force.

    ``lo``/``hi`` are inclusive node indices of the box corners (default: the
    whole grid).  Both integrals use the trapezoid rule, so the result is
    ``O(h^2)`` whenever the force residual vanishes.
    """
    g = M.grid
    lo = tuple(lo) if lo is not None else (0, 0, 0)
    hi = tuple(hi) if hi is not None else tuple(s - 1 for s in g.shape)
    if any(a < 0 or b >= s or b - a < 1 for a, b, s in zip(lo, hi, g.shape)):
        raise ShapeMismatchError(f"box {lo}..{hi} does not fit the grid {g.shape}")
    sl = tuple(slice(a, b + 1) for a, b in zip(lo, hi))
    p, _ = M.node_values()
    X, _ = L.resolved(g)
    Xv = _block_values(X, g, M.params)
    out = np.zeros(3)
    for j in range(3):
        vol = _trapezoid(Xv[j][sl], g.spacing, (0, 1, 2))
        surf = 0.0
        for i in range(3):
            comp = p[i, j][sl]
            other = [a for a in range(3) if a != i]
            hi_face = np.take(comp, -1, axis=i)
            lo_face = np.take(comp, 0, axis=i)
            face = hi_face - lo_face
            # after removing axis i the remaining axes renumber to 0, 1
            surf += float(_trapezoid(face, [g.spacing[a] for a in other], (0, 1)))
        out[j] = surf - float(vol)
    return out


# ---------------------------------------------------------------------------
# geometry -> medium


@dataclass
class MediumSystem:
    """Stress and couple systems read off a three-dimensional connection.

    ``stress[c][i]``: polar stress component ``i`` on the surface element with
    frame normal ``c``; ``couple[c]``: the couple bivector on that element
    (keys ``(a, b)`` with ``a < b``); ``couple_axial[c][i]`` its polar form.
    """

    stress: list[list[Expr]]
    couple: list[dict]
    couple_axial: list[list[Expr]]
    equilibrium: Verdict
    stress_zero: bool
    couple_zero: bool

    def as_dict(self) -> dict:
        return {
            "stress": [[str(e) for e in row] for row in self.stress],
            "couple": [{f"{a + 1}{b + 1}": str(v) for (a, b), v in sorted(c.items())} for c in self.couple],
            "couple_axial": [[str(e) for e in row] for row in self.couple_axial],
            "equilibrium": self.equilibrium.as_dict(),
            "stress_zero": self.stress_zero,
            "couple_zero": self.couple_zero,
        }


def _element_component(form, frame, c: int) -> Expr:
    """Frame component of a 2-form on the surface element normal to ``c``."""
    a, b = (x for x in range(3) if x != c)
    comps = frame_components(form, frame)
    return comps.get((a, b), ZERO) * blade_sign((c, a, b))


def geometry_to_medium(C: CartanConnection, tolerance: float = 1e-10) -> MediumSystem:
    """Curvature becomes a stress system, torsion a couple system.

    The rotational curvature ``Omega_kl`` is a bivector-valued 2-form; passing
    it through :func:`bivector_to_polar` gives a vector-valued 2-form whose
    value on each surface element is the stress vector.  The torsion
    ``Omega^i`` is a vector-valued 2-form; :func:`grassmann_dual` turns it into
    a bivector-valued one, the couple on each surface element.
    """
    if C.n != 3:
        raise DimensionError(f"geometry_to_medium needs dimension 3, got {C.n}")
    F = C.frame
    eps = F.signature
    data = C.data
    curv = MultiVector(3, 2, {(k, l): data.curvature[k][l] * eps[k] for k, l in itertools.combinations(range(3), 2)})
    stress_forms = bivector_to_polar(curv)
    tors = MultiVector(3, 1, {(i,): data.torsion[i] for i in range(3)})
    couple_forms = grassmann_dual(tors, eps)
    axial_forms = bivector_to_polar(couple_forms)

    def comp(mv, key, c):
        f = mv[key]
        return ZERO if f is None else _element_component(f, F, c)

    stress = [[comp(stress_forms, (i,), c) for i in range(3)] for c in range(3)]
    couple = [
        {key: v for key in itertools.combinations(range(3), 2) if (v := comp(couple_forms, key, c))}
        for c in range(3)
    ]
    couple_axial = [[comp(axial_forms, (i,), c) for i in range(3)] for c in range(3)]
    eq = vector_couple_equilibrium(C)
    verdict = zero_verdict(eq.forms(), F, tolerance=tolerance)
    s_zero = zero_verdict([e for row in stress for e in row], F, tolerance=tolerance).holds
    c_zero = zero_verdict([e for row in couple_axial for e in row], F, tolerance=tolerance).holds
    return MediumSystem(stress, couple, couple_axial, verdict, s_zero, c_zero)


# ---------------------------------------------------------------------------
# CSV node arrays


def _uniform_axis(values: np.ndarray, name: str) -> tuple[float, float, int]:
    u = np.unique(values)
    if len(u) < 3:
        raise ShapeMismatchError(f"axis {name} needs at least 3 distinct node coordinates")
    d = np.diff(u)
    if not np.allclose(d, d[0], rtol=1e-9, atol=0.0):
        raise ShapeMismatchError(f"axis {name} is not uniformly spaced")
    return float(u[0]), float(d[0]), len(u)


def read_medium_csv(path) -> MediumField:
    """Load node arrays from CSV with header ``i,j,k,x1,x2,x3,p11..p33,q11..q33``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header != CSV_HEADER:
            missing = [h for h in CSV_HEADER if h not in header]
            raise ShapeMismatchError(f"bad CSV header; missing or misordered column(s): {missing or header}")
        rows = [[float(x) for x in r] for r in reader if r]
    data = np.asarray(rows, dtype=float)
    if data.ndim != 2 or data.shape[1] != len(CSV_HEADER):
        raise ShapeMismatchError("CSV rows have inconsistent lengths")
    axes = [_uniform_axis(data[:, 3 + a], COORDS[a]) for a in range(3)]
    grid = Grid(tuple(a[2] for a in axes), tuple(a[1] for a in axes), tuple(a[0] for a in axes))
    idx = data[:, :3].astype(int)
    if len(data) != int(np.prod(grid.shape)):
        raise ShapeMismatchError(f"expected {int(np.prod(grid.shape))} nodes, found {len(data)}")
    p = np.zeros((3, 3) + grid.shape)
    q = np.zeros((3, 3) + grid.shape)
    for row, (a, b, c) in zip(data, idx):
        p[:, :, a, b, c] = row[6:15].reshape(3, 3)
        q[:, :, a, b, c] = row[15:24].reshape(3, 3)
    return MediumField(grid, p, q)


def write_medium_csv(M: MediumField, path) -> None:
    p, q = M.node_values()
    X1, X2, X3 = M.grid.nodes()
    lines = [",".join(CSV_HEADER)]
    for a, b, c in itertools.product(*(range(s) for s in M.grid.shape)):
        vals = [X1[a, b, c], X2[a, b, c], X3[a, b, c]] + list(p[:, :, a, b, c].ravel()) + list(q[:, :, a, b, c].ravel())
        lines.append(f"{a},{b},{c}," + ",".join(f"{v:.12e}" for v in vals))
    from .report import atomic_write_text

    atomic_write_text(path, "\n".join(lines) + "\n")
