"""Moving frames, metric connections and the structure equations.

Conventions (one storage convention throughout):

* the coframe is ``omega^i = sum_mu theta[i][mu] dx^mu`` and the metric is
  ``ds^2 = sum_i eps_i (omega^i)^2``;
* connection forms are stored with the first index raised, ``omega^i_j``;
  the all-lower Euclidean form is ``omega_ij = eps_i omega^i_j`` and metricity
  reads ``eps_i omega^i_j + eps_j omega^j_i = 0``;
* torsion ``Omega^i = d omega^i + sum_k omega^i_k ^ omega^k`` with frame
  components ``Omega^i = sum_{j<k} A^i_jk omega^j ^ omega^k``;
* curvature ``Omega^i_j = d omega^i_j + sum_k omega^i_k ^ omega^k_j`` with
  ``Omega^i_j = sum_{k<l} A^i_jkl omega^k ^ omega^l``.

Zero checks are symbolic first.  When the simplifier leaves a residual
expression, :func:`zero_verdict` evaluates it at deterministic sample points
inside the chart bounds and reports a ``NUMERIC`` (downgraded) verdict.
"""
from __future__ import annotations

import enum
import itertools
from fractions import Fraction
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .expr import (
    ZERO,
    Chart,
    EvaluationError,
    Expr,
    SAMPLE_SEED,
    ZeroStatus,
    as_expr,
    evaluate,
)
from .exterior import (
    Form,
    SingularCoframeError,
    combine_status,
    determinant,
    frame_components,
    from_frame_components,
    wedge,
)

__all__ = [
    "Signature",
    "FrameField",
    "CartanConnection",
    "CurvatureData",
    "MetricityError",
    "SingularCoframeError",
    "Status",
    "Verdict",
    "Flatness",
    "zero_verdict",
    "metric_from_coframe",
    "torsion",
    "curvature",
    "is_flat",
    "levi_civita",
    "contorsion_split",
    "torsion_from_contorsion",
    "normality_check",
    "first_bianchi",
    "second_bianchi",
]

DEFAULT_TOLERANCE = 1e-10
DEFAULT_POINTS = 20


class MetricityError(ValueError):
    pass


@dataclass(frozen=True)
class Signature:
    eps: tuple[int, ...]

    def __post_init__(self):
        eps = tuple(int(e) for e in self.eps)
        if any(e not in (1, -1) for e in eps):
            raise ValueError(f"signature entries must be +1 or -1, got {self.eps}")
        object.__setattr__(self, "eps", eps)

    @classmethod
    def euclidean(cls, n: int) -> "Signature":
        return cls((1,) * n)

    @classmethod
    def lorentzian(cls, n: int = 4) -> "Signature":
        return cls((1,) + (-1,) * (n - 1))

    def __len__(self):
        return len(self.eps)

    def __getitem__(self, i):
        return self.eps[i]

    def __iter__(self):
        return iter(self.eps)

    @property
    def product(self) -> int:
        p = 1
        for e in self.eps:
            p *= e
        return p

    def __str__(self):
        return "(" + "".join("+" if e > 0 else "-" for e in self.eps) + ")"


# ---------------------------------------------------------------------------
# verdicts


class Status(enum.Enum):
    PROVEN = "proven"
    NUMERIC = "numeric"
    REFUTED = "refuted"


@dataclass(frozen=True)
class Verdict:
    status: Status
    max_residual: float
    points: int = 0

    @property
    def holds(self) -> bool:
        return self.status is not Status.REFUTED

    @property
    def downgraded(self) -> bool:
        return self.status is Status.NUMERIC

    def as_dict(self) -> dict:
        return {"status": self.status.value, "max_residual": self.max_residual, "points": self.points}


def _collect_exprs(items) -> list[Expr]:
    out: list[Expr] = []
    stack = [items]
    while stack:
        x = stack.pop()
        if isinstance(x, Form):
            out.extend(x.coeffs.values())
        elif isinstance(x, Expr):
            if x:
                out.append(x)
        elif isinstance(x, Mapping):
            stack.extend(x.values())
        elif isinstance(x, (list, tuple)):
            stack.extend(x)
        elif x is None:
            continue
        else:
            out.append(as_expr(x))
    return [e for e in out if e]


def zero_verdict(
    items,
    frame: "FrameField",
    tolerance: float = DEFAULT_TOLERANCE,
    points: int = DEFAULT_POINTS,
    seed: int = SAMPLE_SEED,
) -> Verdict:
    """Symbolic zero proof with a deterministic numeric fallback."""
    exprs = _collect_exprs(items)
    if not exprs:
        return Verdict(Status.PROVEN, 0.0, 0)
    worst = 0.0
    for p in frame.sample_points(points, seed):
        for e in exprs:
            try:
                v = abs(evaluate(e, p, frame.params))
            except EvaluationError:
                v = float("inf")
            worst = max(worst, v)
    status = Status.NUMERIC if worst < tolerance else Status.REFUTED
    return Verdict(status, worst, points)


class Flatness(enum.Enum):
    PROVEN_FLAT = "proven-flat"
    NOT_FLAT = "not-flat"
    UNKNOWN = "unknown"


# ---------------------------------------------------------------------------
# frames


class FrameField:
    """Chart, signature and orthonormal coframe with its symbolic inverse.

    ``params`` binds numeric values for named parameters (radius, torsion
    strength, ...) used whenever numbers are needed.
    """

    def __init__(
        self,
        chart: Chart,
        signature: Signature | Sequence[int],
        coframe: Sequence[Form],
        params: Mapping[str, float] | None = None,
    ):
        if not isinstance(signature, Signature):
            signature = Signature(tuple(signature))
        n = chart.dim
        if len(signature) != n:
            raise ValueError(f"signature length {len(signature)} does not match dimension {n}")
        if len(coframe) != n:
            raise ValueError(f"coframe has {len(coframe)} forms, chart dimension is {n}")
        for w in coframe:
            if w.degree != 1 or w.chart != chart:
                raise ValueError("coframe entries must be 1-forms on the frame chart")
        self.chart = chart
        self.signature = signature
        self.coframe = tuple(coframe)
        self.params = dict(params or {})
        self.matrix = [w.one_form_coefficients() for w in self.coframe]
        self.det = determinant(self.matrix)
        if not self.det:
            raise SingularCoframeError("coframe determinant is identically zero")

    @property
    def n(self) -> int:
        return self.chart.dim

    @cached_property
    def inverse(self) -> list[list[Expr]]:
        """E[mu][i] with dx^mu = sum_i E[mu][i] omega^i (adjugate over det)."""
        n = self.n
        m = self.matrix
        inv_det = self.det**-1
        E = [[ZERO] * n for _ in range(n)]
        for i in range(n):
            for mu in range(n):
                sub = [row[:mu] + row[mu + 1:] for k, row in enumerate(m) if k != i]
                cof = determinant(sub)
                if (i + mu) % 2:
                    cof = -cof
                E[mu][i] = cof * inv_det
        return E

    def frame_vector(self, i: int) -> list[Expr]:
        """Coordinate components of the dual frame vector e_i."""
        return [self.inverse[mu][i] for mu in range(self.n)]

    def sample_points(self, count: int = DEFAULT_POINTS, seed: int = SAMPLE_SEED) -> list[dict[str, float]]:
        return self.chart.sample_points(count, seed)

    def components(self, form: Form) -> dict[tuple, Expr]:
        return frame_components(form, self)

    def with_params(self, **params) -> "FrameField":
        merged = dict(self.params)
        merged.update(params)
        return FrameField(self.chart, self.signature, self.coframe, merged)

    def __repr__(self):
        return f"FrameField(coords={self.chart.coordinates}, signature={self.signature})"


def metric_from_coframe(F: FrameField) -> list[list[Expr]]:
    """g_{mu nu} = sum_i eps_i theta[i][mu] theta[i][nu]."""
    n = F.n
    g = [[ZERO] * n for _ in range(n)]
    for mu in range(n):
        for nu in range(mu, n):
            s = ZERO
            for i in range(n):
                s = s + F.matrix[i][mu] * F.matrix[i][nu] * F.signature[i]
            g[mu][nu] = s
            g[nu][mu] = s
    return g


# ---------------------------------------------------------------------------
# connections


@dataclass
class CurvatureData:
    torsion: list[Form]
    curvature: list[list[Form]]
    torsion_components: list[dict[tuple, Expr]]
    curvature_components: list[list[dict[tuple, Expr]]]

    def A_torsion(self, i: int, j: int, k: int) -> Expr:
        if j == k:
            return ZERO
        if j < k:
            return self.torsion_components[i].get((j, k), ZERO)
        return -self.torsion_components[i].get((k, j), ZERO)

    def A_curvature(self, i: int, j: int, k: int, l: int) -> Expr:
        if k == l:
            return ZERO
        if k < l:
            return self.curvature_components[i][j].get((k, l), ZERO)
        return -self.curvature_components[i][j].get((l, k), ZERO)


class CartanConnection:
    """Metric-compatible connection 1-forms omega^i_j over a frame field."""

    def __init__(self, frame: FrameField, omega: Sequence[Sequence[Form]], validate: bool = True, label: str = ""):
        n = frame.n
        if len(omega) != n or any(len(row) != n for row in omega):
            raise ValueError(f"connection must be a {n}x{n} matrix of 1-forms")
        for row in omega:
            for w in row:
                if w.degree != 1 or w.chart != frame.chart:
                    raise ValueError("connection entries must be 1-forms on the frame chart")
        self.frame = frame
        self.omega = tuple(tuple(row) for row in omega)
        self.label = label
        if validate:
            v = zero_verdict(self.metricity_residuals(), frame)
            if not v.holds:
                raise MetricityError(f"connection violates metricity (residual {v.max_residual:.3e})")

    @property
    def n(self) -> int:
        return self.frame.n

    @property
    def chart(self) -> Chart:
        return self.frame.chart

    def metricity_residuals(self) -> list[Form]:
        eps = self.frame.signature
        out = []
        for i in range(self.n):
            for j in range(i, self.n):
                out.append(self.omega[i][j] * eps[i] + self.omega[j][i] * eps[j])
        return out

    def lowered(self, i: int, j: int) -> Form:
        """omega_ij = eps_i omega^i_j."""
        return self.omega[i][j] * self.frame.signature[i]

    @cached_property
    def data(self) -> CurvatureData:
        n = self.n
        F = self.frame
        tor = []
        for i in range(n):
            t = F.coframe[i].d()
            for k in range(n):
                t = t + wedge(self.omega[i][k], F.coframe[k])
            tor.append(t)
        cur = []
        for i in range(n):
            row = []
            for j in range(n):
                c = self.omega[i][j].d()
                for k in range(n):
                    c = c + wedge(self.omega[i][k], self.omega[k][j])
                row.append(c)
            cur.append(row)
        tcomp = [frame_components(t, F) for t in tor]
        ccomp = [[frame_components(c, F) for c in row] for row in cur]
        return CurvatureData(tor, cur, tcomp, ccomp)

    def scaled_params(self, **params) -> "CartanConnection":
        frame = self.frame.with_params(**params)
        return CartanConnection(frame, self.omega, validate=False, label=self.label)


def torsion(C: CartanConnection) -> list[Form]:
    return C.data.torsion


def curvature(C: CartanConnection) -> list[list[Form]]:
    return C.data.curvature


def is_flat(C: CartanConnection, part: str = "both") -> Flatness:
    """Tri-state flatness of the part selected by ``part``."""
    if part not in ("both", "rotational", "torsion"):
        raise ValueError("part must be 'both', 'rotational' or 'torsion'")
    forms: list[Form] = []
    if part in ("both", "torsion"):
        forms += C.data.torsion
    if part in ("both", "rotational"):
        forms += [w for row in C.data.curvature for w in row]
    bounds = C.chart.bounds_map()
    status = combine_status(f.zero_status(bounds=bounds, params=C.frame.params) for f in forms)
    return {
        ZeroStatus.PROVEN_ZERO: Flatness.PROVEN_FLAT,
        ZeroStatus.PROVEN_NONZERO: Flatness.NOT_FLAT,
        ZeroStatus.UNKNOWN: Flatness.UNKNOWN,
    }[status]


def levi_civita(F: FrameField) -> CartanConnection:
    """Torsion-free metric connection from the anholonomy coefficients.

    With ``d omega^i = -1/2 C^i_jk omega^j ^ omega^k`` and ``C_ijk = eps_i C^i_jk``
    the solution is ``Gamma_ijk = -1/2 (C_ijk + C_jki - C_kij)`` and
    ``omega^i_j = eps_i sum_k Gamma_ijk omega^k``.
    """
    n = F.n
    eps = F.signature
    C = [[[ZERO] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        comps = frame_components(F.coframe[i].d(), F)
        for (j, k), a in comps.items():
            C[i][j][k] = -a * eps[i]
            C[i][k][j] = a * eps[i]
    omega = []
    for i in range(n):
        row = []
        for j in range(n):
            w = Form.zero(F.chart, 1)
            if i != j:
                for k in range(n):
                    g = (C[i][j][k] + C[j][k][i] - C[k][i][j]) * Fraction(-eps[i], 2)
                    if g:
                        w = w + F.coframe[k] * g
            row.append(w)
        omega.append(row)
    return CartanConnection(F, omega, validate=False, label="levi-civita")


def contorsion_split(C: CartanConnection) -> tuple[CartanConnection, list[list[Form]]]:
    """C = levi_civita(frame) + K; returns the Levi-Civita part and K."""
    lc = levi_civita(C.frame)
    K = [[C.omega[i][j] - lc.omega[i][j] for j in range(C.n)] for i in range(C.n)]
    return lc, K


def torsion_from_contorsion(F: FrameField, K: Sequence[Sequence[Form]]) -> list[Form]:
    n = F.n
    out = []
    for i in range(n):
        t = Form.zero(F.chart, 2)
        for k in range(n):
            t = t + wedge(K[i][k], F.coframe[k])
        out.append(t)
    return out


def normality_check(
    C: CartanConnection,
    triple: Sequence[int] | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> dict[tuple[int, int], bool]:
    """Is the torsion translation of each coframe plane (j,k) normal to it?

    The translation attached to the plane spanned by e_j, e_k is the vector
    with frame components A^i_jk; normality requires A^j_jk = A^k_jk = 0.
    In dimension 4 the planes are taken inside ``triple`` (default: the three
    spatial directions).
    """
    n = C.n
    if triple is None:
        triple = tuple(range(n)) if n == 3 else (1, 2, 3)
    if n not in (3, 4) or len(triple) != 3:
        raise ValueError("normality check needs n = 3, or n = 4 with a spatial triple")
    data = C.data
    out = {}
    for j, k in itertools.combinations(sorted(triple), 2):
        along = [data.A_torsion(j, j, k), data.A_torsion(k, j, k)]
        out[(j, k)] = zero_verdict(along, C.frame, tolerance).holds
    return out


def first_bianchi(C: CartanConnection) -> list[Form]:
    """d Omega^i + omega^i_k ^ Omega^k - Omega^i_k ^ omega^k (vanishes identically)."""
    n = C.n
    T, R = C.data.torsion, C.data.curvature
    out = []
    for i in range(n):
        b = T[i].d()
        for k in range(n):
            b = b + wedge(C.omega[i][k], T[k]) - wedge(R[i][k], C.frame.coframe[k])
        out.append(b)
    return out


def second_bianchi(C: CartanConnection) -> list[list[Form]]:
    """d Omega^i_j + omega^i_k ^ Omega^k_j - Omega^i_k ^ omega^k_j."""
    n = C.n
    R = C.data.curvature
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            b = R[i][j].d()
            for k in range(n):
                b = b + wedge(C.omega[i][k], R[k][j]) - wedge(R[i][k], C.omega[k][j])
            row.append(b)
        out.append(row)
    return out
