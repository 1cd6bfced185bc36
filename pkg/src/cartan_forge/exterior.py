"""Exterior algebra of differential forms with symbolic coefficients.

Forms live in the coordinate basis ``dx^{i1} ^ ... ^ dx^{ik}`` (strictly
increasing indices, zero coefficients never stored).  Frame components are
computed on demand through minors of the inverse coframe matrix.
:class:`MultiVector` holds expansions over frame blades ``e_I``; its
coefficients may be scalars or forms, which is how vector- and
bivector-valued forms are represented.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .expr import (
    ONE,
    ZERO,
    Chart,
    Expr,
    ZeroStatus,
    as_expr,
    differentiate,
    evaluate,
    is_zero,
    symbol,
)

__all__ = [
    "Form",
    "MultiVector",
    "ChartMismatchError",
    "SingularCoframeError",
    "wedge",
    "exterior_derivative",
    "grassmann_dual",
    "bivector_to_polar",
    "frame_components",
    "from_frame_components",
    "determinant",
    "blade_sign",
    "combine_status",
]


class ChartMismatchError(ValueError):
    pass


class SingularCoframeError(ValueError):
    pass


def blade_sign(seq: Sequence[int]) -> int:
    """Sign of the permutation sorting ``seq``; 0 when an index repeats."""
    if len(set(seq)) != len(seq):
        return 0
    inversions = sum(1 for a, b in itertools.combinations(seq, 2) if a > b)
    return -1 if inversions % 2 else 1


def combine_status(statuses: Iterable[ZeroStatus]) -> ZeroStatus:
    """Zero status of a collection: zero only if every member is."""
    result = ZeroStatus.PROVEN_ZERO
    for s in statuses:
        if s is ZeroStatus.PROVEN_NONZERO:
            return s
        if s is ZeroStatus.UNKNOWN:
            result = s
    return result


class Form:
    """A differential k-form over a :class:`Chart`."""

    __slots__ = ("chart", "degree", "coeffs")

    def __init__(self, chart: Chart, degree: int, coeffs: Mapping[tuple, object] | None = None):
        if degree < 0:
            raise ValueError("form degree must be non-negative")
        self.chart = chart
        self.degree = degree
        clean: dict[tuple, Expr] = {}
        if degree <= chart.dim:
            for idx, c in (coeffs or {}).items():
                idx = tuple(idx)
                if len(idx) != degree:
                    raise ValueError(f"index {idx} does not match degree {degree}")
                s = blade_sign(idx)
                if s == 0:
                    continue
                if any(not 0 <= i < chart.dim for i in idx):
                    raise IndexError(f"coordinate index out of range in {idx}")
                key = tuple(sorted(idx))
                val = clean.get(key, ZERO) + as_expr(c) * s
                if val:
                    clean[key] = val
                else:
                    clean.pop(key, None)
        self.coeffs = dict(sorted(clean.items()))

    # -- constructors ----------------------------------------------------------
    @classmethod
    def zero(cls, chart: Chart, degree: int) -> "Form":
        return cls(chart, degree)

    @classmethod
    def scalar(cls, chart: Chart, f) -> "Form":
        return cls(chart, 0, {(): f})

    @classmethod
    def dx(cls, chart: Chart, i: int | str) -> "Form":
        if isinstance(i, str):
            i = chart.coordinates.index(i)
        return cls(chart, 1, {(i,): ONE})

    @classmethod
    def one_form(cls, chart: Chart, coefficients: Sequence) -> "Form":
        if len(coefficients) != chart.dim:
            raise ValueError(f"expected {chart.dim} coefficients, got {len(coefficients)}")
        return cls(chart, 1, {(i,): c for i, c in enumerate(coefficients)})

    # -- accessors ----------------------------------------------------------------
    def __getitem__(self, idx) -> Expr:
        idx = tuple(idx) if not isinstance(idx, int) else (idx,)
        s = blade_sign(idx)
        if s == 0:
            return ZERO
        return self.coeffs.get(tuple(sorted(idx)), ZERO) * s

    def one_form_coefficients(self) -> list[Expr]:
        if self.degree != 1:
            raise ValueError("not a 1-form")
        return [self.coeffs.get((i,), ZERO) for i in range(self.chart.dim)]

    @property
    def is_zero_literal(self) -> bool:
        return not self.coeffs

    def zero_status(self, **kwargs) -> ZeroStatus:
        return combine_status(is_zero(c, **kwargs) for c in self.coeffs.values())

    def free_symbols(self) -> frozenset:
        out: frozenset = frozenset()
        for c in self.coeffs.values():
            out |= c.free_symbols
        return out

    # -- algebra ------------------------------------------------------------------
    def _check(self, other: "Form") -> None:
        if not isinstance(other, Form):
            raise TypeError(f"expected a Form, got {type(other).__name__}")
        if other.chart != self.chart:
            raise ChartMismatchError("forms live on different charts")

    def __add__(self, other):
        if isinstance(other, int) and other == 0:
            return self
        self._check(other)
        if other.degree != self.degree:
            raise ValueError(f"cannot add forms of degree {self.degree} and {other.degree}")
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, ZERO) + v
        return Form(self.chart, self.degree, out)

    def __radd__(self, other):
        if isinstance(other, int) and other == 0:
            return self
        return NotImplemented

    def __neg__(self):
        return Form(self.chart, self.degree, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, f):
        if isinstance(f, Form):
            return wedge(self, f)
        f = as_expr(f)
        return Form(self.chart, self.degree, {k: v * f for k, v in self.coeffs.items()})

    def __rmul__(self, f):
        return self.__mul__(f)

    def __xor__(self, other):
        return wedge(self, other)

    def __eq__(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        return self.chart == other.chart and self.degree == other.degree and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.degree, tuple(self.coeffs.items())))

    def map(self, fn: Callable[[Expr], Expr]) -> "Form":
        return Form(self.chart, self.degree, {k: fn(v) for k, v in self.coeffs.items()})

    def subs(self, mapping: Mapping[str, object]) -> "Form":
        return self.map(lambda c: c.subs(mapping))

    def d(self) -> "Form":
        return exterior_derivative(self)

    def evaluate(self, point: Mapping[str, float], params: Mapping[str, float] | None = None) -> dict[tuple, float]:
        return {k: evaluate(v, point, params) for k, v in self.coeffs.items()}

    def max_abs(self, point: Mapping[str, float], params: Mapping[str, float] | None = None) -> float:
        vals = self.evaluate(point, params)
        return max((abs(v) for v in vals.values()), default=0.0)

    def __str__(self):
        if not self.coeffs:
            return "0"
        names = self.chart.coordinates
        parts = []
        for idx, c in self.coeffs.items():
            basis = "^".join("d" + names[i] for i in idx)
            if not idx:
                parts.append(f"({c})")
            elif c == ONE:
                parts.append(basis)
            else:
                parts.append(f"({c})*{basis}")
        return " + ".join(parts)

    def __repr__(self):
        return f"Form(degree={self.degree}, {self})"


def wedge(a: Form, b: Form) -> Form:
    """Exterior product; graded anticommutative and associative."""
    a._check(b)
    out: dict[tuple, Expr] = {}
    for ia, ca in a.coeffs.items():
        for ib, cb in b.coeffs.items():
            idx = ia + ib
            s = blade_sign(idx)
            if s == 0:
                continue
            key = tuple(sorted(idx))
            out[key] = out.get(key, ZERO) + ca * cb * s
    return Form(a.chart, a.degree + b.degree, out)


def exterior_derivative(a: Form) -> Form:
    """d of a form in the coordinate basis: d(f dx^I) = sum_j df/dx^j dx^j ^ dx^I."""
    names = a.chart.coordinates
    out: dict[tuple, Expr] = {}
    for idx, c in a.coeffs.items():
        for j, name in enumerate(names):
            if j in idx:
                continue
            dc = differentiate(c, name)
            if not dc:
                continue
            full = (j,) + idx
            s = blade_sign(full)
            key = tuple(sorted(full))
            out[key] = out.get(key, ZERO) + dc * s
    return Form(a.chart, a.degree + 1, out)


# ---------------------------------------------------------------------------
# multivectors


class MultiVector:
    """Homogeneous-grade element over frame blades ``e_I`` (0-based indices).

    Coefficients are scalars (:class:`Expr`) or :class:`Form` objects of a
    common degree, giving multivector-valued forms.
    """

    __slots__ = ("n", "grade", "coeffs")

    def __init__(self, n: int, grade: int, coeffs: Mapping[tuple, object] | None = None):
        if not 0 <= grade <= n:
            raise ValueError(f"grade {grade} out of range for dimension {n}")
        self.n = n
        self.grade = grade
        clean: dict = {}
        for idx, c in (coeffs or {}).items():
            idx = tuple(idx)
            if len(idx) != grade:
                raise ValueError(f"blade {idx} does not have grade {grade}")
            s = blade_sign(idx)
            if s == 0:
                continue
            if not isinstance(c, Form):
                c = as_expr(c)
            key = tuple(sorted(idx))
            val = clean[key] + c * s if key in clean else c * s
            if _is_literal_zero(val):
                clean.pop(key, None)
            else:
                clean[key] = val
        self.coeffs = dict(sorted(clean.items()))

    @classmethod
    def basis(cls, n: int, *indices: int) -> "MultiVector":
        return cls(n, len(indices), {tuple(indices): ONE})

    def __getitem__(self, idx):
        idx = (idx,) if isinstance(idx, int) else tuple(idx)
        s = blade_sign(idx)
        key = tuple(sorted(idx))
        if s == 0 or key not in self.coeffs:
            return None
        return self.coeffs[key] * s

    def __add__(self, other: "MultiVector") -> "MultiVector":
        if (other.n, other.grade) != (self.n, self.grade):
            raise ValueError("multivector grade or dimension mismatch")
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out[k] + v if k in out else v
        return MultiVector(self.n, self.grade, out)

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, f):
        return MultiVector(self.n, self.grade, {k: v * f for k, v in self.coeffs.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, MultiVector):
            return NotImplemented
        return (self.n, self.grade, self.coeffs) == (other.n, other.grade, other.coeffs)

    def __hash__(self):
        return hash((self.n, self.grade, tuple(self.coeffs)))

    def __repr__(self):
        parts = ", ".join(f"e{''.join(str(i + 1) for i in k)}: {v}" for k, v in self.coeffs.items())
        return f"MultiVector(grade={self.grade}, {{{parts}}})"


def _is_literal_zero(v) -> bool:
    if isinstance(v, Form):
        return v.is_zero_literal
    return not v


def _signature_list(sig, n: int) -> list[int]:
    eps = list(getattr(sig, "eps", sig)) if sig is not None else [1] * n
    if len(eps) != n:
        raise ValueError(f"signature length {len(eps)} does not match dimension {n}")
    return [int(e) for e in eps]


def grassmann_dual(v: MultiVector, sig=None, orientation: int = 1) -> MultiVector:
    """Complement map e_I -> orientation * sgn(I, J) * prod_{i in I} eps_i * e_J.

    ``J`` is the increasing complement of ``I`` so that ``e_I ^ e_J`` is the
    unit volume up to the permutation sign.  Applying it twice multiplies by
    ``(-1)^(m(n-m)) * prod(eps)``.
    """
    if orientation not in (1, -1):
        raise ValueError("orientation must be +1 or -1")
    n = v.n
    eps = _signature_list(sig, n)
    m = v.grade
    out = {}
    for idx, c in v.coeffs.items():
        comp = tuple(i for i in range(n) if i not in idx)
        s = orientation * blade_sign(idx + comp)
        for i in idx:
            s *= eps[i]
        out[comp] = c * s
    return MultiVector(n, n - m, out)


def bivector_to_polar(b: MultiVector, g_diag: Sequence = (1, 1, 1)) -> MultiVector:
    """Three-dimensional bivector -> polar vector with the metric prefactor.

    ``(b23, b31, b12) -> (g11 g22 g33)^(-1/2) (b23 e1 + b31 e2 + b12 e3)``.
    """
    if b.n != 3 or b.grade != 2:
        raise ValueError("bivector_to_polar needs a grade-2 multivector in dimension 3")
    g = [as_expr(x) for x in g_diag]
    if len(g) != 3:
        raise ValueError("need three diagonal metric entries")
    pref = (g[0] * g[1] * g[2]) ** Fraction(-1, 2)
    out = {}
    for i, (j, k) in enumerate(((1, 2), (2, 0), (0, 1))):
        c = b[(j, k)]
        if c is not None:
            out[(i,)] = c * pref
    return MultiVector(3, 1, out)


# ---------------------------------------------------------------------------
# determinants and frame components


def determinant(m: Sequence[Sequence[Expr]]) -> Expr:
    """Laplace expansion along the first row (fine for n <= 4)."""
    n = len(m)
    if n == 0:
        return ONE
    if n == 1:
        return as_expr(m[0][0])
    if n == 2:
        return as_expr(m[0][0]) * m[1][1] - as_expr(m[0][1]) * m[1][0]
    total = ZERO
    for j in range(n):
        a = as_expr(m[0][j])
        if not a:
            continue
        sub = [row[:j] + row[j + 1:] for row in m[1:]]
        term = a * determinant(sub)
        total = total + term if j % 2 == 0 else total - term
    return total


def _minor_table(F, k: int) -> dict:
    cache = F.__dict__.setdefault("_minor_cache", {})
    if k not in cache:
        E = F.inverse
        n = len(E)
        table = {}
        for rows in itertools.combinations(range(n), k):
            for cols in itertools.combinations(range(n), k):
                val = determinant([[E[r][c] for c in cols] for r in rows])
                if val:
                    table[(rows, cols)] = val
        cache[k] = table
    return cache[k]


def frame_components(a: Form, F) -> dict[tuple, Expr]:
    """Coefficients of ``a`` in the basis ``omega^J`` of the coframe of ``F``.

    ``F`` must expose ``inverse``: the matrix ``E`` with
    ``dx^mu = sum_i E[mu][i] omega^i``.
    """
    table = _minor_table(F, a.degree)
    out: dict[tuple, Expr] = {}
    for (rows, cols), minor in table.items():
        c = a.coeffs.get(rows)
        if c is None:
            continue
        out[cols] = out.get(cols, ZERO) + c * minor
    return {k: v for k, v in sorted(out.items()) if v}


def from_frame_components(comps: Mapping[tuple, object], F, degree: int | None = None) -> Form:
    """Rebuild ``sum_J A_J omega^J`` in the coordinate basis."""
    chart = F.chart
    if degree is None:
        degree = len(next(iter(comps))) if comps else 0
    total = Form.zero(chart, degree)
    for idx, c in comps.items():
        term = Form.scalar(chart, c)
        for i in idx:
            term = wedge(term, F.coframe[i])
        total = total + term
    return total
