"""Gravitational forms built from the structure equations.

Index conventions used here (all frame indices, signature ``eps``):

* ``Omega^k_l`` is the curvature 2-form, ``Omega_kl = eps_k Omega^k_l`` its
  lowered version and ``Omega^{kl} = eps_l Omega^k_l`` the raised one;
  torsion ``Omega^l`` is used with its index up, ``Omega_l = eps_l Omega^l``.
* Ricci: ``R_ij = sum_k A^k_ikj``, scalar curvature ``R = sum_i eps_i R_ii``.
* Einstein tensor: ``G_ij = alpha (R_ij - R/2 eta_ij) + beta eta_ij``.
* Einstein form (vector part), for ``i`` and ``(j, k, l)`` the cyclic
  continuation of ``i`` in ``(0, 1, 2, 3)``:
  ``Pi^i = eps_i sig(ijkl) (omega^j ^ Omega^{kl} + omega^k ^ Omega^{lj} + omega^l ^ Omega^{jk})``.
  The factor ``eps_i`` makes ``Pi^i`` contravariant.  The cyclic sign is
  ``+ - + -`` for ``i = 0, 1, 2, 3`` since a 4-cycle is odd.
* Bivector part: ``-sig(ijkl) [e_i e_j] (omega^k ^ Omega^l - omega^l ^ Omega^k)``
  over the four cyclic permutations, i.e. blades ``e01, e12, e23, e30``.
* Hilbert form: ``sum over all permutations sgn(ijkl) omega_i ^ omega_j ^ Omega_kl``
  with ``omega_i = eps_i omega^i``; its coefficient is
  ``LAGRANGIAN_CONSTANT * prod(eps) * R * |det theta|``.

The relation of ``Pi^i`` to the tensor ``G`` (normalization and sign) is
measured against an independent oracle in the test-suite and recorded in
:data:`EINSTEIN_FORM_SIGN`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .cartan import CartanConnection, FrameField, Verdict, zero_verdict
from .exterior import Form, MultiVector, blade_sign, combine_status, frame_components, wedge
from .expr import ONE, ZERO, Expr, ZeroStatus, as_expr

__all__ = [
    "EinsteinData",
    "GrassmannValuedForm",
    "DimensionError",
    "ricci_scalar",
    "einstein_tensor",
    "einstein_form",
    "einstein_form_compact",
    "generalized_einstein_form",
    "three_dim_einstein",
    "axial_from_rotation_matrix",
    "vector_couple_invariant",
    "vector_couple_equilibrium",
    "covariant_exterior_derivative",
    "cartan_constraint",
    "hilbert_lagrangian",
    "lagrangian_coefficient",
    "volume_form",
    "hodge_einstein_form",
    "EINSTEIN_FORM_SIGN",
    "LAGRANGIAN_CONSTANT",
    "CYCLIC_4",
]

#: The four cyclic permutations of (0, 1, 2, 3) with their signs.
CYCLIC_4 = tuple(((i, (i + 1) % 4, (i + 2) % 4, (i + 3) % 4), blade_sign((i, (i + 1) % 4, (i + 2) % 4, (i + 3) % 4))) for i in range(4))

#: Pi^i = EINSTEIN_FORM_SIGN * sum_p G^{ip} eta_p with eta_p = iota(e_p) vol;
#: measured against the coordinate oracle on the diag4 geometry.
EINSTEIN_FORM_SIGN = -1

#: sum sgn(ijkl) omega_i omega_j Omega_kl = LAGRANGIAN_CONSTANT * prod(eps) * R * vol
LAGRANGIAN_CONSTANT = 2


class DimensionError(ValueError):
    pass


def _need(C: CartanConnection, n: int) -> None:
    if C.n != n:
        raise DimensionError(f"this operation needs dimension {n}, got {C.n}")


@dataclass
class EinsteinData:
    ricci: list[list[Expr]]
    R: Expr
    alpha: Expr = ONE
    beta: Expr = ZERO
    kappa: Expr = ONE
    G: list[list[Expr]] | None = None
    cartan_sign: bool = False

    def symmetry_residuals(self) -> list[Expr]:
        M = self.G if self.G is not None else self.ricci
        n = len(M)
        return [M[i][j] - M[j][i] for i in range(n) for j in range(i + 1, n)]


@dataclass
class GrassmannValuedForm:
    """Vector part ``Pi^i`` and bivector part ``Pi^{ij}`` (i < j) of forms."""

    n: int
    degree: int
    vector: dict[int, Form] = field(default_factory=dict)
    bivector: dict[tuple[int, int], Form] = field(default_factory=dict)

    def __post_init__(self):
        self.vector = {i: f for i, f in sorted(self.vector.items()) if not f.is_zero_literal}
        clean = {}
        for (i, j), f in self.bivector.items():
            if i == j:
                continue
            if i > j:
                i, j, f = j, i, -f
            clean[(i, j)] = clean[(i, j)] + f if (i, j) in clean else f
        self.bivector = {k: f for k, f in sorted(clean.items()) if not f.is_zero_literal}

    def vec(self, i: int, chart) -> Form:
        return self.vector.get(i, Form.zero(chart, self.degree))

    def biv(self, i: int, j: int, chart) -> Form:
        if i == j:
            return Form.zero(chart, self.degree)
        if i < j:
            return self.bivector.get((i, j), Form.zero(chart, self.degree))
        return -self.bivector.get((j, i), Form.zero(chart, self.degree))

    def forms(self) -> list[Form]:
        return list(self.vector.values()) + list(self.bivector.values())

    def __add__(self, other: "GrassmannValuedForm") -> "GrassmannValuedForm":
        vec = dict(self.vector)
        for k, f in other.vector.items():
            vec[k] = vec[k] + f if k in vec else f
        biv = dict(self.bivector)
        for k, f in other.bivector.items():
            biv[k] = biv[k] + f if k in biv else f
        return GrassmannValuedForm(self.n, self.degree, vec, biv)

    def __mul__(self, c) -> "GrassmannValuedForm":
        return GrassmannValuedForm(
            self.n, self.degree,
            {k: f * c for k, f in self.vector.items()},
            {k: f * c for k, f in self.bivector.items()},
        )

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, GrassmannValuedForm):
            return NotImplemented
        return (self.n, self.degree, self.vector, self.bivector) == (other.n, other.degree, other.vector, other.bivector)

    @property
    def is_zero_literal(self) -> bool:
        return not self.vector and not self.bivector

    def vector_part(self) -> "GrassmannValuedForm":
        return GrassmannValuedForm(self.n, self.degree, dict(self.vector), {})

    def bivector_part(self) -> "GrassmannValuedForm":
        return GrassmannValuedForm(self.n, self.degree, {}, dict(self.bivector))

    def as_multivectors(self) -> tuple[MultiVector, MultiVector]:
        return (
            MultiVector(self.n, 1, {(i,): f for i, f in self.vector.items()}),
            MultiVector(self.n, 2, dict(self.bivector)),
        )

    def subs(self, mapping: Mapping[str, object]) -> "GrassmannValuedForm":
        return GrassmannValuedForm(
            self.n, self.degree,
            {k: f.subs(mapping) for k, f in self.vector.items()},
            {k: f.subs(mapping) for k, f in self.bivector.items()},
        )


# ---------------------------------------------------------------------------
# tensors


def ricci_scalar(C: CartanConnection) -> EinsteinData:
    n = C.n
    data = C.data
    eps = C.frame.signature
    ric = [[sum((data.A_curvature(k, i, k, j) for k in range(n)), ZERO) for j in range(n)] for i in range(n)]
    R = sum((ric[i][i] * eps[i] for i in range(n)), ZERO)
    return EinsteinData(ric, R)


def einstein_tensor(C: CartanConnection, alpha=1, beta=0, kappa=1, cartan_sign: bool = False) -> EinsteinData:
    """G_ij = alpha (R_ij - R/2 eta_ij) + beta eta_ij in frame components.

    ``cartan_sign`` only records the historical sign convention (G = -T) as a
    report flag; the tensor itself is always assembled with G = +kappa T.
    """
    base = ricci_scalar(C)
    n = C.n
    eps = C.frame.signature
    alpha, beta, kappa = as_expr(alpha), as_expr(beta), as_expr(kappa)
    G = []
    for i in range(n):
        row = []
        for j in range(n):
            eta = eps[i] if i == j else 0
            row.append(alpha * (base.ricci[i][j] - base.R * Fraction(eta, 2)) + beta * eta)
        G.append(row)
    return EinsteinData(base.ricci, base.R, alpha, beta, kappa, G, cartan_sign)


# ---------------------------------------------------------------------------
# Einstein forms


def _raised_curvature(C: CartanConnection, k: int, l: int) -> Form:
    """Omega^{kl} = eps_l Omega^k_l."""
    return C.data.curvature[k][l] * C.frame.signature[l]


def _lowered_curvature(C: CartanConnection, k: int, l: int) -> Form:
    """Omega_kl = eps_k Omega^k_l."""
    return C.data.curvature[k][l] * C.frame.signature[k]


def einstein_form(C: CartanConnection) -> GrassmannValuedForm:
    """Vector part Pi^i from the three-term cyclic expansion."""
    _need(C, 4)
    w = C.frame.coframe
    eps = C.frame.signature
    vec = {}
    for (i, j, k, l), sig in CYCLIC_4:
        s = (
            wedge(w[j], _raised_curvature(C, k, l))
            + wedge(w[k], _raised_curvature(C, l, j))
            + wedge(w[l], _raised_curvature(C, j, k))
        )
        vec[i] = s * (sig * eps[i])
    return GrassmannValuedForm(4, 3, vec, {})


def einstein_form_compact(C: CartanConnection) -> list[Form]:
    """Pi^i from the single-term form with eps_k eps_l weights.

    Independent code path: sums ``eps_k eps_l sgn(i,j,k,l) omega^j ^ Omega_kl``
    over the rotations of the three indices following ``i``.
    """
    _need(C, 4)
    w = C.frame.coframe
    eps = C.frame.signature
    out = []
    for i in range(4):
        rest = [(i + 1) % 4, (i + 2) % 4, (i + 3) % 4]
        total = Form.zero(C.chart, 3)
        for r in range(3):
            j, k, l = rest[r], rest[(r + 1) % 3], rest[(r + 2) % 3]
            sgn = blade_sign((i, j, k, l))
            total = total + wedge(w[j], _lowered_curvature(C, k, l)) * (eps[k] * eps[l] * sgn)
        out.append(total * eps[i])
    return out


def generalized_einstein_form(C: CartanConnection) -> GrassmannValuedForm:
    """Vector part plus the torsion bivector part."""
    base = einstein_form(C)
    w = C.frame.coframe
    T = C.data.torsion
    biv = {}
    for (i, j, k, l), sig in CYCLIC_4:
        term = (wedge(w[k], T[l]) - wedge(w[l], T[k])) * (-sig)
        key = (i, j)
        biv[key] = biv[key] + term if key in biv else term
    return GrassmannValuedForm(4, 3, dict(base.vector), biv)


def volume_form(F: FrameField) -> Form:
    v = F.coframe[0]
    for w in F.coframe[1:]:
        v = wedge(v, w)
    return v


def hodge_einstein_form(F: FrameField, G: list[list[Expr]]) -> list[Form]:
    """sum_p G^{ip} eta_p with eta_p = iota(e_p) vol and G^{ip} = eps_i eps_p G_ip.

    This is the Hodge dual of the vector-valued 1-form sum_p G^i_p omega^p.
    """
    n = F.n
    eps = F.signature
    out = []
    for i in range(n):
        total = Form.zero(F.chart, n - 1)
        for p in range(n):
            coef = G[i][p] * (eps[i] * eps[p])
            if not coef:
                continue
            rest = [q for q in range(n) if q != p]
            eta = F.coframe[rest[0]]
            for q in rest[1:]:
                eta = wedge(eta, F.coframe[q])
            total = total + eta * (coef * (-1) ** p)
        out.append(total)
    return out


def covariant_exterior_derivative(G: GrassmannValuedForm, C: CartanConnection) -> GrassmannValuedForm:
    """Gradewise D: vector D Pi^i = d Pi^i + omega^i_j ^ Pi^j; bivector picks up both slots."""
    n = G.n
    if n != C.n:
        raise DimensionError("form and connection dimensions differ")
    ch = C.chart
    om = C.omega
    vec = {}
    for i in range(n):
        acc = G.vec(i, ch).d()
        for j in range(n):
            acc = acc + wedge(om[i][j], G.vec(j, ch))
        vec[i] = acc
    biv = {}
    if G.bivector:
        for i, j in itertools.combinations(range(n), 2):
            acc = G.biv(i, j, ch).d()
            for k in range(n):
                acc = acc + wedge(om[i][k], G.biv(k, j, ch)) + wedge(om[j][k], G.biv(i, k, ch))
            biv[(i, j)] = acc
    return GrassmannValuedForm(n, G.degree + 1, vec, biv)


def cartan_constraint(C: CartanConnection) -> list[Expr]:
    """Frame coefficient on the volume of the four constraint 4-forms."""
    _need(C, 4)
    eps = C.frame.signature
    T = C.data.torsion
    vol = volume_form(C.frame)
    out = []
    for (i, j, k, l), sig in CYCLIC_4:
        f = (
            wedge(T[j] * eps[j], _lowered_curvature(C, k, l))
            + wedge(T[k] * eps[k], _lowered_curvature(C, l, j))
            + wedge(T[l] * eps[l], _lowered_curvature(C, j, k))
        ) * sig
        comps = frame_components(f, C.frame)
        out.append(comps.get((0, 1, 2, 3), ZERO))
    return out


def hilbert_lagrangian(C: CartanConnection) -> Form:
    """sum over permutations of sgn(ijkl) omega_i ^ omega_j ^ Omega_kl."""
    _need(C, 4)
    w = C.frame.coframe
    eps = C.frame.signature
    total = Form.zero(C.chart, 4)
    for perm in itertools.permutations(range(4)):
        i, j, k, l = perm
        s = blade_sign(perm) * eps[i] * eps[j]
        total = total + wedge(wedge(w[i], w[j]), _lowered_curvature(C, k, l)) * s
    return total


def lagrangian_coefficient(C: CartanConnection) -> Expr:
    """Coordinate coefficient of the Hilbert 4-form on dx^0 ^ ... ^ dx^3."""
    return hilbert_lagrangian(C).coeffs.get((0, 1, 2, 3), ZERO)


# ---------------------------------------------------------------------------
# three dimensions


def axial_from_rotation_matrix(M) -> tuple:
    """T^i = sum_{k<l} sgn(i,k,l) M[k][l] for an antisymmetric 3x3 matrix."""
    out = []
    for i in range(3):
        k, l = [q for q in range(3) if q != i]
        out.append(M[k][l] * blade_sign((i, k, l)))
    return tuple(out)


def three_dim_einstein(C: CartanConnection) -> list[Form]:
    """T~^i = sum_{k<l} sgn(i,k,l) Omega_kl (lowered curvature 2-forms)."""
    _need(C, 3)
    return list(axial_from_rotation_matrix([[_lowered_curvature(C, k, l) for l in range(3)] for k in range(3)]))


def vector_couple_invariant(C: CartanConnection) -> GrassmannValuedForm:
    """[e1] Omega_23 + [e2] Omega_31 + [e3] Omega_12 + [e2 e3] Omega_1 + [e3 e1] Omega_2 + [e1 e2] Omega_3."""
    _need(C, 3)
    T = C.data.torsion
    vec = {
        0: _lowered_curvature(C, 1, 2),
        1: _lowered_curvature(C, 2, 0),
        2: _lowered_curvature(C, 0, 1),
    }
    biv = {(1, 2): T[0], (2, 0): T[1], (0, 1): T[2]}
    return GrassmannValuedForm(3, 2, vec, biv)


def vector_couple_equilibrium(C: CartanConnection) -> GrassmannValuedForm:
    """Equilibrium 3-forms of the vector-couple system.

    Vector part ``D F^i``; bivector part ``D B^{ij} - (omega^i ^ F^j - omega^j ^ F^i)``,
    the moment balance coupling couples to the force system.
    """
    G = vector_couple_invariant(C)
    D = covariant_exterior_derivative(G, C)
    ch = C.chart
    w = C.frame.coframe
    biv = {}
    for i, j in itertools.combinations(range(3), 2):
        biv[(i, j)] = D.biv(i, j, ch) - (wedge(w[i], G.vec(j, ch)) - wedge(w[j], G.vec(i, ch)))
    return GrassmannValuedForm(3, 3, dict(D.vector), biv)
