"""Symbolic scalar expressions over chart coordinates and named parameters.

Every :class:`Expr` is held in a canonical sum-of-monomials form: a sorted
tuple of ``(monomial, coefficient)`` pairs where coefficients are exact
:class:`fractions.Fraction` values and a monomial is a sorted tuple of
``(atom, exponent)`` pairs with rational exponents.  Atoms are symbols, the
constant ``pi``, irrational rational-radicals such as ``2^(1/2)``, the
functions ``sin``, ``cos``, ``exp``, ``log`` applied to an expression, and
grouped sums raised to negative or fractional powers.

Construction always applies the rewrite list below, in order, so two
expressions that differ only by these rules compare structurally equal:

1. constant folding of rational coefficients and integer powers of radicals;
2. like-term collection, dropping zero terms (``x + 0 -> x``, ``0*x -> 0``);
3. unit identities (``x^0 -> 1``, ``1*x -> x``);
4. function folding: ``sin(0) -> 0``, ``cos(0) -> 1``, ``exp(0) -> 1``,
   ``log(1) -> 0``, ``log(exp(u)) -> u``, ``exp(k*log(u)) -> u^k``,
   ``tan(u) -> sin(u)*cos(u)^-1``, ``sqrt(u) -> u^(1/2)``;
5. parity: ``sin(-u) -> -sin(u)``, ``cos(-u) -> cos(u)`` (sign taken from the
   first term of ``u``);
6. exponential merging: ``exp(u)^a * exp(v)^b -> exp(a*u + b*v)``;
7. Pythagorean reduction for each argument ``u``:
   ``cos(u)^k -> cos(u)^(k-2) * (1 - sin(u)^2)`` for integer ``k >= 2``, and
   ``sin(u)^a * cos(u)^b -> sin(u)^(a-2)*cos(u)^b - sin(u)^(a-2)*cos(u)^(b+2)``
   for integer ``a >= 2, b < 0``;
8. positive integer powers of sums are expanded; other powers of sums become
   grouped atoms whose base has leading coefficient 1.

Each rule strictly lowers a well-founded measure, so the rewriting terminates.
The set is not a complete canonical form (rational-function cancellation
between distinct grouped bases is not attempted); :func:`is_zero` reports
``UNKNOWN`` when it cannot decide.  Fractional powers assume positive bases.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Expr",
    "Chart",
    "ZeroStatus",
    "EvaluationError",
    "ParseError",
    "UnknownSymbolError",
    "UnknownCoordinateError",
    "as_expr",
    "symbol",
    "sin",
    "cos",
    "tan",
    "exp",
    "log",
    "sqrt",
    "PI",
    "parse",
    "differentiate",
    "evaluate",
    "evaluate_array",
    "simplify",
    "is_zero",
    "SAMPLE_SEED",
]

#: Seed for the deterministic sample points used by :func:`is_zero`.
SAMPLE_SEED = 1922
NONZERO_THRESHOLD = 1e-8


class EvaluationError(ArithmeticError):
    """Numeric evaluation failed (unbound symbol or domain error)."""


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.message = message
        self.position = position


class UnknownSymbolError(ParseError):
    def __init__(self, name: str, position: int):
        super().__init__(f"undeclared symbol {name!r}", position)
        self.name = name


class UnknownCoordinateError(KeyError):
    pass


# ---------------------------------------------------------------------------
# atoms


class _Atom:
    __slots__ = ("key", "_hash")
    rank = 9

    def _set_key(self, key: str) -> None:
        self.key = key
        self._hash = hash(key)

    def __eq__(self, other):
        return self is other or (type(other) is type(self) and other.key == self.key)

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return self.key < other.key

    def __repr__(self):
        return f"{type(self).__name__}({self.key})"


class Symbol(_Atom):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._set_key("s:" + name)

    def text(self) -> str:
        return self.name


class Constant(_Atom):
    __slots__ = ("name", "value")

    def __init__(self, name: str, value: float):
        self.name = name
        self.value = value
        self._set_key("c:" + name)

    def text(self) -> str:
        return self.name


class Radical(_Atom):
    """A positive rational constant carried with a non-integer exponent."""

    __slots__ = ("base",)

    def __init__(self, base: Fraction):
        self.base = base
        self._set_key("r:" + str(base))

    def text(self) -> str:
        b = self.base
        return str(b) if b.denominator == 1 else f"({b})"


class Func(_Atom):
    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: "Expr"):
        self.name = name
        self.arg = arg
        self._set_key("f:" + name + "(" + arg.key + ")")

    def text(self) -> str:
        return f"{self.name}({self.arg})"


class Group(_Atom):
    """A sum used as the base of a negative or fractional power."""

    __slots__ = ("expr",)

    def __init__(self, expr: "Expr"):
        self.expr = expr
        self._set_key("g:(" + expr.key + ")")

    def text(self) -> str:
        return f"({self.expr})"


_PI_ATOM = Constant("pi", math.pi)

# ---------------------------------------------------------------------------
# polynomial dictionaries: {monomial: Fraction}; monomial = tuple((atom, exp))

_ONE_MONO: tuple = ()


def _mono_key(mono: tuple) -> str:
    return "*".join(f"{a.key}^{e}" for a, e in mono)


def _padd(acc: dict, poly: Mapping, scale: Fraction = Fraction(1)) -> dict:
    for m, c in poly.items():
        v = acc.get(m, 0) + c * scale
        if v:
            acc[m] = v
        else:
            acc.pop(m, None)
    return acc


def _as_mono(factors: Mapping) -> tuple:
    return tuple(sorted(((a, e) for a, e in factors.items() if e != 0), key=lambda p: p[0].key))


def _mono_poly(factors: dict, coeff: Fraction) -> dict:
    """Normalize coeff * prod(atom^exp) into a polynomial dictionary."""
    if not coeff:
        return {}
    f = {a: e for a, e in factors.items() if e != 0}

    for a in [a for a in f if isinstance(a, Radical)]:
        e = f[a]
        whole = math.floor(e)
        if whole:
            coeff *= a.base**whole
            e -= whole
        if e:
            f[a] = e
        else:
            del f[a]

    exps = [a for a in f if isinstance(a, Func) and a.name == "exp"]
    if len(exps) > 1 or (exps and f[exps[0]] != 1):
        total = ZERO
        for a in exps:
            total = total + a.arg * Expr._const(f.pop(a))
        return _pmul(_mono_poly(f, coeff), exp(total)._poly())

    for a, e in f.items():
        if isinstance(a, Group) and e.denominator == 1 and e > 0:
            rest = dict(f)
            del rest[a]
            return _pmul(_mono_poly(rest, coeff), _ppow(a.expr._poly(), int(e)))

    for a, e in f.items():
        if not isinstance(a, Func) or e.denominator != 1:
            continue
        if a.name == "cos" and e >= 2:
            s = Func("sin", a.arg)
            rest = dict(f)
            rest[a] = e - 2
            other = dict(rest)
            other[s] = other.get(s, 0) + 2
            return _padd(_mono_poly(rest, coeff), _mono_poly(other, -coeff))
        if a.name == "sin" and e >= 2:
            c = Func("cos", a.arg)
            ce = f.get(c, 0)
            if ce.denominator == 1 and ce < 0:
                rest = dict(f)
                rest[a] = e - 2
                other = dict(rest)
                other[c] = ce + 2
                return _padd(_mono_poly(rest, coeff), _mono_poly(other, -coeff))

    return {_as_mono(f): coeff}


@lru_cache(maxsize=1 << 17)
def _mono_mul(m1: tuple, m2: tuple) -> tuple:
    if not m1:
        return ((m2, Fraction(1)),)
    if not m2:
        return ((m1, Fraction(1)),)
    f = dict(m1)
    for a, e in m2:
        f[a] = f.get(a, 0) + e
    return tuple(_mono_poly(f, Fraction(1)).items())


def _pmul(p: Mapping, q: Mapping) -> dict:
    acc: dict = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            c = c1 * c2
            for m, k in _mono_mul(m1, m2):
                v = acc.get(m, 0) + c * k
                if v:
                    acc[m] = v
                else:
                    acc.pop(m, None)
    return acc


def _ppow(p: Mapping, k: int) -> dict:
    result: dict = {_ONE_MONO: Fraction(1)}
    base = dict(p)
    while k:
        if k & 1:
            result = _pmul(result, base)
        k >>= 1
        if k:
            base = _pmul(base, base)
    return result


def _prime_factors(q: Fraction) -> dict[int, int]:
    """Signed prime multiplicities of a positive rational."""
    out: dict[int, int] = {}
    for part, sign in ((q.numerator, 1), (q.denominator, -1)):
        n, d = part, 2
        while d * d <= n:
            while n % d == 0:
                out[d] = out.get(d, 0) + sign
                n //= d
            d += 1
        if n > 1:
            out[n] = out.get(n, 0) + sign
    return out


# ---------------------------------------------------------------------------
# expressions


class Expr:
    """Immutable canonical scalar expression.  See the module docstring."""

    __slots__ = ("terms", "_hash", "_key", "_free")

    def __init__(self, poly: Mapping | None = None):
        items = [(m, Fraction(c)) for m, c in (poly or {}).items() if c]
        items.sort(key=lambda mc: (len(mc[0]) > 0, _mono_key(mc[0])))
        self.terms: tuple = tuple(items)
        self._hash = None
        self._key = None
        self._free = None

    # -- construction helpers -------------------------------------------
    @staticmethod
    def _const(c) -> "Expr":
        c = Fraction(c)
        return Expr({_ONE_MONO: c}) if c else ZERO

    @staticmethod
    def _atom(atom: _Atom, e: Fraction = Fraction(1)) -> "Expr":
        return Expr(_mono_poly({atom: Fraction(e)}, Fraction(1)))

    def _poly(self) -> dict:
        return dict(self.terms)

    # -- identity ---------------------------------------------------------
    @property
    def key(self) -> str:
        if self._key is None:
            self._key = "+".join(f"{c}|{_mono_key(m)}" for m, c in self.terms)
        return self._key

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.key)
        return self._hash

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Expr._const(other)
        if not isinstance(other, Expr):
            return NotImplemented
        return self.terms == other.terms

    def __bool__(self):
        return bool(self.terms)

    @property
    def is_zero_literal(self) -> bool:
        return not self.terms

    @property
    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and not self.terms[0][0])

    def constant_value(self) -> Fraction:
        if not self.is_constant:
            raise ValueError(f"{self} is not a rational constant")
        return self.terms[0][1] if self.terms else Fraction(0)

    @property
    def kind(self) -> str:
        """Top-level node kind of the canonical tree."""
        if not self.terms:
            return "number"
        if len(self.terms) > 1:
            return "sum"
        mono, c = self.terms[0]
        if not mono:
            return "number"
        if c != 1 or len(mono) > 1:
            return "product"
        atom, e = mono[0]
        if e != 1:
            return "power"
        return "function" if isinstance(atom, Func) else "symbol"

    @property
    def free_symbols(self) -> frozenset:
        if self._free is None:
            names = set()
            for mono, _ in self.terms:
                for a, _e in mono:
                    if isinstance(a, Symbol):
                        names.add(a.name)
                    elif isinstance(a, Func):
                        names |= a.arg.free_symbols
                    elif isinstance(a, Group):
                        names |= a.expr.free_symbols
            self._free = frozenset(names)
        return self._free

    def leading_coefficient(self) -> Fraction:
        return self.terms[0][1] if self.terms else Fraction(0)

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other):
        other = as_expr(other)
        return Expr(_padd(self._poly(), dict(other.terms)))

    __radd__ = __add__

    def __neg__(self):
        return Expr({m: -c for m, c in self.terms})

    def __sub__(self, other):
        other = as_expr(other)
        return Expr(_padd(self._poly(), dict(other.terms), Fraction(-1)))

    def __rsub__(self, other):
        return as_expr(other) - self

    def __mul__(self, other):
        other = as_expr(other)
        if not self.terms or not other.terms:
            return ZERO
        if other.is_constant:
            c = other.terms[0][1]
            return Expr({m: k * c for m, k in self.terms})
        if self.is_constant:
            c = self.terms[0][1]
            return Expr({m: k * c for m, k in other.terms})
        return Expr(_pmul(dict(self.terms), dict(other.terms)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_expr(other)
        if not other.terms:
            raise ZeroDivisionError("division by the zero expression")
        if len(other.terms) > 1 and len(self.terms) == len(other.terms):
            ratio = self.terms[0][1] / other.terms[0][1]
            if self == other * ratio:
                return Expr._const(ratio)
        return self * other ** -1

    def __rtruediv__(self, other):
        return as_expr(other) / self

    def __pow__(self, q):
        if isinstance(q, Expr):
            q = q.constant_value()
        q = Fraction(q)
        if q == 0:
            return ONE
        if not self.terms:
            if q > 0:
                return ZERO
            raise ZeroDivisionError("zero raised to a negative power")
        if len(self.terms) == 1:
            mono, c = self.terms[0]
            if q.denominator == 1:
                f = {a: e * q for a, e in mono}
                return Expr(_mono_poly(f, c ** int(q)))
            if c > 0:
                f = {a: e * q for a, e in mono}
                coeff = Fraction(1)
                for prime, mult in _prime_factors(c).items():
                    ra = Radical(Fraction(prime))
                    f[ra] = f.get(ra, 0) + mult * q
                return Expr(_mono_poly(f, coeff))
            return Expr._atom(Group(self), q)
        if q.denominator == 1 and q > 0:
            return Expr(_ppow(dict(self.terms), int(q)))
        lead = self.terms[0][1]
        if lead > 0 or q.denominator == 1:
            base = Expr({m: k / lead for m, k in self.terms})
            return Expr._const(lead) ** q * Expr._atom(Group(base), q)
        return Expr._atom(Group(self), q)

    def __rpow__(self, other):
        return as_expr(other) ** self

    # -- substitution --------------------------------------------------------
    def subs(self, mapping: Mapping[str, object]) -> "Expr":
        """Replace symbols by expressions (or numbers)."""
        if not mapping or not (self.free_symbols & set(mapping)):
            return self
        repl = {k: as_expr(v) for k, v in mapping.items()}
        acc = ZERO
        for mono, c in self.terms:
            term = Expr._const(c)
            for a, e in mono:
                term = term * (_subs_atom(a, repl) ** e)
            acc = acc + term
        return acc

    # -- printing --------------------------------------------------------------
    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for i, (mono, c) in enumerate(self.terms):
            neg = c < 0
            a = -c if neg else c
            factors = [_factor_text(at, e) for at, e in mono]
            if not factors:
                body = str(a)
            elif a == 1:
                body = "*".join(factors)
            else:
                body = str(a) + "*" + "*".join(factors)
            if i == 0:
                parts.append(("-" if neg else "") + body)
            else:
                parts.append((" - " if neg else " + ") + body)
        return "".join(parts)

    def __repr__(self):
        return f"Expr({str(self)!r})"

    def __format__(self, spec):
        return format(str(self), spec)


def _factor_text(atom: _Atom, e: Fraction) -> str:
    base = atom.text()
    if e == 1:
        return base
    if e.denominator == 1 and e > 0:
        return f"{base}^{e}"
    return f"{base}^({e})"


def _subs_atom(a: _Atom, repl: Mapping[str, Expr]) -> Expr:
    if isinstance(a, Symbol):
        return repl.get(a.name, Expr._atom(a))
    if isinstance(a, Func):
        return _FUNCTIONS[a.name](a.arg.subs(repl))
    if isinstance(a, Group):
        return a.expr.subs(repl)
    return Expr._atom(a)


ZERO = Expr()
ONE = Expr({_ONE_MONO: Fraction(1)})
PI = Expr._atom(_PI_ATOM)


def as_expr(x) -> Expr:
    """Coerce numbers to expressions; floats go through their shortest repr."""
    if isinstance(x, Expr):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not expressions")
    if isinstance(x, (int, Fraction)):
        return Expr._const(x)
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise ValueError(f"non-finite constant {x}")
        return Expr._const(Fraction(repr(float(x))))
    if isinstance(x, (np.integer,)):
        return Expr._const(int(x))
    if isinstance(x, str):
        return parse(x)
    raise TypeError(f"cannot convert {type(x).__name__} to Expr")


def symbol(name: str) -> Expr:
    return Expr._atom(Symbol(name))


# ---------------------------------------------------------------------------
# elementary functions


def sin(u) -> Expr:
    u = as_expr(u)
    if not u.terms:
        return ZERO
    if u.leading_coefficient() < 0:
        return -Expr._atom(Func("sin", -u))
    return Expr._atom(Func("sin", u))


def cos(u) -> Expr:
    u = as_expr(u)
    if not u.terms:
        return ONE
    if u.leading_coefficient() < 0:
        u = -u
    return Expr._atom(Func("cos", u))


def tan(u) -> Expr:
    return sin(u) * cos(u) ** -1


def exp(u) -> Expr:
    u = as_expr(u)
    if not u.terms:
        return ONE
    if len(u.terms) == 1:
        mono, c = u.terms[0]
        if len(mono) == 1 and mono[0][1] == 1 and isinstance(mono[0][0], Func):
            if mono[0][0].name == "log" and c.denominator == 1:
                return mono[0][0].arg ** c
    return Expr({((Func("exp", u), Fraction(1)),): Fraction(1)})


def log(u) -> Expr:
    u = as_expr(u)
    if u == ONE:
        return ZERO
    if len(u.terms) == 1:
        mono, c = u.terms[0]
        if c == 1 and len(mono) == 1 and mono[0][1] == 1:
            a = mono[0][0]
            if isinstance(a, Func) and a.name == "exp":
                return a.arg
    return Expr._atom(Func("log", u))


def sqrt(u) -> Expr:
    return as_expr(u) ** Fraction(1, 2)


_FUNCTIONS = {"sin": sin, "cos": cos, "tan": tan, "exp": exp, "log": log, "sqrt": sqrt}
_CONSTANTS = {"pi": PI}

# ---------------------------------------------------------------------------
# parsing

_TOKEN_PUNCT = "+-*/^(),"


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            lit = text[i:j]
            if lit.count(".") > 1:
                raise ParseError(f"malformed number {lit!r}", i)
            toks.append(("num", lit, i))
            i = j
        elif ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(("id", text[i:j], i))
            i = j
        elif ch == "*" and i + 1 < n and text[i + 1] == "*":
            toks.append(("op", "^", i))
            i += 2
        elif ch in _TOKEN_PUNCT:
            toks.append(("op", ch, i))
            i += 1
        else:
            raise ParseError(f"unexpected character {ch!r}", i)
    toks.append(("end", "", n))
    return toks


class _Parser:
    def __init__(self, text: str, symbols: frozenset | None):
        self.toks = _tokenize(text)
        self.i = 0
        self.symbols = symbols

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, value: str):
        t = self.take()
        if t[1] != value or t[0] == "end":
            raise ParseError(f"expected {value!r}", t[2])
        return t

    def parse(self) -> Expr:
        e = self.sum()
        t = self.peek()
        if t[0] != "end":
            raise ParseError(f"unexpected token {t[1]!r}", t[2])
        return e

    def sum(self) -> Expr:
        e = self.product()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.product()
            e = e + rhs if op == "+" else e - rhs
        return e

    def product(self) -> Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            tok = self.take()
            rhs = self.unary()
            if tok[1] == "*":
                e = e * rhs
            else:
                if rhs.is_zero_literal:
                    raise ParseError("division by literal zero", tok[2])
                e = e / rhs
        return e

    def unary(self) -> Expr:
        t = self.peek()
        if t[0] == "op" and t[1] in ("+", "-"):
            self.take()
            inner = self.unary()
            return -inner if t[1] == "-" else inner
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        t = self.peek()
        if t[0] == "op" and t[1] == "^":
            self.take()
            pos = self.peek()[2]
            ex = self.unary()
            if not ex.is_constant:
                raise ParseError("exponent must be a rational constant", pos)
            q = ex.constant_value()
            if base.is_zero_literal and q < 0:
                raise ParseError("zero raised to a negative power", pos)
            return base**q
        return base

    def atom(self) -> Expr:
        t = self.take()
        kind, val, pos = t
        if kind == "num":
            return Expr._const(Fraction(val))
        if kind == "id":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                if val not in _FUNCTIONS:
                    raise ParseError(f"unknown function {val!r}", pos)
                self.take()
                arg = self.sum()
                self.expect(")")
                return _FUNCTIONS[val](arg)
            if val in _CONSTANTS:
                return _CONSTANTS[val]
            if val in _FUNCTIONS:
                raise ParseError(f"function {val!r} needs an argument", pos)
            if self.symbols is not None and val not in self.symbols:
                raise UnknownSymbolError(val, pos)
            return symbol(val)
        if kind == "op" and val == "(":
            e = self.sum()
            self.expect(")")
            return e
        if kind == "end":
            raise ParseError("unexpected end of input", pos)
        raise ParseError(f"unexpected token {val!r}", pos)


def parse(text: str, symbols: Iterable[str] | None = None) -> Expr:
    """Parse infix text into a canonical :class:`Expr`.

    ``symbols`` restricts the admissible identifiers (coordinates plus
    parameters); ``None`` accepts any identifier.
    """
    allowed = frozenset(symbols) if symbols is not None else None
    return _Parser(text, allowed).parse()


# ---------------------------------------------------------------------------
# calculus


def _atom_derivative(a: _Atom, name: str) -> Expr:
    if isinstance(a, Symbol):
        return ONE if a.name == name else ZERO
    if isinstance(a, (Constant, Radical)):
        return ZERO
    if isinstance(a, Group):
        return _diff(a.expr, name)
    du = _diff(a.arg, name)
    if not du:
        return ZERO
    if a.name == "sin":
        return cos(a.arg) * du
    if a.name == "cos":
        return -sin(a.arg) * du
    if a.name == "exp":
        return Expr._atom(a) * du
    if a.name == "log":
        return du * a.arg**-1
    raise AssertionError(a.name)


def _diff(e: Expr, name: str) -> Expr:
    if name not in e.free_symbols:
        return ZERO
    acc: dict = {}
    for mono, c in e.terms:
        for idx, (a, ex) in enumerate(mono):
            da = _atom_derivative(a, name)
            if not da:
                continue
            f = dict(mono)
            f[a] = ex - 1
            rest = Expr(_mono_poly(f, c * ex))
            _padd(acc, dict((rest * da).terms))
    return Expr(acc)


def differentiate(e: Expr, coord: str, chart: "Chart | None" = None) -> Expr:
    """Partial derivative of ``e`` with respect to the symbol ``coord``."""
    if chart is not None and coord not in chart.coordinates:
        raise UnknownCoordinateError(coord)
    return _diff(as_expr(e), coord)


def simplify(e: Expr) -> Expr:
    """Re-run the canonical rewrite list bottom-up.

    Construction already canonicalizes, so this mainly re-normalizes function
    arguments and grouped bases; it is idempotent.
    """
    e = as_expr(e)
    acc = ZERO
    for mono, c in e.terms:
        term = Expr._const(c)
        for a, ex in mono:
            if isinstance(a, Func):
                base = _FUNCTIONS[a.name](simplify(a.arg))
            elif isinstance(a, Group):
                base = simplify(a.expr)
            else:
                base = Expr._atom(a)
            term = term * base**ex
        acc = acc + term
    return acc


# ---------------------------------------------------------------------------
# evaluation


def _eval_atom(a: _Atom, env: Mapping[str, float], cache: dict) -> float:
    v = cache.get(a)
    if v is not None:
        return v
    if isinstance(a, Symbol):
        try:
            v = float(env[a.name])
        except KeyError:
            raise EvaluationError(f"unbound symbol {a.name!r}") from None
    elif isinstance(a, Constant):
        v = a.value
    elif isinstance(a, Radical):
        v = float(a.base)
    elif isinstance(a, Group):
        v = _eval(a.expr, env, cache)
    else:
        x = _eval(a.arg, env, cache)
        if a.name == "sin":
            v = math.sin(x)
        elif a.name == "cos":
            v = math.cos(x)
        elif a.name == "exp":
            try:
                v = math.exp(x)
            except OverflowError:
                raise EvaluationError("exp overflow") from None
        else:
            if x <= 0:
                raise EvaluationError(f"log of non-positive value {x}")
            v = math.log(x)
    cache[a] = v
    return v


def _pow(v: float, e: Fraction) -> float:
    if e.denominator == 1:
        if v == 0 and e < 0:
            raise EvaluationError("division by zero")
        return v ** int(e)
    if v < 0 or (v == 0 and e < 0):
        raise EvaluationError(f"fractional power of non-positive value {v}")
    return v ** float(e)


def _eval(e: Expr, env: Mapping[str, float], cache: dict) -> float:
    vals = []
    for mono, c in e.terms:
        v = float(c)
        for a, ex in mono:
            v *= _pow(_eval_atom(a, env, cache), ex)
        vals.append(v)
    return math.fsum(vals)


def evaluate(e: Expr, point: Mapping[str, float] | None = None, params: Mapping[str, float] | None = None) -> float:
    """Evaluate at a numeric point; raises :class:`EvaluationError` on failure."""
    e = as_expr(e)
    env = dict(params or {})
    env.update(point or {})
    missing = e.free_symbols - env.keys()
    if missing:
        raise EvaluationError(f"unbound symbol(s): {', '.join(sorted(missing))}")
    try:
        return _eval(e, env, {})
    except (ZeroDivisionError, OverflowError, ValueError) as exc:
        raise EvaluationError(str(exc)) from exc


def evaluate_array(e: Expr, env: Mapping[str, object]) -> np.ndarray:
    """Vectorized evaluation with numpy broadcasting over the bound values."""
    e = as_expr(e)
    missing = e.free_symbols - env.keys()
    if missing:
        raise EvaluationError(f"unbound symbol(s): {', '.join(sorted(missing))}")
    arrays = {k: np.asarray(v, dtype=float) for k, v in env.items()}
    with np.errstate(all="ignore"):
        out = np.asarray(_eval_np(e, arrays), dtype=float)
    shape = np.broadcast_shapes(out.shape, *[a.shape for a in arrays.values()])
    out = np.broadcast_to(out, shape).copy()
    if not np.all(np.isfinite(out)):
        raise EvaluationError("non-finite value during array evaluation")
    return out


def _eval_np(e: Expr, env):
    total = 0.0
    for mono, c in e.terms:
        v = float(c)
        for a, ex in mono:
            if isinstance(a, Symbol):
                base = env[a.name]
            elif isinstance(a, Constant):
                base = a.value
            elif isinstance(a, Radical):
                base = float(a.base)
            elif isinstance(a, Group):
                base = _eval_np(a.expr, env)
            else:
                x = np.asarray(_eval_np(a.arg, env), dtype=float)
                if a.name == "sin":
                    base = np.sin(x)
                elif a.name == "cos":
                    base = np.cos(x)
                elif a.name == "exp":
                    base = np.exp(x)
                else:
                    base = np.log(np.where(x > 0, x, np.nan))
            base = np.asarray(base, dtype=float)
            if ex.denominator == 1:
                v = v * np.power(base, float(ex))
            else:
                v = v * np.power(np.where(base >= 0, base, np.nan), float(ex))
        total = total + v
    return total


# ---------------------------------------------------------------------------
# zero testing


class ZeroStatus(enum.Enum):
    PROVEN_ZERO = "proven-zero"
    PROVEN_NONZERO = "proven-nonzero"
    UNKNOWN = "unknown"


def is_zero(
    e: Expr,
    samples: int = 12,
    bounds: Mapping[str, tuple[float, float]] | None = None,
    params: Mapping[str, float] | None = None,
    seed: int = SAMPLE_SEED,
) -> ZeroStatus:
    """Tri-state zero test; see :class:`ZeroStatus` for the possible answers."""
    e = as_expr(e)
    if e.is_zero_literal:
        return ZeroStatus.PROVEN_ZERO
    rng = np.random.default_rng(seed)
    names = sorted(e.free_symbols)
    bounds = bounds or {}
    params = params or {}
    for _ in range(samples):
        point = {}
        for n in names:
            if n in params:
                point[n] = params[n]
            else:
                lo, hi = bounds.get(n, (0.1, 1.1))
                point[n] = rng.uniform(lo, hi)
        try:
            v = evaluate(e, point)
        except EvaluationError:
            continue
        if abs(v) > NONZERO_THRESHOLD:
            return ZeroStatus.PROVEN_NONZERO
    return ZeroStatus.UNKNOWN


# ---------------------------------------------------------------------------
# charts


@dataclass(frozen=True)
class Chart:
    """Ordered coordinate names with optional per-axis sampling bounds."""

    coordinates: tuple[str, ...]
    bounds: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        coords = tuple(self.coordinates)
        object.__setattr__(self, "coordinates", coords)
        if not 2 <= len(coords) <= 4:
            raise ValueError(f"chart dimension must be between 2 and 4, got {len(coords)}")
        if len(set(coords)) != len(coords):
            raise ValueError(f"coordinate names must be unique: {coords}")
        for c in coords:
            if not c.isidentifier() or c in _FUNCTIONS or c in _CONSTANTS:
                raise ValueError(f"invalid coordinate name {c!r}")
        if self.bounds is not None:
            b = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
            if len(b) != len(coords) or any(lo >= hi for lo, hi in b):
                raise ValueError("bounds must give one increasing (lo, hi) pair per coordinate")
            object.__setattr__(self, "bounds", b)

    @property
    def dim(self) -> int:
        return len(self.coordinates)

    def bounds_map(self) -> dict[str, tuple[float, float]]:
        if self.bounds is None:
            return {}
        return dict(zip(self.coordinates, self.bounds))

    def contains(self, point: Sequence[float]) -> bool:
        if self.bounds is None:
            return True
        return all(lo <= x <= hi for x, (lo, hi) in zip(point, self.bounds))

    def sample_points(self, count: int, seed: int = SAMPLE_SEED, margin: float = 0.05) -> list[dict[str, float]]:
        """Deterministic interior points (shrunk by ``margin`` of each axis)."""
        rng = np.random.default_rng(seed)
        pts = []
        for _ in range(count):
            p = {}
            for i, c in enumerate(self.coordinates):
                lo, hi = self.bounds[i] if self.bounds else (-1.0, 1.0)
                w = hi - lo
                p[c] = rng.uniform(lo + margin * w, hi - margin * w)
            pts.append(p)
        return pts
