"""Expression-to-bytecode compiler and numeric kernel selection.

Symbolic right-hand sides are compiled once into a small stack program and
then evaluated many times by either the Cython extension ``_kernel`` or its
pure-Python twin ``_pykernel``.  The extension is used when importable unless
the environment variable ``CARTAN_FORGE_PURE=1`` forces the fallback.

Variable layout for every program: ``[t, state..., params...]``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import _pykernel
from .expr import Constant, Expr, Func, Group, Radical, Symbol, as_expr

__all__ = ["Program", "compile_program", "backend", "BACKEND_NAME", "KernelError", "STATUS_TEXT"]


def _select_backend():
    if os.environ.get("CARTAN_FORGE_PURE", "") == "1":
        return _pykernel
    try:
        from . import _kernel  # type: ignore[attr-defined]
    except ImportError:
        return _pykernel
    return _kernel


backend = _select_backend()
BACKEND_NAME: str = backend.IMPLEMENTATION

OP = {
    "const": 0, "var": 1, "add": 2, "sub": 3, "mul": 4, "div": 5, "neg": 6,
    "powi": 7, "powf": 8, "sin": 9, "cos": 10, "exp": 11, "log": 12,
}
STATUS_TEXT = {0: "ok", 1: "domain error", 2: "non-finite value"}


class KernelError(ArithmeticError):
    def __init__(self, status: int, where: str = ""):
        super().__init__(f"{STATUS_TEXT.get(status, 'failure')}{' ' + where if where else ''}")
        self.status = status


@dataclass(frozen=True)
class Program:
    ops: np.ndarray
    consts: np.ndarray
    offsets: np.ndarray
    variables: tuple[str, ...]
    depth: int

    @property
    def n_outputs(self) -> int:
        return len(self.offsets) - 1

    def __call__(self, x: Sequence[float]) -> np.ndarray:
        out, st = backend.eval_program(self.ops, self.consts, self.offsets, np.asarray(x, dtype=float), self.depth)
        if st:
            raise KernelError(st)
        return out

    def batch(self, X) -> tuple[np.ndarray, np.ndarray]:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return backend.eval_batch(self.ops, self.consts, self.offsets, X, self.depth)

    def rk4(self, y0, params, t0: float, h: float, nsteps: int):
        return backend.rk4(
            self.ops, self.consts, self.offsets,
            np.asarray(y0, dtype=float), np.asarray(params, dtype=float),
            float(t0), float(h), int(nsteps), self.depth,
        )


class _Compiler:
    def __init__(self, variables: Sequence[str], constants: Mapping[str, float] | None):
        self.index = {v: i for i, v in enumerate(variables)}
        self.fixed = dict(constants or {})
        self.ops: list[tuple[int, int]] = []
        self.consts: list[float] = []
        self.sp = 0
        self.depth = 0

    def _push(self, op: str, arg: int = 0) -> None:
        self.ops.append((OP[op], arg))
        self.sp += 1
        self.depth = max(self.depth, self.sp)

    def _binary(self, op: str) -> None:
        self.ops.append((OP[op], 0))
        self.sp -= 1

    def _unary(self, op: str, arg: int = 0) -> None:
        self.ops.append((OP[op], arg))

    def const(self, v: float) -> None:
        self.consts.append(float(v))
        self._push("const", len(self.consts) - 1)

    def atom(self, a) -> None:
        if isinstance(a, Symbol):
            if a.name in self.index:
                self._push("var", self.index[a.name])
            elif a.name in self.fixed:
                self.const(self.fixed[a.name])
            else:
                raise KeyError(f"symbol {a.name!r} is not a program variable")
        elif isinstance(a, Constant):
            self.const(a.value)
        elif isinstance(a, Group):
            self.expr(a.expr)
        elif isinstance(a, Func):
            self.expr(a.arg)
            self._unary(a.name)
        else:
            raise TypeError(f"unexpected atom {a!r}")

    def factor(self, a, e) -> None:
        if isinstance(a, Radical):
            self.const(float(a.base) ** float(e))
            return
        self.atom(a)
        if e == 1:
            return
        if e.denominator == 1:
            self._unary("powi", int(e))
        else:
            self.consts.append(float(e))
            self._unary("powf", len(self.consts) - 1)

    def term(self, mono, c) -> None:
        if not mono:
            self.const(c)
            return
        for k, (a, e) in enumerate(mono):
            self.factor(a, e)
            if k:
                self._binary("mul")
        if c != 1:
            self.const(c)
            self._binary("mul")

    def expr(self, e: Expr) -> None:
        if not e.terms:
            self.const(0.0)
            return
        for k, (mono, c) in enumerate(e.terms):
            if k == 0:
                self.term(mono, c)
            else:
                self.term(mono, abs(c))
                self._binary("add" if c > 0 else "sub")


def compile_program(
    exprs: Sequence, variables: Sequence[str], constants: Mapping[str, float] | None = None
) -> Program:
    """Compile expressions over ``variables``; ``constants`` are inlined."""
    comp = _Compiler(variables, constants)
    offsets = [0]
    for e in exprs:
        comp.sp = 0
        comp.expr(as_expr(e))
        offsets.append(len(comp.ops))
    ops = np.array(comp.ops, dtype=np.int_).reshape(-1, 2)
    return Program(
        ops=ops,
        consts=np.array(comp.consts if comp.consts else [0.0], dtype=float),
        offsets=np.array(offsets, dtype=np.int_),
        variables=tuple(variables),
        depth=max(comp.depth, 1),
    )
