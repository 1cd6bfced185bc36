"""Pure-Python evaluator and RK4 stepper for compiled expression programs.

This mirrors ``_kernel.pyx`` operation for operation; it is used when the
compiled extension is unavailable or ``CARTAN_FORGE_PURE=1`` is set.
"""
from __future__ import annotations

import math

import numpy as np

OP_CONST, OP_VAR, OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_NEG = 0, 1, 2, 3, 4, 5, 6
OP_POWI, OP_POWF, OP_SIN, OP_COS, OP_EXP, OP_LOG = 7, 8, 9, 10, 11, 12

STATUS_OK, STATUS_DOMAIN, STATUS_NONFINITE = 0, 1, 2

IMPLEMENTATION = "python"


def _run(ops, consts, lo, hi, x, stack):
    sp = 0
    for pc in range(lo, hi):
        op = ops[pc][0]
        arg = ops[pc][1]
        if op == OP_CONST:
            stack[sp] = consts[arg]
            sp += 1
        elif op == OP_VAR:
            stack[sp] = x[arg]
            sp += 1
        elif op == OP_ADD:
            sp -= 1
            stack[sp - 1] += stack[sp]
        elif op == OP_SUB:
            sp -= 1
            stack[sp - 1] -= stack[sp]
        elif op == OP_MUL:
            sp -= 1
            stack[sp - 1] *= stack[sp]
        elif op == OP_DIV:
            sp -= 1
            if stack[sp] == 0.0:
                return STATUS_DOMAIN, 0.0
            stack[sp - 1] /= stack[sp]
        elif op == OP_NEG:
            stack[sp - 1] = -stack[sp - 1]
        elif op == OP_POWI:
            b = stack[sp - 1]
            if arg < 0:
                if b == 0.0:
                    return STATUS_DOMAIN, 0.0
                stack[sp - 1] = 1.0 / (b ** (-arg))
            else:
                stack[sp - 1] = b**arg
        elif op == OP_POWF:
            b = stack[sp - 1]
            e = consts[arg]
            if b < 0.0 or (b == 0.0 and e < 0.0):
                return STATUS_DOMAIN, 0.0
            stack[sp - 1] = b**e
        elif op == OP_SIN:
            stack[sp - 1] = math.sin(stack[sp - 1])
        elif op == OP_COS:
            stack[sp - 1] = math.cos(stack[sp - 1])
        elif op == OP_EXP:
            if stack[sp - 1] > 709.0:
                return STATUS_NONFINITE, 0.0
            stack[sp - 1] = math.exp(stack[sp - 1])
        elif op == OP_LOG:
            if stack[sp - 1] <= 0.0:
                return STATUS_DOMAIN, 0.0
            stack[sp - 1] = math.log(stack[sp - 1])
    v = stack[0]
    if not math.isfinite(v):
        return STATUS_NONFINITE, v
    return STATUS_OK, v


def _eval_into(ops, consts, offsets, x, out, stack):
    for k in range(len(offsets) - 1):
        try:
            st, v = _run(ops, consts, offsets[k], offsets[k + 1], x, stack)
        except OverflowError:
            return STATUS_NONFINITE
        if st:
            return st
        out[k] = v
    return STATUS_OK


def eval_program(ops, consts, offsets, x, depth):
    """Evaluate every output of a program at the variable vector ``x``."""
    ops_l = [tuple(r) for r in np.asarray(ops).tolist()]
    consts_l = np.asarray(consts, dtype=float).tolist()
    offs = np.asarray(offsets).tolist()
    out = [0.0] * (len(offs) - 1)
    st = _eval_into(ops_l, consts_l, offs, list(map(float, x)), out, [0.0] * max(depth, 1))
    return np.array(out, dtype=float), st


def eval_batch(ops, consts, offsets, X, depth):
    """Row-wise evaluation; returns (values, per-row status)."""
    ops_l = [tuple(r) for r in np.asarray(ops).tolist()]
    consts_l = np.asarray(consts, dtype=float).tolist()
    offs = np.asarray(offsets).tolist()
    X = np.asarray(X, dtype=float)
    m = len(offs) - 1
    out = np.zeros((X.shape[0], m))
    status = np.zeros(X.shape[0], dtype=np.int64)
    row = [0.0] * m
    stack = [0.0] * max(depth, 1)
    for r, xr in enumerate(X.tolist()):
        st = _eval_into(ops_l, consts_l, offs, xr, row, stack)
        status[r] = st
        if not st:
            out[r] = row
    return out, status


def rk4(ops, consts, offsets, y0, params, t0, h, nsteps, depth):
    """Classical fixed-step RK4 for y' = f(t, y, params).

    Returns ``(trajectory, status, steps_done)`` where the trajectory has
    ``steps_done + 1`` valid rows.
    """
    ops_l = [tuple(r) for r in np.asarray(ops).tolist()]
    consts_l = np.asarray(consts, dtype=float).tolist()
    offs = np.asarray(offsets).tolist()
    y = [float(v) for v in y0]
    p = [float(v) for v in params]
    m = len(y)
    traj = np.zeros((nsteps + 1, m))
    traj[0] = y
    stack = [0.0] * max(depth, 1)
    k1, k2, k3, k4 = ([0.0] * m for _ in range(4))
    t = float(t0)
    for step in range(nsteps):
        st = _eval_into(ops_l, consts_l, offs, [t] + y + p, k1, stack)
        if st:
            return traj, st, step
        yt = [y[i] + 0.5 * h * k1[i] for i in range(m)]
        st = _eval_into(ops_l, consts_l, offs, [t + 0.5 * h] + yt + p, k2, stack)
        if st:
            return traj, st, step
        yt = [y[i] + 0.5 * h * k2[i] for i in range(m)]
        st = _eval_into(ops_l, consts_l, offs, [t + 0.5 * h] + yt + p, k3, stack)
        if st:
            return traj, st, step
        yt = [y[i] + h * k3[i] for i in range(m)]
        st = _eval_into(ops_l, consts_l, offs, [t + h] + yt + p, k4, stack)
        if st:
            return traj, st, step
        y = [y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in range(m)]
        t = t0 + (step + 1) * h
        traj[step + 1] = y
    return traj, STATUS_OK, nsteps
