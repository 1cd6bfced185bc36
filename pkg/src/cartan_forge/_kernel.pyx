# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluator and RK4 stepper for expression programs.

Same calling convention and status codes as the pure-Python twin in
``_pykernel.py``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, exp, log, pow, isfinite

cnp.import_array()

cdef enum:
    OP_CONST = 0
    OP_VAR = 1
    OP_ADD = 2
    OP_SUB = 3
    OP_MUL = 4
    OP_DIV = 5
    OP_NEG = 6
    OP_POWI = 7
    OP_POWF = 8
    OP_SIN = 9
    OP_COS = 10
    OP_EXP = 11
    OP_LOG = 12

STATUS_OK = 0
STATUS_DOMAIN = 1
STATUS_NONFINITE = 2

IMPLEMENTATION = "cython"


cdef inline double _ipow(double b, long e) nogil:
    cdef double r = 1.0
    while e > 0:
        if e & 1:
            r *= b
        b *= b
        e >>= 1
    return r


cdef int _run(const long[:, ::1] ops, const double[::1] consts, long lo, long hi,
              const double* x, double* stack, double* result) nogil:
    cdef long sp = 0
    cdef long pc, op, arg
    cdef double b, e
    for pc in range(lo, hi):
        op = ops[pc, 0]
        arg = ops[pc, 1]
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
                return 1
            stack[sp - 1] /= stack[sp]
        elif op == OP_NEG:
            stack[sp - 1] = -stack[sp - 1]
        elif op == OP_POWI:
            b = stack[sp - 1]
            if arg < 0:
                if b == 0.0:
                    return 1
                stack[sp - 1] = 1.0 / _ipow(b, -arg)
            else:
                stack[sp - 1] = _ipow(b, arg)
        elif op == OP_POWF:
            b = stack[sp - 1]
            e = consts[arg]
            if b < 0.0 or (b == 0.0 and e < 0.0):
                return 1
            stack[sp - 1] = pow(b, e)
        elif op == OP_SIN:
            stack[sp - 1] = sin(stack[sp - 1])
        elif op == OP_COS:
            stack[sp - 1] = cos(stack[sp - 1])
        elif op == OP_EXP:
            if stack[sp - 1] > 709.0:
                return 2
            stack[sp - 1] = exp(stack[sp - 1])
        elif op == OP_LOG:
            if stack[sp - 1] <= 0.0:
                return 1
            stack[sp - 1] = log(stack[sp - 1])
    result[0] = stack[0]
    if not isfinite(stack[0]):
        return 2
    return 0


cdef int _eval_into(const long[:, ::1] ops, const double[::1] consts, const long[::1] offsets,
                    const double* x, double* out, double* stack) nogil:
    cdef long k, m = offsets.shape[0] - 1
    cdef int st
    for k in range(m):
        st = _run(ops, consts, offsets[k], offsets[k + 1], x, stack, &out[k])
        if st:
            return st
    return 0


def _prep(ops, consts, offsets):
    return (np.ascontiguousarray(ops, dtype=np.int_),
            np.ascontiguousarray(consts, dtype=np.float64),
            np.ascontiguousarray(offsets, dtype=np.int_))


def eval_program(ops, consts, offsets, x, long depth):
    o, c, f = _prep(ops, consts, offsets)
    cdef const long[:, ::1] ov = o
    cdef const double[::1] cv = c
    cdef const long[::1] fv = f
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    out = np.zeros(max(f.shape[0] - 1, 1))
    cdef double[::1] outv = out
    cdef double[::1] stack = np.zeros(max(depth, 1))
    cdef int st
    if xv.shape[0] == 0:
        xv = np.zeros(1)
    st = _eval_into(ov, cv, fv, &xv[0], &outv[0], &stack[0])
    return out[:f.shape[0] - 1], st


def eval_batch(ops, consts, offsets, X, long depth):
    o, c, f = _prep(ops, consts, offsets)
    cdef const long[:, ::1] ov = o
    cdef const double[::1] cv = c
    cdef const long[::1] fv = f
    Xa = np.ascontiguousarray(X, dtype=np.float64)
    if Xa.shape[1] == 0:
        Xa = np.zeros((Xa.shape[0], 1))
    cdef double[:, ::1] xv = Xa
    cdef long m = f.shape[0] - 1
    cdef long nrows = xv.shape[0]
    out = np.zeros((nrows, max(m, 1)))
    status = np.zeros(nrows, dtype=np.int64)
    cdef double[:, ::1] outv = out
    cdef cnp.int64_t[::1] sv = status
    cdef double[::1] stack = np.zeros(max(depth, 1))
    cdef long r, k
    with nogil:
        for r in range(nrows):
            sv[r] = _eval_into(ov, cv, fv, &xv[r, 0], &outv[r, 0], &stack[0])
            if sv[r]:
                for k in range(m):
                    outv[r, k] = 0.0
    return out[:, :m], status


def rk4(ops, consts, offsets, y0, params, double t0, double h, long nsteps, long depth):
    o, c, f = _prep(ops, consts, offsets)
    cdef const long[:, ::1] ov = o
    cdef const double[::1] cv = c
    cdef const long[::1] fv = f
    cdef long m = len(y0)
    cdef long p = len(params)
    cdef long nv = 1 + m + p
    traj = np.zeros((nsteps + 1, m))
    cdef double[:, ::1] tv = traj
    cdef double[::1] y = np.ascontiguousarray(y0, dtype=np.float64).copy()
    cdef double[::1] xv = np.zeros(nv)
    cdef double[::1] k1 = np.zeros(max(m, 1))
    cdef double[::1] k2 = np.zeros(max(m, 1))
    cdef double[::1] k3 = np.zeros(max(m, 1))
    cdef double[::1] k4 = np.zeros(max(m, 1))
    cdef double[::1] stack = np.zeros(max(depth, 1))
    cdef double[::1] pv = np.ascontiguousarray(params, dtype=np.float64) if p else np.zeros(1)
    cdef long i, step
    cdef int st = 0
    cdef double t = t0
    for i in range(m):
        tv[0, i] = y[i]
    for i in range(p):
        xv[1 + m + i] = pv[i]
    with nogil:
        for step in range(nsteps):
            xv[0] = t
            for i in range(m):
                xv[1 + i] = y[i]
            st = _eval_into(ov, cv, fv, &xv[0], &k1[0], &stack[0])
            if st:
                break
            xv[0] = t + 0.5 * h
            for i in range(m):
                xv[1 + i] = y[i] + 0.5 * h * k1[i]
            st = _eval_into(ov, cv, fv, &xv[0], &k2[0], &stack[0])
            if st:
                break
            for i in range(m):
                xv[1 + i] = y[i] + 0.5 * h * k2[i]
            st = _eval_into(ov, cv, fv, &xv[0], &k3[0], &stack[0])
            if st:
                break
            xv[0] = t + h
            for i in range(m):
                xv[1 + i] = y[i] + h * k3[i]
            st = _eval_into(ov, cv, fv, &xv[0], &k4[0], &stack[0])
            if st:
                break
            for i in range(m):
                y[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                tv[step + 1, i] = y[i]
            t = t0 + (step + 1) * h
    if st:
        return traj, st, step
    return traj, 0, nsteps
