"""Parallel transport, loop holonomy, geodesics and autoparallels.

All integrations use fixed-step classical RK4 over compiled right-hand sides
(see :mod:`cartan_forge.kernel`).

* parallel transport of frame components: ``dv^i/ds = -omega^i_j(c') v^j``;
* development of a loop: the frame matrix ``A`` (columns are the moving
  frame expressed in the base frame) obeys ``dA/ds = A W`` with
  ``W^i_j = omega^i_j(c')`` and the developed point obeys ``dP/ds = A omega(c')``.
  Around a small loop ``A - I`` approaches the curvature 2-forms evaluated on
  the loop area bivector and ``P`` approaches the torsion 2-forms;
* geodesics are autoparallels of the Levi-Civita connection.  The state is
  ``(x, u)`` with ``u^i = omega^i(x')`` the frame components of the velocity,
  ``x' = E u`` and ``u'^i = -omega^i_j(e_k) u^k u^j``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import logm

from .cartan import CartanConnection, FrameField, levi_civita
from .expr import ZERO, Expr, as_expr, differentiate, evaluate, symbol
from .kernel import KernelError, compile_program

__all__ = [
    "CurveSpec",
    "HolonomyResult",
    "Trajectory",
    "TransportError",
    "DomainExitError",
    "NonClosedLoopError",
    "parallel_transport",
    "loop_holonomy",
    "square_loop",
    "geodesic",
    "autoparallel",
    "two_form_on_area",
]

_PARAM = "_s_"
_TIME = "_t_"
CLOSURE_TOL = 1e-12


class TransportError(ArithmeticError):
    pass


class DomainExitError(TransportError):
    def __init__(self, message: str, trajectory: "Trajectory | None" = None):
        super().__init__(message)
        self.trajectory = trajectory


class NonClosedLoopError(ValueError):
    pass


@dataclass(frozen=True)
class CurveSpec:
    """A curve given by symbolic coordinate functions or by a polyline.

    ``coords`` are expressions in the symbol named ``param`` over
    ``interval``; ``points`` is a list of coordinate tuples joined by straight
    segments, each parametrized over ``[0, 1]``.
    """

    coords: tuple[Expr, ...] | None = None
    param: str = "s"
    interval: tuple[float, float] = (0.0, 1.0)
    points: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self):
        if (self.coords is None) == (self.points is None):
            raise ValueError("give exactly one of coords or points")
        if self.coords is not None:
            exprs = tuple(as_expr(c).subs({self.param: symbol(_PARAM)}) for c in self.coords)
            object.__setattr__(self, "coords", exprs)
            a, b = (float(v) for v in self.interval)
            if not b > a:
                raise ValueError("curve interval must be increasing")
            object.__setattr__(self, "interval", (a, b))
        else:
            pts = tuple(tuple(float(v) for v in p) for p in self.points)
            if len(pts) < 2 or len({len(p) for p in pts}) != 1:
                raise ValueError("polyline needs at least two points of equal dimension")
            object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return len(self.coords) if self.coords is not None else len(self.points[0])

    def segments(self) -> list[tuple[tuple[Expr, ...], tuple[float, float]]]:
        if self.coords is not None:
            return [(self.coords, self.interval)]
        s = symbol(_PARAM)
        out = []
        for p, q in zip(self.points[:-1], self.points[1:]):
            exprs = tuple(as_expr(a) + (as_expr(b) - as_expr(a)) * s for a, b in zip(p, q))
            out.append((exprs, (0.0, 1.0)))
        return out

    def endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        if self.points is not None:
            return np.array(self.points[0]), np.array(self.points[-1])
        a, b = self.interval
        start = np.array([evaluate(c, {_PARAM: a}) for c in self.coords])
        end = np.array([evaluate(c, {_PARAM: b}) for c in self.coords])
        return start, end

    def closed(self) -> "CurveSpec":
        """Return the loop with its end snapped onto its start, or raise."""
        start, end = self.endpoints()
        gap = float(np.max(np.abs(end - start)))
        if gap > CLOSURE_TOL:
            raise NonClosedLoopError(f"loop endpoints differ by {gap:.3e}")
        if self.points is not None and gap:
            pts = self.points[:-1] + (self.points[0],)
            return CurveSpec(points=pts)
        return self


def square_loop(base: Sequence[float], h: float, plane: tuple[int, int] = (0, 1)) -> CurveSpec:
    """Counter-clockwise coordinate square of side ``h`` with corner ``base``."""
    a, b = plane
    p0 = list(map(float, base))
    p1 = list(p0)
    p1[a] += h
    p2 = list(p1)
    p2[b] += h
    p3 = list(p0)
    p3[b] += h
    return CurveSpec(points=(tuple(p0), tuple(p1), tuple(p2), tuple(p3), tuple(p0)))


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    u: np.ndarray
    coordinates: tuple[str, ...]
    signature: tuple[int, ...]

    def norm2(self) -> np.ndarray:
        """Frame-metric norm sum_i eps_i (u^i)^2 along the trajectory."""
        return self.u**2 @ np.asarray(self.signature, dtype=float)

    def to_csv(self) -> str:
        n = self.x.shape[1]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"x{i + 1}" for i in range(n)] + [f"v{i + 1}" for i in range(n)])
        for k in range(len(self.t)):
            w.writerow(["%.12e" % v for v in (self.t[k], *self.x[k], *self.v[k])])
        return buf.getvalue()


@dataclass
class HolonomyResult:
    rotation: np.ndarray
    translation: np.ndarray
    area: np.ndarray
    step: float
    centroid: np.ndarray
    predicted_rotation: np.ndarray | None = None
    predicted_translation: np.ndarray | None = None

    @property
    def generator(self) -> np.ndarray:
        """Matrix logarithm of the rotation part."""
        return np.real(logm(self.rotation))

    def metricity_defect(self, signature: Sequence[int]) -> float:
        eta = np.diag(np.asarray(signature, dtype=float))
        return float(np.max(np.abs(self.rotation.T @ eta @ self.rotation - eta)))

    def as_dict(self) -> dict:
        d = {
            "rotation": self.rotation.tolist(),
            "translation": self.translation.tolist(),
            "loop_area": self.area.tolist(),
            "step": self.step,
            "centroid": self.centroid.tolist(),
        }
        if self.predicted_rotation is not None:
            d["predicted_rotation"] = self.predicted_rotation.tolist()
            d["predicted_translation"] = self.predicted_translation.tolist()
        return d


# ---------------------------------------------------------------------------
# helpers


def _steps(interval: tuple[float, float], step: float) -> tuple[int, float]:
    if not step > 0:
        raise ValueError("step must be positive")
    a, b = interval
    n = max(1, int(math.ceil((b - a) / step - 1e-9)))
    return n, (b - a) / n


def _connection_along(C: CartanConnection, exprs: Sequence[Expr]) -> tuple[list[list[Expr]], list[Expr], list[Expr]]:
    """W^i_j(s), coframe values omega^i(c') and c'(s) along a parametrized segment."""
    names = C.chart.coordinates
    if len(exprs) != len(names):
        raise ValueError(f"curve has {len(exprs)} coordinates, chart has {len(names)}")
    sub = dict(zip(names, exprs))
    dc = [differentiate(e, _PARAM) for e in exprs]
    n = C.n

    def on_tangent(form) -> Expr:
        total = ZERO
        for (mu,), coef in form.coeffs.items():
            if dc[mu]:
                total = total + coef.subs(sub) * dc[mu]
        return total

    W = [[on_tangent(C.omega[i][j]) for j in range(n)] for i in range(n)]
    theta = [on_tangent(C.frame.coframe[i]) for i in range(n)]
    return W, theta, dc


def _param_layout(frame: FrameField) -> tuple[list[str], list[float]]:
    names = sorted(frame.params)
    return names, [float(frame.params[k]) for k in names]


def _run(prog, y0, pvals, a, h, nsteps, what: str):
    traj, st, done = prog.rk4(y0, pvals, a, h, nsteps)
    if st:
        raise TransportError(f"{what}: {KernelError(st)} after {done} steps")
    return traj


def parallel_transport(
    C: CartanConnection, curve: CurveSpec, v0: Sequence[float], step: float, return_path: bool = False
):
    """Transport frame components ``v0`` along ``curve``."""
    n = C.n
    v = np.asarray(v0, dtype=float)
    if v.shape != (n,):
        raise ValueError(f"v0 must have {n} components")
    pnames, pvals = _param_layout(C.frame)
    vnames = [f"_v{i}_" for i in range(n)]
    path = [v.copy()]
    for exprs, interval in curve.segments():
        W, _, _ = _connection_along(C, exprs)
        rhs = []
        for i in range(n):
            e = ZERO
            for j in range(n):
                if W[i][j]:
                    e = e - W[i][j] * symbol(vnames[j])
            rhs.append(e)
        prog = compile_program(rhs, [_PARAM] + vnames + pnames)
        nsteps, h = _steps(interval, step)
        traj = _run(prog, v, pvals, interval[0], h, nsteps, "parallel transport")
        v = traj[-1].copy()
        if return_path:
            path.extend(traj[1:])
    return (v, np.array(path)) if return_path else v


def two_form_on_area(form, point: dict, area: np.ndarray, params: dict) -> float:
    """Evaluate a coordinate 2-form on an area bivector (upper-triangle sum)."""
    total = 0.0
    for (mu, nu), coef in form.coeffs.items():
        total += evaluate(coef, point, params) * area[mu, nu]
    return total


def loop_holonomy(C: CartanConnection, loop: CurveSpec, step: float, predict: bool = True) -> HolonomyResult:
    """Rotation and translation defect of the development of a closed loop."""
    loop = loop.closed()
    n = C.n
    pnames, pvals = _param_layout(C.frame)
    anames = [[f"_a{i}_{j}_" for j in range(n)] for i in range(n)]
    flat_a = [a for row in anames for a in row]
    pnames_p = [f"_p{i}_" for i in range(n)]
    snames = [f"_q{mu}_{nu}_" for mu in range(n) for nu in range(mu + 1, n)]
    A = np.eye(n)
    P = np.zeros(n)
    S = np.zeros(len(snames))
    samples = []
    for exprs, interval in loop.segments():
        W, theta, dc = _connection_along(C, exprs)
        rhs = []
        for i in range(n):
            for j in range(n):
                e = ZERO
                for k in range(n):
                    if W[k][j]:
                        e = e + symbol(anames[i][k]) * W[k][j]
                rhs.append(e)
        for i in range(n):
            e = ZERO
            for k in range(n):
                if theta[k]:
                    e = e + symbol(anames[i][k]) * theta[k]
            rhs.append(e)
        for mu in range(n):
            for nu in range(mu + 1, n):
                rhs.append((exprs[mu] * dc[nu] - exprs[nu] * dc[mu]) / 2)
        prog = compile_program(rhs, [_PARAM] + flat_a + pnames_p + snames + pnames)
        nsteps, h = _steps(interval, step)
        y0 = np.concatenate([A.ravel(), P, S])
        traj = _run(prog, y0, pvals, interval[0], h, nsteps, "loop development")
        y = traj[-1]
        A = y[: n * n].reshape(n, n)
        P = y[n * n: n * n + n]
        S = y[n * n + n:]
        for frac in (0.0, 0.25, 0.5, 0.75):
            s = interval[0] + frac * (interval[1] - interval[0])
            samples.append([evaluate(e, {_PARAM: s}) for e in exprs])
    area = np.zeros((n, n))
    k = 0
    for mu in range(n):
        for nu in range(mu + 1, n):
            area[mu, nu] = S[k]
            area[nu, mu] = -S[k]
            k += 1
    centroid = np.mean(np.array(samples), axis=0)
    res = HolonomyResult(rotation=A, translation=P, area=area, step=step, centroid=centroid)
    if predict:
        res.predicted_rotation, res.predicted_translation = predict_holonomy(C, centroid, area)
    return res


def predict_holonomy(C: CartanConnection, point: Sequence[float], area: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Curvature and torsion 2-forms evaluated on ``area`` at ``point``."""
    n = C.n
    pt = dict(zip(C.chart.coordinates, map(float, point)))
    params = C.frame.params
    R = np.array([[two_form_on_area(C.data.curvature[i][j], pt, area, params) for j in range(n)] for i in range(n)])
    T = np.array([two_form_on_area(C.data.torsion[i], pt, area, params) for i in range(n)])
    return R, T


# ---------------------------------------------------------------------------
# geodesics and autoparallels


def _autoparallel_program(C: CartanConnection):
    F = C.frame
    n = C.n
    names = list(C.chart.coordinates)
    unames = [f"_u{i}_" for i in range(n)]
    pnames, pvals = _param_layout(F)
    E = F.inverse
    rhs = []
    for mu in range(n):
        e = ZERO
        for i in range(n):
            if E[mu][i]:
                e = e + E[mu][i] * symbol(unames[i])
        rhs.append(e)
    # omega^i_j(e_k)
    for i in range(n):
        e = ZERO
        for j in range(n):
            for (mu,), coef in C.omega[i][j].coeffs.items():
                for k in range(n):
                    if E[mu][k]:
                        e = e - coef * E[mu][k] * symbol(unames[k]) * symbol(unames[j])
        rhs.append(e)
    prog = compile_program(rhs, [_TIME] + names + unames + pnames)
    return prog, pvals


def autoparallel(
    C: CartanConnection,
    x0: Sequence[float],
    v0: Sequence[float],
    step: float,
    t_end: float,
    check_domain: bool = True,
) -> Trajectory:
    """Curve whose tangent is parallel for the full connection ``C``.

    ``v0`` is the initial coordinate velocity.
    """
    F = C.frame
    n = C.n
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    if x0.shape != (n,) or v0.shape != (n,):
        raise ValueError(f"x0 and v0 need {n} components")
    if not np.any(v0):
        raise ValueError("initial velocity must be nonzero")
    point = dict(zip(C.chart.coordinates, x0))
    theta = np.array([[evaluate(F.matrix[i][mu], point, F.params) for mu in range(n)] for i in range(n)])
    u0 = theta @ v0
    prog, pvals = _autoparallel_program(C)
    nsteps, h = _steps((0.0, float(t_end)), step)
    traj, st, done = prog.rk4(np.concatenate([x0, u0]), pvals, 0.0, h, nsteps)
    rows = traj[: done + 1]
    t = np.arange(done + 1) * h
    X = np.column_stack([t, rows, np.tile(pvals, (len(t), 1))]) if pvals else np.column_stack([t, rows])
    vals, _ = prog.batch(X)
    result = Trajectory(
        t=t, x=rows[:, :n], v=vals[:, :n], u=rows[:, n:],
        coordinates=C.chart.coordinates, signature=tuple(F.signature),
    )
    if st:
        raise TransportError(f"autoparallel integration: {KernelError(st)} after {done} steps")
    if check_domain and C.chart.bounds is not None:
        lo = np.array([b[0] for b in C.chart.bounds])
        hi = np.array([b[1] for b in C.chart.bounds])
        outside = np.any((result.x < lo) | (result.x > hi), axis=1)
        if outside.any():
            k = int(np.argmax(outside))
            raise DomainExitError(f"trajectory leaves the chart domain at t={t[k]:.6g}", result)
    return result


def geodesic(
    F: FrameField,
    x0: Sequence[float],
    v0: Sequence[float],
    step: float,
    t_end: float,
    check_domain: bool = True,
) -> Trajectory:
    """Extremal-length curve: autoparallel of the Levi-Civita connection."""
    return autoparallel(levi_civita(F), x0, v0, step, t_end, check_domain)
