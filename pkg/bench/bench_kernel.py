"""Compare the compiled and pure-Python evaluation kernels.

Runs the autoparallel right-hand side of a catalog geometry through RK4 and
through batched evaluation with each available backend. The final states of
both backends are compared before the wall-clock timings are printed.

    python bench/bench_kernel.py --entry sphere3_lc --steps 20000 --repeat 3
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from cartan_forge import _pykernel
from cartan_forge.catalog import builtin
from cartan_forge.transport import _autoparallel_program

try:
    from cartan_forge import _kernel
except ImportError:  # extension not built
    _kernel = None


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--entry", default="sphere3_lc")
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--batch", type=int, default=20000, help="points for batched evaluation")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    C = builtin(args.entry).connection
    prog, pvals = _autoparallel_program(C)
    n = C.n
    y0 = np.concatenate([np.full(n, 0.1), np.linspace(0.2, 0.4, n)])
    h = 1.0 / args.steps
    rng = np.random.default_rng(0)
    X = np.column_stack([np.zeros(args.batch), rng.uniform(-0.3, 0.3, (args.batch, 2 * n)),
                         np.tile(pvals, (args.batch, 1))]) if pvals else np.column_stack(
        [np.zeros(args.batch), rng.uniform(-0.3, 0.3, (args.batch, 2 * n))])

    backends = [("python", _pykernel)] + ([("cython", _kernel)] if _kernel is not None else [])
    rows, finals = [], {}
    for name, mod in backends:
        def run_rk4(mod=mod):
            return mod.rk4(prog.ops, prog.consts, prog.offsets, y0, np.asarray(pvals, float), 0.0, h,
                           args.steps, prog.depth)

        def run_batch(mod=mod):
            return mod.eval_batch(prog.ops, prog.consts, prog.offsets, X, prog.depth)

        traj, status, _ = run_rk4()
        finals[name] = traj[-1]
        rows.append((name, best_of(run_rk4, args.repeat), best_of(run_batch, args.repeat), status))

    print(f"entry {args.entry}: {prog.n_outputs} outputs, {len(prog.ops)} ops, "
          f"rk4 {args.steps} steps, batch {args.batch} points")
    print(f"{'backend':<8} {'rk4 [s]':>10} {'batch [s]':>10}  status")
    for name, t_rk, t_b, st in rows:
        print(f"{name:<8} {t_rk:10.4f} {t_b:10.4f}  {st}")
    if len(rows) == 2:
        print(f"speed-up rk4 x{rows[0][1] / rows[1][1]:.1f}, batch x{rows[0][2] / rows[1][2]:.1f}")
        print(f"max final-state difference {np.max(np.abs(finals['python'] - finals['cython'])):.2e}")


if __name__ == "__main__":
    main()
