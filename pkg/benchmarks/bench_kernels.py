"""Compiled vs pure-Python kernels on desk-size problems.

    python3 benchmarks/bench_kernels.py [--n 400] [--m 2000] [--repeat 3]
"""

import argparse
import time

import numpy as np

from cascade_lab import kernels
from cascade_lab.grid import GridFunction, build_mesh
from cascade_lab.spectral import assemble_operator


def _best(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=400, help="cells")
    ap.add_argument("--m", type=int, default=2000, help="time steps")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    if kernels.compiled is None:
        print("compiled backend not available; build the extension first")
        return 1
    mesh = build_mesh(args.n)
    x = mesh.nodes
    op = assemble_operator(GridFunction(mesh, 1.0 + x / np.pi), GridFunction.zeros(mesh))
    rng = np.random.default_rng(0)
    ni = args.n - 1
    csub, cdia, csup = rng.normal(size=ni - 1), rng.normal(size=ni), rng.normal(size=ni - 1)
    u0, w0 = np.sin(x[1:-1]), np.sin(2 * x[1:-1])
    src = rng.normal(size=(args.m, ni))
    shift = mesh.h ** 2 * np.full(args.n + 1, -4.0)
    rhs = rng.normal(size=ni)

    cases = {
        "cn_cascade_march": lambda mod: mod.cn_cascade_march(op.off, op.diag, op.off, csub, cdia, csup,
                                                             u0, w0, src, 1.0 / args.m),
        "recurrence_march": lambda mod: mod.recurrence_march(op.gamma_mid, shift, 1.0, 1.0),
        "thomas_solve": lambda mod: mod.thomas_solve(op.off, op.diag + 1.0, op.off, rhs),
    }
    print(f"n_cells={args.n} m_steps={args.m} (best of {args.repeat})")
    print(f"{'kernel':<18} {'compiled [s]':>13} {'python [s]':>11} {'speedup':>8} {'max diff':>10}")
    for name, call in cases.items():
        tc, oc = _best(lambda: call(kernels.compiled), args.repeat)
        tp, op_ = _best(lambda: call(kernels.fallback), max(1, args.repeat // 3))
        oc = np.concatenate([np.ravel(a) for a in (oc if isinstance(oc, tuple) else (oc,))])
        op_ = np.concatenate([np.ravel(a) for a in (op_ if isinstance(op_, tuple) else (op_,))])
        diff = float(np.max(np.abs(oc - op_)))
        print(f"{name:<18} {tc:13.5f} {tp:11.5f} {tp / tc:8.1f} {diff:10.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
