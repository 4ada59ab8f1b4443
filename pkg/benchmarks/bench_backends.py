"""Compare the compiled relaxation kernels against the pure-Python fallback.

Two measurements:

  kernel   one resolvent-style relaxation on a long path window, calling
           the compiled gs_solve and its uncompiled .py_func on identical
           inputs in the same process
  march    an implicit Euler run through the library, executed in child
           processes with GRAPHFLOW_NUMBA=1 and =0 (the backend is chosen
           at import time, so an honest end-to-end timing needs a fresh
           interpreter per backend)

Run from the repository root:

    python3 benchmarks/bench_backends.py
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _build_window(n):
    from graphflow.generators import path_graph
    from graphflow.graphs import dirichlet_subgraph

    g = path_graph(n)
    return dirichlet_subgraph(g, g.nodes)


def _kernel_inputs(n, seed=0):
    from graphflow import _kernels

    sub = _build_window(n)
    rng = np.random.default_rng(seed)
    g = rng.normal(0.0, 1.0, sub.n)
    return (sub.indptr, sub.indices, sub.weights, sub.mu, sub.deg_dir,
            0.2, g, _kernels.KIND_POWER, 2.0)


def _time_solver(fn, args, repeat):
    best = float("inf")
    sweeps = 0
    for _ in range(repeat):
        u = np.zeros(args[6].shape[0])
        t0 = time.perf_counter()
        sweeps, _res = fn(*args[:9], u, 1e-10, 100_000, False)
        best = min(best, time.perf_counter() - t0)
    return best, sweeps


def bench_kernel(n, repeat):
    from graphflow import _kernels

    args = _kernel_inputs(n)
    if not _kernels.NUMBA_ENABLED:
        print("kernel: numba backend unavailable in this process "
              "(GRAPHFLOW_NUMBA=0 or numba not installed); nothing to compare")
        return
    _time_solver(_kernels.gs_solve, args, 1)  # trigger compilation
    compiled, sweeps = _time_solver(_kernels.gs_solve, args, repeat)
    python, _ = _time_solver(_kernels.gs_solve.py_func, args, max(1, repeat // 3))
    print(f"kernel  path:{n}, power q=2, lam=0.2, {sweeps} sweeps")
    print(f"        numba   {compiled * 1e3:9.2f} ms")
    print(f"        python  {python * 1e3:9.2f} ms")
    print(f"        speedup {python / compiled:9.1f}x")


def _march_seconds(n, steps):
    import graphflow.nonlinearity as nlmod
    from graphflow.evolution import implicit_euler_march, make_uniform_discretization

    sub = _build_window(n)
    rng = np.random.default_rng(1)
    u0 = rng.uniform(0.0, 1.0, sub.n)
    disc = make_uniform_discretization(1.0, steps)
    t0 = time.perf_counter()
    implicit_euler_march(sub, nlmod.power_absorption(2.0), u0, disc)
    return time.perf_counter() - t0


def bench_march(n, steps):
    results = {}
    for flag in ("1", "0"):
        env = dict(os.environ, GRAPHFLOW_NUMBA=flag)
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--march-child",
             "--nodes", str(n), "--steps", str(steps)],
            capture_output=True, text=True, env=env, check=True)
        results[flag] = json.loads(out.stdout)
    print(f"march   path:{n}, power q=2, {steps} implicit steps over [0, 1]")
    print(f"        numba   {results['1']['seconds'] * 1e3:9.2f} ms "
          f"(backend {results['1']['backend']}, includes jit warmup)")
    print(f"        python  {results['0']['seconds'] * 1e3:9.2f} ms "
          f"(backend {results['0']['backend']})")
    print(f"        speedup {results['0']['seconds'] / results['1']['seconds']:9.1f}x")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=1500)
    ap.add_argument("--steps", type=int, default=100)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--march-child", action="store_true",
                    help=argparse.SUPPRESS)
    args = ap.parse_args(argv)
    if args.march_child:
        from graphflow import _kernels

        seconds = _march_seconds(args.nodes, args.steps)
        print(json.dumps({"backend": _kernels.backend_name(),
                          "seconds": seconds}))
        return 0
    from graphflow import _kernels

    print(f"backend in this process: {_kernels.backend_name()}")
    bench_kernel(args.nodes, args.repeat)
    bench_march(args.nodes, args.steps)
    return 0


if __name__ == "__main__":
    sys.exit(main())
