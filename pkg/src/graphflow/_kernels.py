"""Hot numeric kernels: per-node scalar solves and relaxation sweeps.

The kernels are written once as plain Python over numpy arrays and float
scalars.  When numba is importable (and not switched off) they are compiled
with ``numba.njit``; otherwise the same functions run uncompiled.  Both
paths execute identical floating point operations, so results do not depend
on the backend.

Set ``GRAPHFLOW_NUMBA=0`` in the environment to force the uncompiled path.
The compiled originals stay reachable through ``<kernel>.py_func`` for
benchmarking.

Built-in nonlinearity shapes are dispatched by integer code so the compiled
sweeps never call back into Python:

    KIND_ZERO    f(s) = 0
    KIND_LINEAR  f(s) = -s
    KIND_POWER   f(s) = -s |s|^(q-1)
"""

import math
import os

__all__ = [
    "NUMBA_ENABLED",
    "backend_name",
    "KIND_ZERO",
    "KIND_LINEAR",
    "KIND_POWER",
    "psi_builtin",
    "solve_scalar",
    "residual_inf",
    "gs_solve",
]

KIND_ZERO = 0
KIND_LINEAR = 1
KIND_POWER = 2


def _numba_wanted():
    flag = os.environ.get("GRAPHFLOW_NUMBA", "").strip().lower()
    return flag not in ("0", "false", "off", "no")


NUMBA_ENABLED = False
if _numba_wanted():
    try:
        import numba
        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False


def _maybe_jit(fn):
    if NUMBA_ENABLED:
        return numba.njit(cache=True)(fn)
    return fn


def backend_name():
    return "numba" if NUMBA_ENABLED else "python"


@_maybe_jit
def psi_builtin(kind, q, lam, s):
    """psi(s) = s - lam * f(s) for a built-in shape."""
    if kind == KIND_ZERO:
        return s
    if kind == KIND_LINEAR:
        return s + lam * s
    t = -s if s < 0.0 else s
    tq = t ** q if t > 0.0 else 0.0
    if s >= 0.0:
        return s + lam * tq
    return s - lam * tq


@_maybe_jit
def solve_scalar(kind, q, lam, a, rhs):
    """Solve psi(s) + a*s = rhs, a >= 0, for a built-in shape.

    Zero and linear shapes are closed form.  The power shape reduces to the
    positive root of (1+a) t + lam t^q = |rhs|, found by Newton iteration
    safeguarded by the bracket [0, |rhs|/(1+a)].
    """
    if kind == KIND_ZERO:
        return rhs / (1.0 + a)
    if kind == KIND_LINEAR:
        return rhs / (1.0 + lam + a)
    R = -rhs if rhs < 0.0 else rhs
    if R == 0.0:
        return 0.0
    c = 1.0 + a
    lo = 0.0
    hi = R / c
    t = hi
    htol = 8e-16 * R
    for _ in range(200):
        tq = t ** q if t > 0.0 else 0.0
        ht = c * t + lam * tq - R
        if -htol <= ht <= htol:
            break
        if ht > 0.0:
            hi = t
        else:
            lo = t
        if hi - lo <= 4e-16 * hi:
            t = 0.5 * (lo + hi)
            break
        tn = -1.0
        if t > 0.0:
            dq = t ** (q - 1.0) if q != 1.0 else 1.0
            dh = c + lam * q * dq
            if dh > 0.0 and math.isfinite(dh):
                tn = t - ht / dh
        if lo < tn < hi:
            t = tn
        else:
            t = 0.5 * (lo + hi)
    return -t if rhs < 0.0 else t


@_maybe_jit
def residual_inf(indptr, indices, weights, mu, deg_dir, lam, g, kind, q, u):
    """Max-norm residual of psi(u) + (lam/mu)(deg_dir u - W u) - g."""
    n = g.shape[0]
    res = 0.0
    for i in range(n):
        acc = 0.0
        for jj in range(indptr[i], indptr[i + 1]):
            acc += weights[jj] * u[indices[jj]]
        ci = lam / mu[i]
        r = psi_builtin(kind, q, lam, u[i]) + ci * (deg_dir[i] * u[i] - acc) - g[i]
        if r < 0.0:
            r = -r
        if r > res:
            res = r
    return res


@_maybe_jit
def gs_solve(indptr, indices, weights, mu, deg_dir, lam, g, kind, q, u,
             tol_abs, max_sweeps, jacobi):
    """Nonlinear relaxation for the implicit step, in place on u.

    Gauss-Seidel by default (ascending node order, updates visible within
    the sweep); ``jacobi`` freezes the sweep input for simultaneous updates.
    Returns (sweeps, residual); sweeps = -1 flags nonconvergence within
    max_sweeps.
    """
    n = g.shape[0]
    res = math.inf
    for sweep in range(1, max_sweeps + 1):
        src = u.copy() if jacobi else u
        for i in range(n):
            acc = 0.0
            for jj in range(indptr[i], indptr[i + 1]):
                acc += weights[jj] * src[indices[jj]]
            ci = lam / mu[i]
            u[i] = solve_scalar(kind, q, lam, ci * deg_dir[i], g[i] + ci * acc)
        res = residual_inf(indptr, indices, weights, mu, deg_dir, lam, g,
                           kind, q, u)
        if res <= tol_abs:
            return sweep, res
    return -1, res
