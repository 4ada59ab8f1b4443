"""Implicit-step resolvent solves, exhaustion limits and order diagnostics.

The core problem is, on a Dirichlet window Y of a host graph,

    u - lam * f(u) + lam * (L_dir u) = g

whose x-th equation couples psi(u(x)) = u(x) - lam f(u(x)) to the neighbor
average.  Monotonicity of psi makes each node equation uniquely solvable,
and nonlinear Gauss-Seidel sweeps converge for any lam admissible for the
class of f.  Solutions inherit the datum's sign and satisfy the a-priori
bound ||u||_p <= C ||g||_p with C = 1 in class F1 and (1 - lam L)^-1 in
class F2.

Infinite hosts are handled by solving on growing balls with zero boundary
conditions and passing to the limit (exhaustion); for sign-changing data
the positive and negative parts give monotone envelope iterates certifying
the limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ExhaustionError, GraphError, SolverError
from .graphs import (DirichletSubgraph, GridFunction, dirichlet_subgraph,
                     exhaustion, format_node, lp_norm)
from .nonlinearity import Nonlinearity, PsiMap, solve_increment_scalar

__all__ = [
    "ResolventProblem",
    "SolveReport",
    "solve_resolvent",
    "solve_stationary",
    "exhaust_resolvent",
    "accretivity_witness",
    "omega_contractivity_check",
    "compare_solutions",
    "as_window_values",
]

DEFAULT_TOL = 1e-10
DEFAULT_MAX_SWEEPS = 100_000
LAMBDA_FLOOR = 1e-30


def as_window_values(sub_or_nodes, g, graph=None):
    """Coerce a datum (array, mapping, callable, scalar, GridFunction) to values.

    GridFunctions are matched node-by-node and extended by zero; mappings
    default missing nodes to zero; callables are evaluated per node.
    """
    nodes = sub_or_nodes.nodes if isinstance(sub_or_nodes, DirichletSubgraph) else list(sub_or_nodes)
    if isinstance(g, GridFunction):
        idx = g.index
        return np.array([g.values[idx[x]] if x in idx else 0.0 for x in nodes])
    if isinstance(g, dict):
        return np.array([float(g.get(x, 0.0)) for x in nodes])
    if callable(g):
        return np.array([float(g(x)) for x in nodes])
    if np.isscalar(g):
        return np.full(len(nodes), float(g))
    arr = np.asarray(g, dtype=np.float64)
    if arr.shape != (len(nodes),):
        raise GraphError(f"datum has shape {arr.shape}, window has {len(nodes)} nodes")
    return arr.copy()


@dataclass
class ResolventProblem:
    """One implicit step (id + lam (F + L_dir)) u = g on a Dirichlet window."""

    sub: DirichletSubgraph
    nl: Nonlinearity
    lam: float
    g: np.ndarray

    def __post_init__(self):
        self.g = as_window_values(self.sub, self.g)
        if self.lam < 0:
            raise SolverError(f"lam must be nonnegative, got {self.lam}")
        if self.lam >= LAMBDA_FLOOR and not self.nl.admissible_lambda(self.lam):
            raise SolverError(
                f"lam = {self.lam} not admissible for {self.nl.name} "
                f"(requires lam < {self.nl.max_lambda():g})")


@dataclass
class SolveReport:
    """Solution of a resolvent problem with convergence diagnostics."""

    u: GridFunction
    sweeps: int
    residual_norm: float
    norm_bound_ok: bool

    def to_json_dict(self):
        return {
            "u": {format_node(x): float(v)
                  for x, v in zip(self.u.nodes, self.u.values)},
            "sweeps": self.sweeps,
            "residual_norm": self.residual_norm,
            "norm_bound_ok": self.norm_bound_ok,
        }


def contraction_constant(nl, lam):
    """A-priori bound constant: 1 for F1, (1 - lam L)^-1 for F2."""
    if nl.cls == "F1":
        return 1.0
    return 1.0 / (1.0 - lam * nl.L)


def _norm_bound_ok(sub, nl, lam, g, u, slack=1e-9):
    C = contraction_constant(nl, lam)
    gf_u = sub.function(u)
    gf_g = sub.function(g)
    for p in (1.0, 2.0, math.inf):
        if lp_norm(gf_u, p) > C * lp_norm(gf_g, p) + slack:
            return False
    return True


def solve_resolvent(prob: ResolventProblem, tol=DEFAULT_TOL,
                    max_sweeps=DEFAULT_MAX_SWEEPS, method="gauss-seidel",
                    u0=None) -> SolveReport:
    """Solve one implicit step by nonlinear relaxation.

    Sweeps run in ascending node order (``method="jacobi"`` freezes each
    sweep's input instead) until the max-norm residual drops below
    tol * max(1, ||g||_inf).  ``u0`` warm-starts the iteration.  Raises
    SolverError when max_sweeps is exhausted, reporting the residual.
    """
    if method not in ("gauss-seidel", "jacobi"):
        raise SolverError(f"unknown method {method!r}")
    sub, nl, lam, g = prob.sub, prob.nl, prob.lam, prob.g
    if lam < LAMBDA_FLOOR:
        # identity limit: no diffusion happens below this scale
        return SolveReport(u=sub.function(g.copy()), sweeps=0, residual_norm=0.0,
                           norm_bound_ok=_norm_bound_ok(sub, nl, lam, g, g))
    u = np.zeros(sub.n) if u0 is None else as_window_values(sub, u0)
    tol_abs = tol * max(1.0, float(np.max(np.abs(g))) if sub.n else 1.0)
    jacobi = method == "jacobi"
    if nl.kernel_kind >= 0:
        sweeps, res = _kernels.gs_solve(
            sub.indptr, sub.indices, sub.weights, sub.mu, sub.deg_dir,
            float(lam), g, nl.kernel_kind, nl.kernel_param, u,
            float(tol_abs), int(max_sweeps), jacobi)
    else:
        sweeps, res = _gs_solve_generic(sub, nl, float(lam), g, u, tol_abs,
                                        int(max_sweeps), jacobi, tol)
    if sweeps < 0:
        raise SolverError(
            f"relaxation did not reach tol {tol_abs:g} within {max_sweeps} sweeps "
            f"(residual {res:g})")
    return SolveReport(u=sub.function(u), sweeps=int(sweeps),
                       residual_norm=float(res),
                       norm_bound_ok=_norm_bound_ok(sub, nl, lam, g, u))


def _gs_solve_generic(sub, nl, lam, g, u, tol_abs, max_sweeps, jacobi, tol):
    """Python relaxation for nonlinearities without a kernel code.

    Mirrors the compiled sweep exactly; per-node equations go through the
    class-bracketed scalar solver.
    """
    indptr, indices, weights = sub.indptr, sub.indices, sub.weights
    mu, deg_dir = sub.mu, sub.deg_dir
    n = sub.n
    scalar_tol = max(1e-15, tol * 1e-3)
    psi = PsiMap(nl, lam)
    res = math.inf
    for sweep in range(1, max_sweeps + 1):
        src = u.copy() if jacobi else u
        for i in range(n):
            acc = 0.0
            for jj in range(indptr[i], indptr[i + 1]):
                acc += weights[jj] * src[indices[jj]]
            ci = lam / mu[i]
            u[i] = solve_increment_scalar(nl, lam, ci * deg_dir[i],
                                          g[i] + ci * acc, tol=scalar_tol)
        res = 0.0
        Wu = sub.adjacency.dot(u)
        for i in range(n):
            r = psi(u[i]) + (lam / mu[i]) * (deg_dir[i] * u[i] - Wu[i]) - g[i]
            res = max(res, abs(r))
        if res <= tol_abs:
            return sweep, res
    return -1, res


def solve_stationary(host, nl, alpha, g, root=None, depth_max=40,
                     tol=DEFAULT_TOL, p=2.0, cauchy_tol=1e-8):
    """Solve L u + alpha u = f(u) + alpha g via the resolvent at lam = 1/alpha.

    alpha must be positive for class F1 and exceed the Lipschitz constant
    for class F2.  Finite hosts are solved in one shot on the whole node
    set; infinite hosts are exhausted from ``root``.  Returns (GridFunction,
    trace) where the trace records the exhaustion (empty for finite hosts).
    """
    if nl.cls == "F1":
        if not alpha > 0:
            raise SolverError(f"alpha must be positive, got {alpha}")
    else:
        if not alpha > nl.L:
            raise SolverError(
                f"alpha must exceed the Lipschitz constant {nl.L}, got {alpha}")
    lam = 1.0 / alpha
    if host.is_finite:
        sub = dirichlet_subgraph(host, host.nodes)
        rep = solve_resolvent(ResolventProblem(sub, nl, lam, as_window_values(sub, g)), tol=tol)
        return rep.u, []
    if root is None:
        raise ExhaustionError("infinite host needs a root node for exhaustion")
    return exhaust_resolvent(host, nl, lam, g, root, depth_max=depth_max,
                             tol=cauchy_tol, p=p, solver_tol=tol)


def exhaust_resolvent(host, nl, lam, g, root, depth_max=40, tol=1e-8, p=2.0,
                      solver_tol=DEFAULT_TOL):
    """Resolvent on an infinite host by zero-extended solves on growing balls.

    For one-signed data the ball solutions are monotone in the window; for
    sign-changing data the positive and negative parts are solved alongside
    and certify the limit by sandwiching.  Convergence is declared when
    successive zero-extended solutions differ by less than tol in l^p, or
    when the exhaustion saturates (finite component: the last solve is
    exact).  Returns (GridFunction, trace).
    """
    exh = exhaustion(host, root, depth_max)
    prev = None          # (window, values) of previous depth
    prev_env = None      # same for the +/- envelope solves
    trace = []
    mixed_seen = False
    for k, window in enumerate(exh.windows):
        sub = dirichlet_subgraph(host, window)
        gvals = as_window_values(sub, g)
        warm = _extend_values(prev, window) if prev is not None else None
        rep = solve_resolvent(ResolventProblem(sub, nl, lam, gvals),
                              tol=solver_tol, u0=warm)
        u = rep.u.values
        entry = {"depth": k + 1, "size": sub.n,
                 "norm": lp_norm(rep.u, p), "sweeps": rep.sweeps}
        mixed = bool((gvals > 0).any() and (gvals < 0).any())
        mixed_seen = mixed_seen or mixed
        if mixed_seen:
            env = _envelope_solves(sub, nl, lam, gvals, prev_env, solver_tol)
            lo_vals, hi_vals = env
            if (u < lo_vals - 1e-9).any() or (u > hi_vals + 1e-9).any():
                raise SolverError(
                    "envelope certificate violated: solution escapes the "
                    "positive/negative part sandwich")
            prev_env = (window, lo_vals, hi_vals)
            entry["envelope_gap"] = float(np.max(hi_vals - lo_vals))
        if prev is not None:
            ext = _extend_values(prev, window)
            diff = lp_norm(sub.function(u - ext), p)
            entry["diff"] = float(diff)
            trace.append(entry)
            if diff <= tol:
                return rep.u, trace
        else:
            trace.append(entry)
        prev = (window, u)
    if exh.saturated:
        # the last ball is the whole reachable component; nothing was cut off
        trace[-1]["saturated"] = True
        return sub.function(prev[1]), trace
    last = [t.get("diff") for t in trace if "diff" in t][-2:]
    raise ExhaustionError(
        f"exhaustion did not converge within depth {depth_max}: "
        f"last successive differences {last}")


def _extend_values(prev, window):
    """Zero-extend previous ball values onto a larger ball (prefix aligned)."""
    pwin, pvals = prev
    out = np.zeros(len(window))
    m = len(pwin)
    # balls from one BFS share discovery order, so the old window is a prefix
    out[:m] = pvals
    return out


def _envelope_solves(sub, nl, lam, gvals, prev_env, solver_tol):
    gplus = np.maximum(gvals, 0.0)
    gminus = np.minimum(gvals, 0.0)
    warm_lo = warm_hi = None
    if prev_env is not None:
        pwin, lo_p, hi_p = prev_env
        warm_lo = _extend_values((pwin, lo_p), sub.nodes)
        warm_hi = _extend_values((pwin, hi_p), sub.nodes)
    hi = solve_resolvent(ResolventProblem(sub, nl, lam, gplus),
                         tol=solver_tol, u0=warm_hi).u.values
    lo = solve_resolvent(ResolventProblem(sub, nl, lam, gminus),
                         tol=solver_tol, u0=warm_lo).u.values
    return lo, hi


# -- order and accretivity diagnostics --------------------------------------

def _operator_apply(graph, nl, u: GridFunction):
    """(F + L) u on a finite graph, F(u) = -f(u)."""
    sub = dirichlet_subgraph(graph, u.nodes)
    if (sub.b_dir != 0).any():
        raise GraphError("operator pairing needs the window to be the whole graph")
    lap = sub.apply(u.values)
    return np.array([-nl.f(v) for v in u.values]) + lap


def accretivity_witness(graph, nl, u: GridFunction, v: GridFunction, p,
                        shift=None) -> float:
    """Duality pairing certifying monotonicity of F + L on a finite graph.

    Computes sum_x z(x) |k(x)|^(p-1) sgn(k(x)) mu(x) with k = u - v and
    z = (F+L)u - (F+L)v (for p = 1 nodes with k = 0 contribute |z| mu).
    ``shift`` adds shift * k to z; it defaults to 0 for class F1 and to the
    Lipschitz constant for class F2, making the value nonnegative for
    admissible nonlinearities.
    """
    if not (p == 1 or p > 1):
        raise ValueError(f"p must be >= 1, got {p}")
    if u.nodes != v.nodes:
        raise GraphError("u and v must share the window")
    if shift is None:
        shift = nl.L if nl.cls == "F2" else 0.0
    z = _operator_apply(graph, nl, u) - _operator_apply(graph, nl, v)
    k = u.values - v.values
    z = z + shift * k
    mu = u.mu_values()
    if p == 1:
        zero = k == 0.0
        val = np.sum(np.abs(z[zero]) * mu[zero])
        val += np.sum(z[~zero] * np.sign(k[~zero]) * mu[~zero])
        return float(val)
    return float(np.sum(z * np.abs(k) ** (p - 1.0) * np.sign(k) * mu))


def omega_contractivity_check(graph, nl, u: GridFunction, v: GridFunction,
                              lam, p, tol=1e-12) -> bool:
    """Check ||k + lam z||_p >= (1 - omega lam) ||k||_p, omega = L (0 for F1).

    Requires 0 <= lam * omega < 1.
    """
    omega = nl.L if nl.L is not None else 0.0
    if nl.cls == "F1":
        omega = 0.0
    if lam < 0 or lam * omega >= 1:
        raise SolverError(f"need 0 <= lam*omega < 1, got lam={lam}, omega={omega}")
    z = _operator_apply(graph, nl, u) - _operator_apply(graph, nl, v)
    k = u.values - v.values
    lhs = lp_norm(GridFunction(graph, u.nodes, k + lam * z), p)
    rhs = (1.0 - omega * lam) * lp_norm(GridFunction(graph, u.nodes, k), p)
    return lhs >= rhs - tol


def compare_solutions(sub, nl, lam, g1, g2, tol=1e-9,
                      solver_tol=1e-11) -> bool:
    """Solve with ordered data g1 >= g2 and check u1 >= u2 pointwise.

    Raises GraphError if the data are not actually ordered.
    """
    a1 = as_window_values(sub, g1)
    a2 = as_window_values(sub, g2)
    if (a1 < a2 - 1e-15).any():
        raise GraphError("data are not ordered: g1 must dominate g2")
    u1 = solve_resolvent(ResolventProblem(sub, nl, lam, a1), tol=solver_tol).u
    u2 = solve_resolvent(ResolventProblem(sub, nl, lam, a2), tol=solver_tol).u
    return bool((u1.values >= u2.values - tol).all())
