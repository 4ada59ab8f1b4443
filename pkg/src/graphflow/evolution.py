"""Implicit Euler marching results and their mild-solution limits.

A time horizon [0, T] is cut by a partition with steps at most eps; the
forcing is sampled at right endpoints.  Each step solves one resolvent
problem

    (id + lam_k (F + L_dir)) u_k = u_{k-1} + lam_k h_k

so the piecewise-constant interpolant (value u_k on (t_{k-1}, t_k]) is an
eps-approximate solution.  Mild solutions are the uniform limits of these
under eps -> 0 and, on infinite hosts, exhaustion depth -> infinity; the
limit is approached here by alternately halving eps and growing the ball
until trajectories stop moving at fixed sample times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import _kernels
from .errors import DiscretizationError, GraphError, SolverError
from .graphs import GridFunction, dirichlet_subgraph, exhaustion, lp_norm
from .resolvent import ResolventProblem, as_window_values, solve_resolvent

__all__ = [
    "EpsilonDiscretization",
    "Trajectory",
    "make_uniform_discretization",
    "implicit_euler_march",
    "mild_solve",
    "contraction_check",
    "decay_check",
    "semigroup_linear_oracle",
]


@dataclass
class EpsilonDiscretization:
    """Partition of [0, T] with steps bounded by eps, plus sampled forcing.

    ``forcing`` is either None (h = 0) or a callable ``h(t, node)``;
    it is sampled at the right endpoint of each step.  The partition must
    start at 0, increase strictly, and keep every step at most eps.
    """

    times: np.ndarray
    eps: float
    forcing: object = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        if self.times.ndim != 1 or len(self.times) < 2:
            raise DiscretizationError("partition needs at least two time points")
        if self.times[0] != 0.0:
            raise DiscretizationError(f"partition must start at 0, got {self.times[0]}")
        steps = np.diff(self.times)
        if (steps <= 0).any():
            raise DiscretizationError("partition times must increase strictly")
        # cushion covers rounding of the time points themselves (ulp-level)
        slack = self.eps * 1e-12 + 8.0 * np.spacing(float(self.times[-1]))
        if (steps > self.eps + slack).any():
            raise DiscretizationError(
                f"partition has a step of {steps.max():g} above eps = {self.eps:g}")

    @property
    def n_steps(self):
        return len(self.times) - 1

    @property
    def horizon(self):
        return float(self.times[-1])

    def step(self, k):
        """lam_k = t_k - t_{k-1} for k = 1..n_steps."""
        return float(self.times[k] - self.times[k - 1])

    def sample_forcing(self, k, nodes):
        """Forcing values at t_k on a window (zeros when h is None)."""
        if self.forcing is None:
            return np.zeros(len(nodes))
        t = float(self.times[k])
        return np.array([float(self.forcing(t, x)) for x in nodes])

    def segment_index(self, t):
        """k such that t lies in (t_{k-1}, t_k]; 0 at t = 0."""
        if t < 0 or t > self.horizon * (1 + 1e-12):
            raise DiscretizationError(f"time {t} outside [0, {self.horizon}]")
        if t <= 0:
            return 0
        return int(np.searchsorted(self.times, t, side="left"))


def make_uniform_discretization(T, n_steps, forcing=None, eps=None):
    """Uniform partition of [0, T] into n_steps steps.

    ``eps`` defaults to the step size T/n_steps; passing a larger declared
    eps is allowed (the partition is then finer than required).
    """
    if not T > 0:
        raise DiscretizationError(f"horizon must be positive, got {T}")
    if n_steps < 1:
        raise DiscretizationError(f"need at least one step, got {n_steps}")
    times = np.linspace(0.0, float(T), int(n_steps) + 1)
    h = float(T) / int(n_steps)
    return EpsilonDiscretization(times=times, eps=float(eps) if eps else h,
                                 forcing=forcing)


def discretization_for_eps(T, eps, forcing=None):
    """Uniform partition with the fewest steps of size at most eps."""
    if not eps > 0:
        raise DiscretizationError(f"eps must be positive, got {eps}")
    n = max(1, int(math.ceil(float(T) / float(eps) - 1e-12)))
    return make_uniform_discretization(T, n, forcing=forcing, eps=eps)


@dataclass
class Trajectory:
    """States of an implicit Euler march, indexed by the partition times.

    ``states[k]`` is the value array at times[k] on the window; the
    interpolant is right-continuous piecewise constant (value u_k on
    (t_{k-1}, t_k]).
    """

    sub: object
    nl: object
    disc: EpsilonDiscretization
    states: list
    sweeps: list = field(default_factory=list)

    @property
    def nodes(self):
        return self.sub.nodes

    @property
    def times(self):
        return self.disc.times

    def state(self, k) -> GridFunction:
        return GridFunction(self.sub.host, self.sub.nodes, self.states[k])

    def value_at(self, t) -> GridFunction:
        return self.state(self.disc.segment_index(t))

    def norms(self, p):
        return np.array([lp_norm(self.state(k), p)
                         for k in range(len(self.states))])

    def sup_values(self):
        return np.array([float(np.max(s)) for s in self.states])

    def abs_sup_values(self):
        return np.array([float(np.max(np.abs(s))) for s in self.states])


def implicit_euler_march(sub, nl, u0, disc: EpsilonDiscretization,
                         tol=1e-12, max_sweeps=100_000,
                         method="gauss-seidel") -> Trajectory:
    """March the implicit scheme over the whole partition.

    Every step is solved to the resolvent tolerance, warm-started at the
    previous state.  The default tolerance is tighter than a single solve
    needs because per-step stopping errors accumulate over the partition
    (n steps at residual tol can drift the state by about n times tol).
    For class F2 all steps must stay below 1/L.
    """
    u = as_window_values(sub, u0)
    if nl.cls == "F2":
        max_step = float(np.max(np.diff(disc.times)))
        if max_step >= 1.0 / nl.L:
            raise DiscretizationError(
                f"step {max_step:g} not admissible for {nl.name}: "
                f"needs steps below {1.0 / nl.L:g}")
    states = [u.copy()]
    sweeps = []
    for k in range(1, disc.n_steps + 1):
        lam = disc.step(k)
        g = u + lam * disc.sample_forcing(k, sub.nodes)
        rep = solve_resolvent(ResolventProblem(sub, nl, lam, g),
                              tol=tol, max_sweeps=max_sweeps, method=method,
                              u0=u)
        u = rep.u.values
        states.append(u.copy())
        sweeps.append(rep.sweeps)
    return Trajectory(sub=sub, nl=nl, disc=disc, states=states, sweeps=sweeps)


_SAMPLE_FRACTIONS = (0.0, 0.25, 0.5, 0.75, 1.0)


def mild_solve(host, nl, u0, forcing, T, eps_target, depth_max=40,
               tol=1e-6, p=2.0, root=None, solver_tol=1e-12):
    """Approach the mild solution by joint refinement in eps and depth.

    Starting from a coarse partition (and, on infinite hosts, a small ball
    around ``root``), eps-halvings and depth increments alternate; the
    refinement is accepted when the most recent change of each kind moved
    the trajectory by less than tol in l^p at the sample times {0, T/4,
    T/2, 3T/4, T}.  eps never goes below eps_target and depth never above
    depth_max; exhausting either budget raises DiscretizationError with the
    gap sequence.  Returns (trajectory, refinement_trace).
    """
    if not T > 0:
        raise DiscretizationError(f"horizon must be positive, got {T}")
    if not eps_target > 0:
        raise DiscretizationError(f"eps_target must be positive, got {eps_target}")
    finite = host.is_finite
    if not finite and root is None:
        raise DiscretizationError("infinite host needs a root node")

    windows = {}

    def window_for(depth):
        if finite:
            return host.nodes, True
        if depth not in windows:
            exh = exhaustion(host, root, depth)
            windows[depth] = (exh.windows[-1], exh.saturated)
        return windows[depth]

    def march(depth, eps):
        nodes, saturated = window_for(depth)
        sub = dirichlet_subgraph(host, nodes)
        disc = discretization_for_eps(T, eps, forcing=forcing)
        traj = implicit_euler_march(sub, nl, as_window_values(sub, u0), disc,
                                    tol=solver_tol)
        return traj, saturated

    eps = max(T / 4.0, eps_target)
    cap = nl.max_lambda()
    if math.isfinite(cap):
        if eps_target >= cap:
            raise DiscretizationError(
                f"eps_target must stay below 1/L = {cap:g}, got {eps_target}")
        eps = max(eps_target, min(eps, cap / 2.0))
    depth = 1 if finite else 2
    traj, saturated = march(depth, eps)
    trace = [{"kind": "initial", "eps": eps, "depth": depth,
              "steps": traj.disc.n_steps, "window": len(traj.nodes)}]
    eps_gap = math.inf
    depth_gap = 0.0 if saturated else math.inf
    for _ in range(200):
        if eps_gap < tol and depth_gap < tol:
            return traj, trace
        if eps_gap >= tol:
            if eps / 2.0 < eps_target * (1 - 1e-12):
                raise DiscretizationError(
                    f"eps budget exhausted at eps = {eps:g} with gap {eps_gap:g} "
                    f"> tol {tol:g}; trace: {_gap_seq(trace)}")
            eps /= 2.0
            new, saturated = march(depth, eps)
            eps_gap = _trajectory_gap(traj, new, p, T)
            traj = new
            trace.append({"kind": "eps", "eps": eps, "depth": depth,
                          "gap": eps_gap, "steps": new.disc.n_steps})
            continue
        if depth_gap >= tol:
            if saturated:
                depth_gap = 0.0
                trace.append({"kind": "depth", "eps": eps, "depth": depth,
                              "gap": 0.0, "saturated": True})
                continue
            if depth + 1 > depth_max:
                raise DiscretizationError(
                    f"depth budget exhausted at depth = {depth} with gap "
                    f"{depth_gap:g} > tol {tol:g}; trace: {_gap_seq(trace)}")
            depth += 1
            new, saturated = march(depth, eps)
            depth_gap = _trajectory_gap(traj, new, p, T)
            traj = new
            trace.append({"kind": "depth", "eps": eps, "depth": depth,
                          "gap": depth_gap, "window": len(new.nodes)})
    raise DiscretizationError("refinement did not settle within 200 rounds")


def _gap_seq(trace):
    return [round(entry["gap"], 12) for entry in trace if "gap" in entry]


def _trajectory_gap(a: Trajectory, b: Trajectory, p, T):
    """Largest l^p distance at the sample times, on the union window."""
    gap = 0.0
    for frac in _SAMPLE_FRACTIONS:
        t = frac * T
        ua = a.value_at(t)
        ub = b.value_at(t)
        big = ub.nodes if len(ub.nodes) >= len(ua.nodes) else ua.nodes
        diff = ua.zero_extend(big).values - ub.zero_extend(big).values
        gap = max(gap, lp_norm(GridFunction(a.sub.host, big, diff), p))
    return gap


def _shared_grid(traj_u, traj_v):
    if traj_u.nodes != traj_v.nodes:
        raise GraphError("trajectories live on different windows")
    if len(traj_u.times) != len(traj_v.times) or \
            not np.allclose(traj_u.times, traj_v.times, rtol=0, atol=1e-14):
        raise DiscretizationError("trajectories use different partitions")


def contraction_check(traj_u, traj_v, p, slack, forcing_u=None,
                      forcing_v=None) -> bool:
    """Check the two-trajectory stability bound on a shared grid.

    For all grid times t1 <= t2:

        ||u(t2) - v(t2)||_p <= ||u(t1) - v(t1)||_p
                               + integral_t1^t2 ||h_u - h_v||_p ds + slack

    with the integral evaluated by the trapezoid rule on the grid.  The
    forcings default to the ones the trajectories were marched with.
    """
    _shared_grid(traj_u, traj_v)
    if forcing_u is None:
        forcing_u = traj_u.disc.forcing
    if forcing_v is None:
        forcing_v = traj_v.disc.forcing
    host = traj_u.sub.host
    nodes = traj_u.nodes
    times = traj_u.times
    n = len(times)
    d = np.array([lp_norm(GridFunction(host, nodes,
                                       traj_u.states[k] - traj_v.states[k]), p)
                  for k in range(n)])
    rho = np.zeros(n)
    if forcing_u is not None or forcing_v is not None:
        for k, t in enumerate(times):
            hu = _eval_forcing(forcing_u, t, nodes)
            hv = _eval_forcing(forcing_v, t, nodes)
            rho[k] = lp_norm(GridFunction(host, nodes, hu - hv), p)
    integral = np.concatenate([[0.0], np.cumsum(np.diff(times) * (rho[1:] + rho[:-1]) / 2.0)])
    best = math.inf
    for k in range(n):
        best = min(best, d[k] - integral[k])
        if d[k] - integral[k] > best + slack:
            return False
    return True


def _eval_forcing(forcing, t, nodes):
    if forcing is None:
        return np.zeros(len(nodes))
    return np.array([float(forcing(float(t), x)) for x in nodes])


def decay_check(traj: Trajectory, p, slack=None) -> bool:
    """Exponential decay bound for the linear shape f(u) = -u.

    Checks, at every grid time,

        ||u(t)||_p <= e^{-t} ||u0||_p
                      + integral_0^t e^{-(t-s)} ||h(s)||_p ds + slack

    with the integral accumulated by the trapezoid rule.  slack defaults to
    5 * eps, the first-order consistency budget of the scheme.
    """
    if traj.nl.kernel_kind != _kernels.KIND_LINEAR:
        raise SolverError(f"decay bound needs the linear shape, got {traj.nl.name}")
    if slack is None:
        slack = 5.0 * traj.disc.eps
    host = traj.sub.host
    nodes = traj.nodes
    times = traj.times
    norms = traj.norms(p)
    rho = np.array([lp_norm(GridFunction(host, nodes,
                                         _eval_forcing(traj.disc.forcing, t, nodes)), p)
                    for t in times])
    integral = 0.0
    for k in range(1, len(times)):
        lam = times[k] - times[k - 1]
        decay = math.exp(-lam)
        integral = decay * integral + lam * (decay * rho[k - 1] + rho[k]) / 2.0
        bound = math.exp(-times[k]) * norms[0] + integral
        if norms[k] > bound + slack:
            return False
    return True


def semigroup_linear_oracle(sub, u0, t) -> GridFunction:
    """Dense matrix-exponential reference for the linear flow.

    Evaluates exp(-t (L_dir + id)) u0 by scaling-and-squaring on the dense
    operator matrix.  Restricted to windows of at most 64 nodes; this is a
    test oracle, not a solver path.
    """
    if sub.n > 64:
        raise GraphError(f"oracle window limited to 64 nodes, got {sub.n}")
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    u0 = as_window_values(sub, u0)
    M = sub.laplacian_matrix() + np.eye(sub.n)
    return sub.function(scipy.linalg.expm(-float(t) * M) @ u0)
