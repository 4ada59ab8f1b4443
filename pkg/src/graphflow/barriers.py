"""Scalar barriers, extinction certificates and order propagation.

For the power shape f(u) = -u|u|^(q-1) with zero forcing, the flat initial
datum M evolves like the scalar ODE y' = -y^q, whose solution

    q < 1:  theta(t) = max(M^(1-q) - (1-q) t, 0)^(1/(1-q))
    q > 1:  theta(t) = (M^(1-q) + (q-1) t)^(-1/(q-1))

dominates every solution started below M.  The discrete analogue runs the
same implicit recursion the marcher uses (theta_k + lam_k theta_k^q =
theta_{k-1}), so domination holds step by step, not only in the limit.
For q < 1 the barrier hits zero at t = M^(1-q)/(1-q): finite-time
extinction.  For q > 1 it never vanishes, matching strict positivity
propagation on connected windows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DiscretizationError, GraphError, SolverError
from .evolution import Trajectory, implicit_euler_march

__all__ = [
    "Barrier",
    "barrier_value",
    "extinction_time",
    "discrete_barrier",
    "verify_barrier",
    "verify_signed_barrier",
    "positivity_check",
    "parabolic_compare",
]


def _check_exponent(q):
    if not q > 0 or q == 1.0:
        raise SolverError(
            f"barrier needs a power exponent q > 0, q != 1, got {q} "
            "(for q = 1 use the exponential decay bound)")


def barrier_value(q, M, t) -> float:
    """Closed-form scalar barrier theta(t) started at M >= 0."""
    _check_exponent(q)
    if M < 0:
        raise ValueError(f"barrier start must be nonnegative, got {M}")
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    if M == 0.0:
        return 0.0
    if q < 1:
        base = M ** (1.0 - q) - (1.0 - q) * t
        if base <= 0.0:
            return 0.0
        return base ** (1.0 / (1.0 - q))
    return (M ** (1.0 - q) + (q - 1.0) * t) ** (-1.0 / (q - 1.0))


def extinction_time(q, M) -> float:
    """T = M^(1-q) / (1-q), when the q < 1 barrier reaches zero."""
    if not 0 < q < 1:
        raise SolverError(f"finite-time extinction needs 0 < q < 1, got {q}")
    if M < 0:
        raise ValueError(f"barrier start must be nonnegative, got {M}")
    return M ** (1.0 - q) / (1.0 - q)


@dataclass
class Barrier:
    """Discrete barrier values theta_k over a partition."""

    q: float
    M: float
    times: np.ndarray
    theta: np.ndarray

    def consistency_residuals(self):
        """|theta_k + lam_k theta_k^q - theta_{k-1}| per step."""
        lam = np.diff(self.times)
        th = self.theta
        return np.abs(th[1:] + lam * th[1:] ** self.q - th[:-1])


def discrete_barrier(q, M, times) -> Barrier:
    """Run theta_k + lam_k theta_k^q = theta_{k-1} over a partition.

    ``times`` may be an EpsilonDiscretization or an increasing array
    starting at 0.  Each step inverts the same scalar map the marcher
    uses, so the recursion is solved to machine accuracy.
    """
    _check_exponent(q)
    if M < 0:
        raise ValueError(f"barrier start must be nonnegative, got {M}")
    ts = np.asarray(getattr(times, "times", times), dtype=np.float64)
    if ts.ndim != 1 or len(ts) < 2 or ts[0] != 0.0 or (np.diff(ts) <= 0).any():
        raise DiscretizationError("barrier needs a strictly increasing partition from 0")
    theta = np.empty(len(ts))
    theta[0] = M
    for k in range(1, len(ts)):
        lam = float(ts[k] - ts[k - 1])
        theta[k] = _kernels.solve_scalar(_kernels.KIND_POWER, float(q), lam,
                                         0.0, theta[k - 1])
    return Barrier(q=float(q), M=float(M), times=ts, theta=theta)


def _require_power_no_forcing(traj: Trajectory, barrier: Barrier):
    if traj.nl.kernel_kind != _kernels.KIND_POWER:
        raise SolverError(f"barrier domination needs the power shape, got {traj.nl.name}")
    if traj.nl.kernel_param != barrier.q:
        raise SolverError(
            f"barrier exponent {barrier.q} does not match trajectory "
            f"exponent {traj.nl.kernel_param}")
    if traj.disc.forcing is not None:
        raise SolverError("barrier domination needs zero forcing")
    if len(traj.times) != len(barrier.times) or \
            not np.array_equal(traj.times, barrier.times):
        raise DiscretizationError("barrier and trajectory partitions differ")


def verify_barrier(traj: Trajectory, barrier: Barrier, tol=1e-9) -> bool:
    """Per-step domination sup_x u_k(x) <= theta_k + tol for u0 in [0, M]."""
    _require_power_no_forcing(traj, barrier)
    u0 = traj.states[0]
    if (u0 < 0).any():
        raise SolverError("one-signed barrier check needs u0 >= 0; "
                          "use verify_signed_barrier for signed data")
    if u0.size and float(np.max(u0)) > barrier.M + 1e-12:
        raise SolverError(
            f"u0 exceeds the barrier start: max u0 = {np.max(u0)} > M = {barrier.M}")
    sups = traj.sup_values()
    return bool((sups <= barrier.theta + tol).all())


def verify_signed_barrier(traj: Trajectory, barrier: Barrier, tol=1e-9,
                          solver_tol=1e-10) -> bool:
    """Two-sided domination |u_k(x)| <= theta_k + tol for signed u0.

    Marches the positive part of u0 and the negated negative part as
    envelope trajectories, checks the solution stays sandwiched between
    them, and checks both envelopes against the barrier.  Needs
    ||u0||_inf <= M and zero forcing.
    """
    _require_power_no_forcing(traj, barrier)
    u0 = traj.states[0]
    if u0.size and float(np.max(np.abs(u0))) > barrier.M + 1e-12:
        raise SolverError(
            f"|u0| exceeds the barrier start: {np.max(np.abs(u0))} > M = {barrier.M}")
    up = implicit_euler_march(traj.sub, traj.nl, np.maximum(u0, 0.0),
                              traj.disc, tol=solver_tol)
    dn = implicit_euler_march(traj.sub, traj.nl, np.minimum(u0, 0.0),
                              traj.disc, tol=solver_tol)
    th = barrier.theta
    for k in range(len(traj.states)):
        u, hi, lo = traj.states[k], up.states[k], dn.states[k]
        if (u > hi + tol).any() or (u < lo - tol).any():
            return False
        if float(np.max(hi)) > th[k] + tol or float(np.min(lo)) < -th[k] - tol:
            return False
        if float(np.max(np.abs(u))) > th[k] + tol:
            return False
    return True


def _window_connected(sub):
    if sub.n == 0:
        return True
    seen = np.zeros(sub.n, dtype=bool)
    stack = [0]
    seen[0] = True
    count = 1
    while stack:
        i = stack.pop()
        for jj in range(sub.indptr[i], sub.indptr[i + 1]):
            j = int(sub.indices[jj])
            if not seen[j]:
                seen[j] = True
                count += 1
                stack.append(j)
    return count == sub.n


def positivity_check(traj: Trajectory, floor=1e-30) -> bool:
    """Strict positivity at every node and positive time for q > 1.

    Needs a connected window, the power shape with q > 1, zero forcing and
    u0 >= 0 not identically zero.  Checks min_x u_k(x) > floor for every
    k >= 1.
    """
    if traj.nl.kernel_kind != _kernels.KIND_POWER or traj.nl.kernel_param <= 1:
        raise SolverError(
            f"positivity propagation needs the power shape with q > 1, "
            f"got {traj.nl.name}")
    if traj.disc.forcing is not None:
        raise SolverError("positivity check needs zero forcing")
    u0 = traj.states[0]
    if (u0 < 0).any():
        raise SolverError("positivity check needs u0 >= 0")
    if not (u0 > 0).any():
        raise SolverError("positivity check needs u0 nonzero somewhere")
    if not _window_connected(traj.sub):
        raise GraphError("positivity propagation needs a connected window")
    for k in range(1, len(traj.states)):
        if float(np.min(traj.states[k])) <= floor:
            return False
    return True


def parabolic_compare(traj_u: Trajectory, traj_v: Trajectory, tol=1e-9) -> bool:
    """Pointwise order u_k <= v_k + tol at every grid time.

    The trajectories must share window and partition; marching ordered data
    (u0 <= v0, h <= g) with a common admissible nonlinearity preserves the
    order at every step.
    """
    if traj_u.nodes != traj_v.nodes:
        raise GraphError("trajectories live on different windows")
    if len(traj_u.times) != len(traj_v.times) or \
            not np.array_equal(traj_u.times, traj_v.times):
        raise DiscretizationError("trajectories use different partitions")
    for ku, kv in zip(traj_u.states, traj_v.states):
        if (ku > kv + tol).any():
            return False
    return True
