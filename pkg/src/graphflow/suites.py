"""Randomized verification sweeps behind the ``verify`` CLI command.

Each suite draws instances from a seeded generator, evaluates one of the
structural guarantees, and returns a report dict with the instances
checked, the worst margin seen, and any failures.  The seed comes from
``GRAPHFLOW_SEED`` (or a fixed default), so runs are reproducible.
"""

from __future__ import annotations

import math

import numpy as np

from . import nonlinearity as nlmod
from .barriers import (discrete_barrier, positivity_check, verify_barrier,
                       verify_signed_barrier)
from .evolution import (contraction_check, decay_check, discretization_for_eps,
                        implicit_euler_march, semigroup_linear_oracle)
from .generators import cycle_graph, path_graph, random_connected_graph
from .graphs import GridFunction, WeightedGraph, dirichlet_subgraph, lp_norm
from .resolvent import (ResolventProblem, accretivity_witness,
                        compare_solutions, contraction_constant,
                        omega_contractivity_check, solve_resolvent)

__all__ = [
    "accretivity_suite",
    "comparison_suite",
    "contraction_suite",
    "barrier_suite",
    "decay_suite",
    "SUITES",
]

_F1_SHAPES = (nlmod.zero, nlmod.linear,
              lambda: nlmod.power_absorption(0.5),
              lambda: nlmod.power_absorption(2.0),
              lambda: nlmod.power_absorption(3.0))


def _f2_shapes():
    return (nlmod.from_spec("lipschitz:sin:L=1"),
            nlmod.from_spec("lipschitz:arctan:L=1"),
            nlmod.linear())


def accretivity_suite(count=200, seed=0):
    """Pairing nonnegativity (F1) and the shifted lower bound (F2)."""
    rng = np.random.default_rng(seed)
    failures = []
    worst = math.inf
    checked = 0
    f1 = [mk() for mk in _F1_SHAPES]
    f2 = _f2_shapes()
    for i in range(count):
        graph = random_connected_graph(rng, n_max=12)
        n = graph.num_nodes()
        u = GridFunction(graph, graph.nodes, rng.normal(0.0, 1.0, n))
        v = GridFunction(graph, graph.nodes, rng.normal(0.0, 1.0, n))
        nl = f1[i % len(f1)]
        for p in (1, 2, 3):
            checked += 1
            val = accretivity_witness(graph, nl, u, v, p)
            worst = min(worst, val)
            if val < -1e-12:
                failures.append({"instance": i, "nl": nl.name, "p": p,
                                 "pairing": val})
        nl2 = f2[i % len(f2)]
        for frac in (0.1, 0.5, 0.9):
            lam = frac / nl2.L
            checked += 1
            ok = omega_contractivity_check(graph, nl2, u, v, lam, p=2)
            if not ok:
                failures.append({"instance": i, "nl": nl2.name, "lam": lam,
                                 "check": "omega"})
    return {"suite": "accretivity", "checked": checked,
            "worst_pairing": worst, "failures": failures,
            "ok": not failures}


def comparison_suite(count=100, seed=0):
    """Resolvent order preservation and the a-priori norm bound."""
    rng = np.random.default_rng(seed)
    failures = []
    checked = 0
    f1 = [mk() for mk in _F1_SHAPES]
    f2 = _f2_shapes()
    for i in range(count):
        graph = random_connected_graph(rng, n_max=12)
        sub = dirichlet_subgraph(graph, graph.nodes)
        n = sub.n
        use_f2 = i % 2 == 1
        nl = f2[i % len(f2)] if use_f2 else f1[i % len(f1)]
        lam = float(rng.uniform(0.05, 0.9)) * (1.0 / nl.L if use_f2 else 2.0)
        g2 = rng.normal(0.0, 1.0, n)
        g1 = g2 + np.abs(rng.normal(0.0, 0.5, n))
        checked += 1
        if not compare_solutions(sub, nl, lam, g1, g2, tol=1e-9):
            failures.append({"instance": i, "nl": nl.name, "lam": lam,
                             "check": "order"})
        rep = solve_resolvent(ResolventProblem(sub, nl, lam, g1), tol=1e-11)
        C = contraction_constant(nl, lam)
        for p in (1.0, 2.0, math.inf):
            checked += 1
            nu = lp_norm(rep.u, p)
            ng = lp_norm(sub.function(g1), p)
            if nu > C * ng + 1e-9:
                failures.append({"instance": i, "nl": nl.name, "p": p,
                                 "norm": nu, "bound": C * ng})
    return {"suite": "comparison", "checked": checked, "failures": failures,
            "ok": not failures}


def contraction_suite(seed=0, eps_values=(1e-1, 1e-2, 1e-3), T=1.0):
    """Trajectory stability under data and forcing perturbations."""
    rng = np.random.default_rng(seed)
    graph = path_graph(10)
    sub = dirichlet_subgraph(graph, graph.nodes)
    nl = nlmod.power_absorption(2.0)
    n = sub.n
    u0 = rng.uniform(0.0, 1.0, n)
    v0 = rng.uniform(-0.5, 1.0, n)

    def hu(t, node):
        return 0.3 * math.sin(t) * (1.0 + 0.1 * float(node))

    failures = []
    checked = 0
    results = []
    for eps in eps_values:
        disc_u = discretization_for_eps(T, eps, forcing=hu)
        disc_v = discretization_for_eps(T, eps, forcing=None)
        tu = implicit_euler_march(sub, nl, u0, disc_u)
        tv = implicit_euler_march(sub, nl, v0, disc_v)
        checked += 1
        ok = contraction_check(tu, tv, p=2, slack=5 * eps)
        results.append({"eps": eps, "ok": ok})
        if not ok:
            failures.append({"eps": eps, "check": "forced"})
        # equal forcings: the distance must be nonincreasing up to slack
        tv2 = implicit_euler_march(sub, nl, v0, disc_u)
        d = [lp_norm(GridFunction(graph, sub.nodes, a - b), 2)
             for a, b in zip(tu.states, tv2.states)]
        checked += 1
        if any(d[k + 1] > d[k] + 5 * eps for k in range(len(d) - 1)):
            failures.append({"eps": eps, "check": "monotone"})
    return {"suite": "contraction", "checked": checked, "results": results,
            "failures": failures, "ok": not failures}


def barrier_suite(seed=0, eps=1e-2):
    """Extinction barriers (q < 1), signed data, and positivity (q > 1)."""
    rng = np.random.default_rng(seed)
    failures = []
    checked = 0
    # flat datum on a path: supremum rides the barrier to extinction
    graph = path_graph(50)
    sub = dirichlet_subgraph(graph, graph.nodes)
    q, M = 0.5, 1.0
    horizon = 2.05
    disc = discretization_for_eps(horizon, eps)
    traj = implicit_euler_march(sub, nlmod.power_absorption(q),
                                np.full(sub.n, M), disc)
    bar = discrete_barrier(q, M, disc)
    checked += 1
    if not verify_barrier(traj, bar, tol=1e-9):
        failures.append({"check": "extinction_path"})
    # signed datum on a cycle
    graph_c = cycle_graph(10)
    sub_c = dirichlet_subgraph(graph_c, graph_c.nodes)
    u0 = rng.uniform(-1.0, 1.0, sub_c.n)
    M_c = float(np.max(np.abs(u0)))
    disc_c = discretization_for_eps(1.0, eps)
    traj_c = implicit_euler_march(sub_c, nlmod.power_absorption(q), u0, disc_c)
    bar_c = discrete_barrier(q, M_c, disc_c)
    checked += 1
    if not verify_signed_barrier(traj_c, bar_c, tol=1e-9):
        failures.append({"check": "signed_cycle"})
    # strong absorption: positivity propagation from an indicator
    graph_p = path_graph(10)
    sub_p = dirichlet_subgraph(graph_p, graph_p.nodes)
    disc_p = discretization_for_eps(1.0, eps)
    traj_p = implicit_euler_march(sub_p, nlmod.power_absorption(2.0),
                                  GridFunction.indicator(graph_p, graph_p.nodes, 0),
                                  disc_p)
    checked += 2
    if not positivity_check(traj_p, floor=1e-30):
        failures.append({"check": "positivity"})
    bar_p = discrete_barrier(2.0, 1.0, disc_p)
    if not verify_barrier(traj_p, bar_p, tol=1e-9):
        failures.append({"check": "q>1_barrier"})
    return {"suite": "barrier", "checked": checked, "failures": failures,
            "ok": not failures}


def decay_suite(seed=0, eps_values=(0.1, 0.05, 0.025), T=1.0):
    """Linear-shape decay bound and closeness to the matrix exponential.

    The Euler-versus-exponential gap is first order in eps, so the fitted
    constant K = gap/eps must be stable under eps-halving; the exponential
    decay bound carries the scheme's own 5 eps slack.
    """
    rng = np.random.default_rng(seed)
    failures = []
    checked = 0
    gaps = []
    for i in range(3):
        graph = random_connected_graph(rng, n_min=4, n_max=16)
        sub = dirichlet_subgraph(graph, graph.nodes)
        u0 = rng.normal(0.0, 1.0, sub.n)
        ref = semigroup_linear_oracle(sub, u0, T).values
        row = []
        for eps in eps_values:
            disc = discretization_for_eps(T, eps)
            traj = implicit_euler_march(sub, nlmod.linear(), u0, disc)
            gap = float(np.max(np.abs(traj.states[-1] - ref)))
            row.append(gap)
            checked += 1
            if not decay_check(traj, p=2, slack=5 * eps):
                failures.append({"instance": i, "eps": eps, "check": "decay"})
        gaps.append(row)
        checked += 1
        K = row[0] / eps_values[0]
        if any(row[j] > 1.5 * K * eps_values[j] for j in range(len(row))):
            failures.append({"instance": i, "gaps": row, "K": K,
                             "check": "oracle_gap"})
        checked += 1
        ratios = [row[j] / row[j + 1] for j in range(len(row) - 1) if row[j + 1] > 0]
        if ratios and not all(1.2 <= r <= 3.5 for r in ratios):
            failures.append({"instance": i, "ratios": ratios, "check": "order"})
    # scalar benchmark: isolated node, u' = -u, eps = 1e-4
    node = WeightedGraph.from_data([{"id": 0, "mu": 1.0}], [])
    sub0 = dirichlet_subgraph(node, [0])
    traj0 = implicit_euler_march(sub0, nlmod.linear(), np.array([1.0]),
                                 discretization_for_eps(1.0, 1e-4))
    checked += 1
    scalar_err = abs(float(traj0.states[-1][0]) - math.exp(-1.0))
    if scalar_err > 1e-3:
        failures.append({"check": "scalar_benchmark", "err": scalar_err})
    return {"suite": "decay", "checked": checked, "gaps": gaps,
            "scalar_err": scalar_err, "failures": failures, "ok": not failures}


SUITES = {
    "accretivity": accretivity_suite,
    "comparison": comparison_suite,
    "contraction": contraction_suite,
    "barrier": barrier_suite,
    "decay": decay_suite,
}
