"""Command-line driver: generate, stationary, evolve, verify, export.

Experiments are described by a TOML config file, individual flags, or both
(flags win).  All output is deterministic: CSV floats use 17 significant
digits, JSON reports sort their keys, and randomized verification suites
draw their seed from --seed or GRAPHFLOW_SEED.

Exit codes: 0 success, 2 configuration or input errors, 3 solver or
refinement failures, 4 a property check that came back false.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import nonlinearity as nlmod
from ._kernels import KIND_POWER
from .barriers import (Barrier, discrete_barrier, extinction_time,
                       verify_barrier, verify_signed_barrier)
from .config import ExperimentConfig, parse_data_field, parse_node_token, read_seed
from .errors import (ConfigError, DiscretizationError, ExhaustionError,
                     GraphError, NonlinearityError, SolverError)
from .evolution import discretization_for_eps, implicit_euler_march, mild_solve
from .export import (write_barrier_csv, write_json_report, write_solution_csv,
                     write_trajectory_csv)
from .generators import graph_from_spec
from .graphs import (dirichlet_subgraph, exhaustion, load_graph_json, lp_norm,
                     save_graph_json)
from .resolvent import as_window_values, solve_stationary
from .suites import SUITES

__all__ = ["main"]

_FAMILIES = ("path:", "cycle:", "lattice:", "tree:")


def _resolve_graph(spec):
    """A generator family spec, or else a path to a graph JSON file."""
    s = spec.strip()
    if s.startswith(_FAMILIES):
        return graph_from_spec(s)
    try:
        return load_graph_json(s)
    except OSError:
        raise ConfigError(
            f"graph spec {spec!r} is neither a built-in family "
            f"({', '.join(f + '...' for f in _FAMILIES)}) nor a readable file"
        ) from None


def _resolve_root(graph, root_token):
    if root_token is not None:
        root = parse_node_token(str(root_token))
        if not graph.has_node(root):
            raise GraphError(f"root {root!r} is not a node of {graph.name or 'the graph'}")
        return root
    return graph.default_root


def _merged(args, keys):
    cfg = ExperimentConfig.from_toml(args.config) if args.config else ExperimentConfig()
    return cfg.override(**{k: getattr(args, k) for k in keys})


# -- generate ---------------------------------------------------------------

def _cmd_generate(args):
    graph = graph_from_spec(args.spec)
    window = None
    if args.radius is not None:
        root = _resolve_root(graph, args.root)
        window = exhaustion(graph, root, args.radius).windows[-1]
    elif not graph.is_finite:
        raise ConfigError(f"{args.spec!r} is infinite; pass --radius to cut a ball")
    save_graph_json(graph, args.out, window=window, dirichlet=args.dirichlet)
    n = len(window) if window is not None else len(graph.nodes)
    mode = "dirichlet window" if args.dirichlet else "window" if window else "graph"
    print(f"generate {args.spec}: wrote {mode} with {n} nodes to {args.out}")
    return 0


# -- stationary -------------------------------------------------------------

def _cmd_stationary(args):
    cfg = _merged(args, ("graph", "nonlinearity", "alpha", "g", "root",
                         "depth_max", "tol", "p", "out"))
    cfg.require("graph", "nonlinearity", "alpha", "g")
    p = cfg.norm_p()
    tol = cfg.tol if cfg.tol is not None else 1e-10
    graph = _resolve_graph(cfg.graph)
    nl = nlmod.from_spec(cfg.nonlinearity)
    if nl.cls == "F1":
        if not cfg.alpha > 0:
            raise ConfigError(f"alpha must be positive, got {cfg.alpha}")
    elif not cfg.alpha > nl.L:
        raise ConfigError(f"alpha must exceed the Lipschitz constant "
                          f"{nl.L:g}, got {cfg.alpha}")
    g = parse_data_field(cfg.g)
    root = _resolve_root(graph, cfg.root)
    u, trace = solve_stationary(graph, nl, cfg.alpha, g, root=root,
                                depth_max=cfg.depth_max, tol=tol, p=p)
    norm = lp_norm(u, p)
    if cfg.out:
        write_solution_csv(cfg.out, u)
    if args.report:
        write_json_report(args.report, {
            "command": "stationary",
            "graph": cfg.graph,
            "nonlinearity": cfg.nonlinearity,
            "alpha": cfg.alpha,
            "p": p,
            "nodes": len(u.nodes),
            "norm": norm,
            "sup": float(np.max(np.abs(u.values))) if len(u.nodes) else 0.0,
            "exhaustion": trace,
        })
    tail = f", exhausted to depth {trace[-1]['depth']}" if trace else ""
    print(f"stationary on {cfg.graph}: {len(u.nodes)} nodes, "
          f"|u|_{cfg.p} = {norm:.12g}{tail}")
    if cfg.out:
        print(f"wrote {cfg.out}")
    return 0


# -- evolve -----------------------------------------------------------------

def _cmd_evolve(args):
    cfg = _merged(args, ("graph", "nonlinearity", "u0", "forcing", "T", "eps",
                         "eps_target", "refine_tol", "p", "tol", "max_sweeps",
                         "method", "radius", "depth_max", "root", "out"))
    cfg.require("graph", "nonlinearity", "u0", "T")
    if (cfg.eps is None) == (cfg.eps_target is None):
        raise ConfigError("set exactly one of eps (fixed partition) and "
                          "eps_target (refine to the mild solution)")
    p = cfg.norm_p()
    # marching accumulates per-step stopping error, so it defaults tighter
    tol = cfg.tol if cfg.tol is not None else 1e-12
    graph = _resolve_graph(cfg.graph)
    nl = nlmod.from_spec(cfg.nonlinearity)
    cap = nl.max_lambda()
    step = cfg.eps if cfg.eps is not None else cfg.eps_target
    if not step > 0:
        raise ConfigError(f"step bound must be positive, got {step}")
    if step >= cap:
        raise ConfigError(f"steps must stay below 1/L = {cap:g} for this "
                          f"nonlinearity, got {step}")
    u0 = parse_data_field(cfg.u0)
    forcing = None
    if cfg.forcing is not None:
        field = parse_data_field(cfg.forcing, time_dependent=True)
        if not field.is_zero:
            forcing = field
    root = _resolve_root(graph, cfg.root)

    refinement = []
    if cfg.eps is not None:
        if graph.is_finite:
            window = graph.nodes
        else:
            if cfg.radius is None:
                raise ConfigError("fixed-eps evolve on an infinite host needs "
                                  "--radius (or use eps_target to refine)")
            window = exhaustion(graph, root, cfg.radius).windows[-1]
        sub = dirichlet_subgraph(graph, window)
        disc = discretization_for_eps(cfg.T, cfg.eps, forcing=forcing)
        traj = implicit_euler_march(sub, nl, as_window_values(sub, u0), disc,
                                    tol=tol, max_sweeps=cfg.max_sweeps,
                                    method=cfg.method)
    else:
        traj, refinement = mild_solve(graph, nl, u0, forcing, cfg.T,
                                      cfg.eps_target, depth_max=cfg.depth_max,
                                      tol=cfg.refine_tol or 1e-6, p=p,
                                      root=root, solver_tol=tol)

    barrier, verdict, t_star = _auto_barrier(traj, nl, forcing)
    if cfg.out:
        write_trajectory_csv(cfg.out, traj, barrier=barrier)
    if args.report:
        final = traj.states[-1]
        payload = {
            "command": "evolve",
            "graph": cfg.graph,
            "nonlinearity": cfg.nonlinearity,
            "T": cfg.T,
            "p": p,
            "nodes": len(traj.nodes),
            "steps": traj.disc.n_steps,
            "eps": cfg.eps if cfg.eps is not None else cfg.eps_target,
            "final_norm": lp_norm(traj.state(traj.disc.n_steps), p),
            "final_sup": float(np.max(np.abs(final))) if len(final) else 0.0,
            "refinement": refinement,
        }
        if barrier is not None:
            payload["barrier"] = {
                "q": barrier.q, "M": barrier.M, "verdict": bool(verdict),
                "extinction_time": t_star,
            }
        write_json_report(args.report, payload)
    print(f"evolve on {cfg.graph}: {traj.disc.n_steps} steps on "
          f"{len(traj.nodes)} nodes, final sup {np.max(np.abs(traj.states[-1])):.12g}")
    if cfg.out:
        print(f"wrote {cfg.out}")
    if barrier is not None:
        stamp = "pass" if verdict else "FAIL"
        tail = f", extinguishes by t = {t_star:.12g}" if t_star is not None else ""
        print(f"barrier q={barrier.q:g} M={barrier.M:.12g}: {stamp}{tail}")
        if not verdict:
            return 4
    return 0


def _auto_barrier(traj, nl, forcing):
    """Barrier curve and verdict for forcing-free pure-power runs."""
    if forcing is not None or nl.kernel_kind != KIND_POWER:
        return None, True, None
    q = nl.kernel_param
    if abs(q - 1.0) < 1e-12:
        return None, True, None
    u0 = traj.states[0]
    M = float(np.max(np.abs(u0))) if len(u0) else 0.0
    barrier = discrete_barrier(q, M, traj.disc)
    if float(np.min(u0)) < 0.0:
        ok = verify_signed_barrier(traj, barrier)
    else:
        ok = verify_barrier(traj, barrier)
    t_star = extinction_time(q, M) if q < 1.0 else None
    return barrier, ok, t_star


# -- verify -----------------------------------------------------------------

def _cmd_verify(args):
    seed = read_seed(args.seed)
    kwargs = {"seed": seed}
    if args.count is not None:
        if args.suite not in ("accretivity", "comparison"):
            raise ConfigError(f"--count is not meaningful for the "
                              f"{args.suite} suite")
        kwargs["count"] = args.count
    report = SUITES[args.suite](**kwargs)
    if args.report:
        write_json_report(args.report, report)
    n_fail = len(report["failures"])
    stamp = "pass" if report["ok"] else "FAIL"
    print(f"verify {args.suite}: {report['checked']} checks, "
          f"{n_fail} failures [{stamp}] (seed {seed})")
    for failure in report["failures"][:5]:
        print(f"  failure: {failure}")
    if n_fail > 5:
        print(f"  ... and {n_fail - 5} more (write a JSON report for the full list)")
    return 0 if report["ok"] else 4


# -- export -----------------------------------------------------------------

def _cmd_export_barrier(args):
    disc = discretization_for_eps(args.T, args.eps)
    barrier = discrete_barrier(args.q, args.M, disc)
    write_barrier_csv(args.out, barrier)
    print(f"export barrier q={args.q:g} M={args.M:g}: "
          f"{disc.n_steps} steps to {args.out}")
    if args.q < 1.0:
        print(f"extinction time {extinction_time(args.q, args.M):.12g}")
    return 0


def _cmd_export_graph(args):
    return _cmd_generate(args)


# -- parser -----------------------------------------------------------------

def _add_config_flags(sp):
    sp.add_argument("--config", help="TOML config file; flags override its values")
    sp.add_argument("--graph", help="generator spec (path:N, cycle:N, "
                                    "lattice:Z^d, tree:b) or graph JSON path")
    sp.add_argument("--nonlinearity", help="zero | linear | power:q=Q | "
                                           "lipschitz:NAME:L=L")
    sp.add_argument("--root", help="root node for exhaustion on infinite hosts "
                                   "(defaults to the family origin)")
    sp.add_argument("--depth-max", type=int, help="exhaustion depth budget (default 40)")
    sp.add_argument("--tol", type=float,
                    help="per-solve residual tolerance (default 1e-10 for "
                         "stationary, 1e-12 for evolve where steps accumulate)")
    sp.add_argument("--p", help="norm index, a real >= 1 or 'inf' (default 2)")
    sp.add_argument("--out", help="CSV output path (t,node_id,value rows)")
    sp.add_argument("--report", help="JSON report output path")


def _add_generate_flags(sp):
    sp.add_argument("spec", help="graph family spec, e.g. path:50 or lattice:Z^2")
    sp.add_argument("-o", "--out", required=True, help="output JSON path")
    sp.add_argument("--radius", type=int,
                    help="cut the ball of this radius around the root")
    sp.add_argument("--root", help="ball center (defaults to the family origin)")
    sp.add_argument("--dirichlet", action="store_true",
                    help="fold outward edge mass into kappa so the file "
                         "reloads as the Dirichlet subgraph")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="graphflow",
        description="Semilinear diffusion on weighted graphs: implicit Euler "
                    "marching, Dirichlet exhaustion, and property checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("generate", help="write a built-in graph (or a ball "
                                         "of an infinite one) as JSON")
    _add_generate_flags(sp)
    sp.set_defaults(func=_cmd_generate)

    sp = sub.add_parser("stationary",
                        help="solve the stationary equation via the resolvent")
    _add_config_flags(sp)
    sp.add_argument("--alpha", type=float, help="zeroth-order coefficient "
                    "(must be > 0 for class F1, > L for class F2)")
    sp.add_argument("--g", help="data spec: const:C | indicator:NODE | "
                    "file:PATH | expr:EXPRESSION | zero")
    sp.set_defaults(func=_cmd_stationary)

    sp = sub.add_parser("evolve", help="march the evolution problem")
    _add_config_flags(sp)
    sp.add_argument("--u0", help="initial datum spec (same grammar as --g)")
    sp.add_argument("--forcing", help="forcing spec; expressions may use t")
    sp.add_argument("--T", type=float, help="time horizon")
    sp.add_argument("--eps", type=float,
                    help="fixed step bound (plain march on a fixed window)")
    sp.add_argument("--eps-target", type=float,
                    help="refine eps and window until the trajectory settles")
    sp.add_argument("--refine-tol", type=float,
                    help="settling tolerance for eps-target mode (default 1e-6)")
    sp.add_argument("--radius", type=int,
                    help="window radius for fixed-eps runs on infinite hosts")
    sp.add_argument("--max-sweeps", type=int, help="per-solve sweep budget")
    sp.add_argument("--method", choices=("gauss-seidel", "jacobi"),
                    help="inner nonlinear solver (default gauss-seidel)")
    sp.set_defaults(func=_cmd_evolve)

    sp = sub.add_parser("verify", help="run a randomized property suite")
    sp.add_argument("suite", choices=sorted(SUITES))
    sp.add_argument("--count", type=int,
                    help="instances to draw (accretivity and comparison suites)")
    sp.add_argument("--seed", type=int,
                    help="suite seed (default: GRAPHFLOW_SEED or a fixed value)")
    sp.add_argument("--report", help="JSON report output path")
    sp.set_defaults(func=_cmd_verify)

    sp = sub.add_parser("export", help="write derived artifacts")
    subx = sp.add_subparsers(dest="target", required=True)
    spb = subx.add_parser("barrier", help="discrete barrier curve as CSV")
    spb.add_argument("--q", type=float, required=True, help="power exponent (q != 1)")
    spb.add_argument("--M", type=float, required=True, help="initial sup bound")
    spb.add_argument("--T", type=float, required=True, help="time horizon")
    spb.add_argument("--eps", type=float, required=True, help="step bound")
    spb.add_argument("-o", "--out", required=True, help="output CSV path")
    spb.set_defaults(func=_cmd_export_barrier)
    spg = subx.add_parser("graph", help="graph JSON (same as generate)")
    _add_generate_flags(spg)
    spg.set_defaults(func=_cmd_export_graph)

    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, GraphError, NonlinearityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, ExhaustionError, DiscretizationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
