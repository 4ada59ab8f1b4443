"""Deterministic CSV and JSON writers for solutions and trajectories.

Floats are rendered with %.17g, which round-trips any double exactly, so
repeated runs with identical inputs produce byte-identical files.  The CSV
schema is always (t, node_id, value); barrier curves use the reserved node
id ``__barrier__``.
"""

from __future__ import annotations

import json

from .graphs import format_node

__all__ = [
    "fmt17",
    "write_solution_csv",
    "write_trajectory_csv",
    "write_barrier_csv",
    "write_json_report",
    "BARRIER_NODE_ID",
]

BARRIER_NODE_ID = "__barrier__"


def fmt17(x) -> str:
    return f"{float(x):.17g}"


def write_solution_csv(path, u, t=0.0):
    """Single state as (t, node_id, value) rows."""
    with open(path, "w") as fh:
        fh.write("t,node_id,value\n")
        ts = fmt17(t)
        for node, val in zip(u.nodes, u.values):
            fh.write(f"{ts},{format_node(node)},{fmt17(val)}\n")


def write_trajectory_csv(path, traj, barrier=None):
    """All marching states, optionally interleaved with the barrier curve."""
    with open(path, "w") as fh:
        fh.write("t,node_id,value\n")
        for k, t in enumerate(traj.times):
            ts = fmt17(t)
            for node, val in zip(traj.nodes, traj.states[k]):
                fh.write(f"{ts},{format_node(node)},{fmt17(val)}\n")
            if barrier is not None:
                fh.write(f"{ts},{BARRIER_NODE_ID},{fmt17(barrier.theta[k])}\n")


def write_barrier_csv(path, barrier):
    with open(path, "w") as fh:
        fh.write("t,node_id,value\n")
        for t, th in zip(barrier.times, barrier.theta):
            fh.write(f"{fmt17(t)},{BARRIER_NODE_ID},{fmt17(th)}\n")


def _normalize(obj):
    # repr of a Python float round-trips exactly; normalize numpy scalars
    if hasattr(obj, "item"):
        return obj.item()
    if isinstance(obj, dict):
        return {str(k): _normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_normalize(v) for v in obj]
    return obj


def write_json_report(path, payload):
    with open(path, "w") as fh:
        json.dump(_normalize(payload), fh, indent=1, sort_keys=True)
        fh.write("\n")
