"""Built-in graph families and random instances for the verification suites.

Finite families (``path:N``, ``cycle:N``) are explicit graphs with unit
weights and measure.  Infinite families (``lattice:Z^d``, ``tree:b``) are
neighbor oracles; the integer lattice with unit measure satisfies both
measure hypotheses (heavy infinite paths, measure bounded below), while the
regular tree is declared bounded-below only.
"""

from __future__ import annotations

import re

import numpy as np

from .errors import ConfigError, GraphError
from .graphs import WeightedGraph

__all__ = [
    "path_graph",
    "cycle_graph",
    "lattice",
    "regular_tree",
    "graph_from_spec",
    "random_connected_graph",
]


def path_graph(n):
    """Path on nodes 0..n-1, unit weights and measure, no killing."""
    if n < 1:
        raise ConfigError(f"path needs at least 1 node, got {n}")
    nodes = [{"id": i, "mu": 1.0} for i in range(n)]
    edges = [{"u": i, "v": i + 1, "w": 1.0} for i in range(n - 1)]
    return WeightedGraph.from_data(nodes, edges, name=f"path:{n}")


def cycle_graph(n):
    """Cycle on nodes 0..n-1, unit weights and measure, no killing."""
    if n < 3:
        raise ConfigError(f"cycle needs at least 3 nodes, got {n}")
    nodes = [{"id": i, "mu": 1.0} for i in range(n)]
    edges = [{"u": i, "v": (i + 1) % n, "w": 1.0} for i in range(n)]
    return WeightedGraph.from_data(nodes, edges, name=f"cycle:{n}")


def lattice(d):
    """Integer lattice Z^d with unit weights, mu = 1, kappa = 0.

    d = 1 uses plain integer node ids; higher dimensions use d-tuples.
    Neighbor order is -e_i then +e_i per axis, which fixes BFS order.
    """
    if d < 1:
        raise ConfigError(f"lattice dimension must be >= 1, got {d}")
    if d == 1:
        def neighbors(x):
            if not isinstance(x, (int, np.integer)):
                raise GraphError(f"lattice Z^1 nodes are integers, got {x!r}")
            return [(x - 1, 1.0), (x + 1, 1.0)]
    else:
        def neighbors(x):
            if not (isinstance(x, tuple) and len(x) == d):
                raise GraphError(f"lattice Z^{d} nodes are {d}-tuples, got {x!r}")
            out = []
            for axis in range(d):
                for step in (-1, 1):
                    y = list(x)
                    y[axis] += step
                    out.append((tuple(y), 1.0))
            return out
    root = 0 if d == 1 else (0,) * d
    return WeightedGraph(neighbors, lambda x: 1.0, lambda x: 0.0,
                         infinite_path_heavy=True, measure_bounded_below=True,
                         name=f"lattice:Z^{d}", default_root=root)


def regular_tree(b):
    """Infinite b-regular tree; node ids are child-index tuples from the root.

    The root () has b children (0,), ..., (b-1,); every other node has its
    parent and b-1 children, so all degrees equal b.  Unit weights, mu = 1,
    kappa = 0.  Declared measure-bounded-below.
    """
    if b < 2:
        raise ConfigError(f"regular tree needs degree >= 2, got {b}")

    def neighbors(x):
        if not isinstance(x, tuple):
            raise GraphError(f"tree nodes are tuples of child indices, got {x!r}")
        out = []
        if x:
            out.append((x[:-1], 1.0))
            out.extend(((x + (i,), 1.0) for i in range(b - 1)))
        else:
            out.extend((((i,), 1.0) for i in range(b)))
        return out

    return WeightedGraph(neighbors, lambda x: 1.0, lambda x: 0.0,
                         measure_bounded_below=True, name=f"tree:{b}",
                         default_root=())


_LATTICE_RE = re.compile(r"^Z\^(\d+)$")


def graph_from_spec(spec: str) -> WeightedGraph:
    """Parse a generator spec: path:N, cycle:N, lattice:Z^d or tree:b."""
    s = spec.strip()
    kind, sep, arg = s.partition(":")
    if not sep:
        raise ConfigError(f"malformed graph spec {spec!r}")
    if kind == "path":
        return path_graph(_int_arg(spec, arg))
    if kind == "cycle":
        return cycle_graph(_int_arg(spec, arg))
    if kind == "tree":
        return regular_tree(_int_arg(spec, arg))
    if kind == "lattice":
        m = _LATTICE_RE.match(arg)
        if not m:
            raise ConfigError(f"malformed lattice spec {spec!r}, want lattice:Z^d")
        return lattice(int(m.group(1)))
    raise ConfigError(f"unknown graph family {kind!r} in {spec!r}")


def _int_arg(spec, arg):
    try:
        return int(arg)
    except ValueError:
        raise ConfigError(f"bad integer in graph spec {spec!r}") from None


def random_connected_graph(rng, n_min=2, n_max=12, extra_edge_prob=0.3,
                           kappa_prob=0.5):
    """Random connected weighted graph for property sweeps.

    A random spanning tree keeps it connected; extra edges, weights in
    [0.2, 2], mu in [0.5, 2] and sparse kappa in [0, 1] exercise the general
    weighted setting.  Deterministic given the generator state.
    """
    n = int(rng.integers(n_min, n_max + 1))
    nodes = []
    for i in range(n):
        mu = float(rng.uniform(0.5, 2.0))
        kap = float(rng.uniform(0.0, 1.0)) if rng.random() < kappa_prob else 0.0
        nodes.append({"id": i, "mu": mu, "kappa": kap})
    edges = []
    seen = set()
    for i in range(1, n):
        j = int(rng.integers(0, i))
        edges.append({"u": j, "v": i, "w": float(rng.uniform(0.2, 2.0))})
        seen.add((j, i))
    if n > 2:
        n_extra = rng.binomial(n, extra_edge_prob)
        for _ in range(n_extra):
            i, j = sorted(rng.choice(n, size=2, replace=False).tolist())
            if (i, j) not in seen:
                seen.add((i, j))
                edges.append({"u": i, "v": j, "w": float(rng.uniform(0.2, 2.0))})
    return WeightedGraph.from_data(nodes, edges, name=f"random:{n}")
