"""Weighted graphs, node measures, Dirichlet subgraphs and exhaustions.

A graph is a countable node set X with a symmetric nonnegative edge weight
w, a positive node measure mu and a nonnegative killing term kappa.  Every
node must have finite weighted degree.  Finite graphs are explicit; infinite
graphs are given through a neighbor oracle and are only ever touched through
finite windows (balls of an exhaustion).

The (formal) Laplacian used throughout is

    (L u)(x) = (1/mu(x)) * sum_y w(x,y) * (u(x) - u(y)) + (kappa(x)/mu(x)) * u(x)

Restricting to a finite window Y with Dirichlet (zero) conditions outside
turns the outward edge mass b(y) = sum_{z not in Y} w(y,z) into extra
killing: kappa_dir = kappa + b.  The resulting subgraph Laplacian agrees
with the host Laplacian on functions supported in Y.
"""

from __future__ import annotations

import collections
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import GraphError, ExhaustionError

__all__ = [
    "WeightedGraph",
    "GridFunction",
    "DirichletSubgraph",
    "Exhaustion",
    "lp_norm",
    "apply_laplacian",
    "boundary_sets",
    "dirichlet_subgraph",
    "exhaustion",
    "check_summability",
    "absorb_boundary_data",
    "load_graph_json",
    "save_graph_json",
    "format_node",
]


def format_node(node) -> str:
    """Canonical string form of a node id, used in CSV output."""
    if isinstance(node, tuple):
        return "(" + ",".join(str(c) for c in node) + ")"
    return str(node)


class WeightedGraph:
    """Graph with symmetric weights, positive node measure and killing term.

    Parameters
    ----------
    neighbors : callable
        ``neighbors(x)`` returns the list of ``(y, w)`` pairs with w > 0.
        The order must be deterministic; it fixes BFS traversal order.
    mu, kappa : callable
        Node measure (> 0) and killing term (>= 0).
    nodes : sequence or None
        All nodes for a finite graph, ``None`` for an infinite host only
        reachable through the oracle.
    infinite_path_heavy : bool
        Declares that every infinite path has infinite total measure.
    measure_bounded_below : bool
        Declares inf mu > 0.

    The two flags are hypotheses recorded with the graph (they cannot be
    decided from finitely many oracle calls); generators set them for the
    built-in families, and finite graphs always satisfy both.
    """

    def __init__(self, neighbors, mu, kappa, *, nodes=None,
                 infinite_path_heavy=False, measure_bounded_below=False,
                 name="", default_root=None):
        self._neighbors = neighbors
        self._mu = mu
        self._kappa = kappa
        self._nodes = list(nodes) if nodes is not None else None
        self.name = name
        self.default_root = default_root
        if self._nodes is not None:
            # finite graphs satisfy both measure hypotheses automatically
            self.infinite_path_heavy = True
            self.measure_bounded_below = True
        else:
            self.infinite_path_heavy = bool(infinite_path_heavy)
            self.measure_bounded_below = bool(measure_bounded_below)

    @classmethod
    def from_data(cls, node_rows, edge_rows, name=""):
        """Build an explicit finite graph from node and edge records.

        ``node_rows`` is an iterable of ``{"id", "mu", "kappa"}`` mappings
        (kappa defaults to 0) and ``edge_rows`` of ``{"u", "v", "w"}``.
        Edges are undirected: listing both orientations, repeating an edge,
        a self loop, an unknown endpoint, mu <= 0, kappa < 0 or w <= 0 are
        all hard errors.
        """
        mu = {}
        kappa = {}
        for row in node_rows:
            nid = row["id"]
            if nid in mu:
                raise GraphError(f"duplicate node id {nid!r}")
            m = float(row["mu"])
            k = float(row.get("kappa", 0.0))
            if not m > 0:
                raise GraphError(f"node {nid!r}: mu must be positive, got {m}")
            if k < 0:
                raise GraphError(f"node {nid!r}: kappa must be nonnegative, got {k}")
            mu[nid] = m
            kappa[nid] = k
        adj = {nid: [] for nid in mu}
        seen = set()
        for row in edge_rows:
            u, v, w = row["u"], row["v"], float(row["w"])
            if u == v:
                raise GraphError(f"self loop at node {u!r}")
            if u not in mu or v not in mu:
                missing = u if u not in mu else v
                raise GraphError(f"edge references unknown node {missing!r}")
            key = (u, v) if _node_key(u) <= _node_key(v) else (v, u)
            if key in seen:
                raise GraphError(f"duplicate edge between {u!r} and {v!r}")
            seen.add(key)
            if w <= 0:
                raise GraphError(f"edge ({u!r},{v!r}): weight must be positive, got {w}")
            adj[u].append((v, w))
            adj[v].append((u, w))
        for nid in adj:
            adj[nid].sort(key=lambda t: _node_key(t[0]))

        graph = cls(lambda x: _adj_lookup(adj, x),
                    lambda x: _dict_lookup(mu, x, "node"),
                    lambda x: _dict_lookup(kappa, x, "node"),
                    nodes=sorted(mu, key=_node_key), name=name)
        graph._adj = adj
        return graph

    # -- basic queries ----------------------------------------------------

    @property
    def is_finite(self):
        return self._nodes is not None

    @property
    def nodes(self):
        if self._nodes is None:
            raise GraphError("infinite graph has no global node list; use exhaustion windows")
        return list(self._nodes)

    def num_nodes(self):
        return len(self.nodes)

    def neighbors(self, x):
        """(neighbor, weight) pairs of x, deterministic order."""
        return self._neighbors(x)

    def mu(self, x):
        return self._mu(x)

    def kappa(self, x):
        return self._kappa(x)

    def weighted_degree(self, x):
        """deg(x) = sum_y w(x,y) + kappa(x)."""
        return sum(w for _, w in self.neighbors(x)) + self.kappa(x)

    def has_node(self, x):
        if self._nodes is not None:
            if not hasattr(self, "_nodeset"):
                self._nodeset = set(self._nodes)
            return x in self._nodeset
        try:
            self._neighbors(x)
            self._mu(x)
            return True
        except GraphError:
            return False

    def check_symmetry(self, window=None):
        """Audit w(x,y) == w(y,x) over a finite window (or the whole finite graph).

        Raises GraphError on any asymmetric pair found.  For oracle graphs a
        window is required.
        """
        if window is None:
            window = self.nodes
        wset = set(window)
        for x in window:
            for y, w in self.neighbors(x):
                if y == x:
                    raise GraphError(f"self loop at node {x!r}")
                if w < 0:
                    raise GraphError(f"negative weight on ({x!r},{y!r})")
                if y in wset:
                    back = dict_get_weight(self, y, x)
                    if back is None or abs(back - w) > 1e-15 * max(1.0, abs(w)):
                        raise GraphError(
                            f"asymmetric weights between {x!r} and {y!r}: {w} vs {back}")
        return True


def _node_key(node):
    # orderable key for heterogeneous ids within one graph family
    if isinstance(node, tuple):
        return (2, node)
    if isinstance(node, str):
        return (1, node)
    return (0, node)


def _adj_lookup(adj, x):
    try:
        return adj[x]
    except KeyError:
        raise GraphError(f"unknown node {x!r}") from None


def _dict_lookup(d, x, what):
    try:
        return d[x]
    except KeyError:
        raise GraphError(f"unknown {what} {x!r}") from None


def dict_get_weight(graph, x, y):
    """w(x,y) looked up through the neighbor list of x, or None."""
    for z, w in graph.neighbors(x):
        if z == y:
            return w
    return None


# -- functions on windows --------------------------------------------------

class GridFunction:
    """Real-valued function on a finite ordered window of a graph."""

    def __init__(self, graph, nodes, values):
        self.graph = graph
        self.nodes = list(nodes)
        self.values = np.asarray(values, dtype=np.float64)
        if self.values.shape != (len(self.nodes),):
            raise GraphError("values length does not match window size")
        self._index = None

    @classmethod
    def from_dict(cls, graph, nodes, data, default=0.0):
        return cls(graph, nodes, [float(data.get(x, default)) for x in nodes])

    @classmethod
    def from_callable(cls, graph, nodes, fn):
        return cls(graph, nodes, [float(fn(x)) for x in nodes])

    @classmethod
    def constant(cls, graph, nodes, c):
        return cls(graph, nodes, np.full(len(list(nodes)), float(c)))

    @classmethod
    def indicator(cls, graph, nodes, where):
        # a tuple is itself a node id, not a collection of them
        wset = set(where) if isinstance(where, (list, set, frozenset)) else {where}
        return cls(graph, list(nodes), [1.0 if x in wset else 0.0 for x in nodes])

    @property
    def index(self):
        if self._index is None:
            self._index = {x: i for i, x in enumerate(self.nodes)}
        return self._index

    def __getitem__(self, node):
        try:
            return float(self.values[self.index[node]])
        except KeyError:
            raise GraphError(f"node {node!r} not in window") from None

    def __len__(self):
        return len(self.nodes)

    def mu_values(self):
        return np.array([self.graph.mu(x) for x in self.nodes])

    def norm(self, p):
        return lp_norm(self, p)

    def copy(self):
        return GridFunction(self.graph, self.nodes, self.values.copy())

    def zero_extend(self, nodes):
        """Same function on a larger window, zero off the current one."""
        idx = self.index
        vals = np.zeros(len(nodes))
        for i, x in enumerate(nodes):
            j = idx.get(x)
            if j is not None:
                vals[i] = self.values[j]
        return GridFunction(self.graph, nodes, vals)

    def as_dict(self):
        return {x: float(v) for x, v in zip(self.nodes, self.values)}


def lp_norm(u: GridFunction, p) -> float:
    """l^p norm against the node measure; p = inf gives the sup norm."""
    if p == np.inf or p == "inf":
        return float(np.max(np.abs(u.values))) if len(u) else 0.0
    p = float(p)
    if p < 1:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    mu = u.mu_values()
    return float(np.sum(np.abs(u.values) ** p * mu) ** (1.0 / p))


def apply_laplacian(u: GridFunction, zero_extension=False) -> GridFunction:
    """Host-graph Laplacian of a window function.

    Neighbors outside the window are an error unless ``zero_extension``
    declares u to vanish there.
    """
    g = u.graph
    idx = u.index
    out = np.empty(len(u))
    for i, x in enumerate(u.nodes):
        ux = u.values[i]
        acc = 0.0
        for y, w in g.neighbors(x):
            j = idx.get(y)
            if j is None:
                if not zero_extension:
                    raise GraphError(
                        f"node {x!r} has neighbor {y!r} outside the window; "
                        f"pass zero_extension=True if u vanishes there")
                acc += w * ux
            else:
                acc += w * (ux - u.values[j])
        out[i] = (acc + g.kappa(x) * ux) / g.mu(x)
    return GridFunction(g, u.nodes, out)


# -- boundary structure and Dirichlet subgraphs -----------------------------

def boundary_sets(graph, window):
    """Interior, interior boundary and exterior boundary of a window.

    Returns three lists in deterministic order: nodes of the window with no
    neighbor outside, nodes of the window with some neighbor outside, and
    outside nodes adjacent to the window.
    """
    window = list(window)
    wset = set(window)
    interior, inner_bdry = [], []
    outer = set()
    for x in window:
        outside = [y for y, _ in graph.neighbors(x) if y not in wset]
        if outside:
            inner_bdry.append(x)
            outer.update(outside)
        else:
            interior.append(x)
    return interior, inner_bdry, sorted(outer, key=_node_key)


@dataclass
class DirichletSubgraph:
    """Finite window of a host graph with zero conditions outside.

    Edges leaving the window are folded into extra killing ``b_dir`` so
    that the subgraph Laplacian matches the host Laplacian on functions
    supported in the window.  Arrays are aligned with ``nodes`` and edges
    are stored in CSR form for the solver kernels.
    """

    host: WeightedGraph
    nodes: list
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    mu: np.ndarray
    kappa_host: np.ndarray
    b_dir: np.ndarray
    index: dict = field(repr=False, default=None)

    def __post_init__(self):
        if self.index is None:
            self.index = {x: i for i, x in enumerate(self.nodes)}
        self.wdeg = np.zeros(self.n)
        for i in range(self.n):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            self.wdeg[i] = self.weights[lo:hi].sum()
        self._W = None

    @property
    def n(self):
        return len(self.nodes)

    @property
    def kappa_dir(self):
        return self.kappa_host + self.b_dir

    @property
    def deg_dir(self):
        """Per-node sum of internal weights plus Dirichlet killing."""
        return self.wdeg + self.kappa_dir

    @property
    def adjacency(self):
        if self._W is None:
            self._W = sp.csr_matrix(
                (self.weights, self.indices, self.indptr), shape=(self.n, self.n))
        return self._W

    def apply(self, values):
        """Subgraph Laplacian applied to a value array on the window."""
        values = np.asarray(values, dtype=np.float64)
        return (self.deg_dir * values - self.adjacency.dot(values)) / self.mu

    def laplacian_matrix(self):
        """Dense matrix of the subgraph Laplacian (small windows only)."""
        D = np.diag(self.deg_dir / self.mu)
        return D - self.adjacency.toarray() / self.mu[:, None]

    def function(self, values):
        return GridFunction(self.host, self.nodes, values)


def dirichlet_subgraph(graph, window) -> DirichletSubgraph:
    """Materialize the Dirichlet subgraph over an ordered window."""
    window = list(window)
    if not window:
        raise GraphError("empty window")
    index = {}
    for i, x in enumerate(window):
        if x in index:
            raise GraphError(f"window repeats node {x!r}")
        index[x] = i
    n = len(window)
    indptr = np.zeros(n + 1, dtype=np.int64)
    cols, vals = [], []
    mu = np.empty(n)
    kap = np.empty(n)
    b = np.zeros(n)
    for i, x in enumerate(window):
        mu[i] = graph.mu(x)
        kap[i] = graph.kappa(x)
        for y, w in graph.neighbors(x):
            j = index.get(y)
            if j is None:
                b[i] += w
            else:
                cols.append(j)
                vals.append(w)
        indptr[i + 1] = len(cols)
    return DirichletSubgraph(
        host=graph, nodes=window, indptr=indptr,
        indices=np.asarray(cols, dtype=np.int64),
        weights=np.asarray(vals, dtype=np.float64),
        mu=mu, kappa_host=kap, b_dir=b, index=index)


def absorb_boundary_data(graph, window, bc):
    """Fold boundary values into a forcing term on the window.

    ``bc`` prescribes values on the exterior boundary, either as a callable
    ``bc(t, node)`` or as a mapping node -> constant or node -> callable(t).
    Returns ``h(t, x)`` with h(t,x) = (1/mu(x)) * sum_over_outward_edges
    w(x,y) * bc(t,y), which is the forcing equivalent of solving with the
    prescribed values outside.
    """
    window = list(window)
    wset = set(window)
    outward = {}
    bdry = set()
    for x in window:
        edges = [(w, y) for y, w in graph.neighbors(x) if y not in wset]
        if edges:
            outward[x] = edges
            bdry.update(y for _, y in edges)

    if callable(bc):
        value = bc
    else:
        missing = [y for y in bdry if y not in bc]
        if missing:
            raise GraphError(
                f"boundary data missing nodes {sorted(missing, key=_node_key)!r}")
        def value(t, y, _bc=dict(bc)):
            v = _bc[y]
            return v(t) if callable(v) else float(v)

    def h(t, x):
        edges = outward.get(x)
        if not edges:
            return 0.0
        return sum(w * value(t, y) for w, y in edges) / graph.mu(x)

    return h


# -- exhaustion by balls -----------------------------------------------------

@dataclass
class Exhaustion:
    """Nested BFS balls around a root node.

    ``windows[k]`` is the ball of radius k+1 in BFS discovery order; each
    window is a prefix of the next, so window functions align by index.
    ``saturated`` marks that the last ball already covers everything BFS can
    reach (always eventually true on finite hosts).
    """

    host: WeightedGraph
    root: object
    windows: list
    saturated: bool

    @property
    def depth(self):
        return len(self.windows)


def exhaustion(graph, root, depth) -> Exhaustion:
    """Balls of radius 1..depth around root, stopping early on saturation.

    Consecutive windows are checked to share an edge with the newly added
    layer (so Dirichlet data actually propagates outward); a violation
    raises ExhaustionError.
    """
    if depth < 1:
        raise ExhaustionError("depth must be >= 1")
    graph.mu(root)  # validates the root exists
    order = [root]
    seen = {root}
    frontier = [root]
    windows = []
    saturated = False
    for _ in range(depth):
        nxt = []
        for x in frontier:
            for y, _ in graph.neighbors(x):
                if y not in seen:
                    seen.add(y)
                    order.append(y)
                    nxt.append(y)
        if not nxt:
            saturated = True
            if not windows:
                windows.append(list(order))
            break
        windows.append(list(order))
        frontier = nxt
        # frontier nodes are adjacent to the previous window by construction;
        # keep the audit cheap but explicit
        if len(windows) >= 2 and not _touches(graph, windows[-2], set(nxt)):
            raise ExhaustionError(
                "no node of the current window borders the newly added layer")
    if not windows:
        windows.append(list(order))
    return Exhaustion(host=graph, root=root, windows=windows, saturated=saturated)


def _touches(graph, window, new_layer):
    for x in window:
        for y, _ in graph.neighbors(x):
            if y in new_layer:
                return True
    return False


def check_summability(graph, p, window):
    """Check the per-node weight/measure summability condition over a window.

    For finite p each node x needs sum_y w(x,y)^p / mu(y)^(p-1) finite; for
    p = inf it needs sup_y w(x,y)/mu(y) finite.  Trivially true on finite
    graphs; this audits materialized windows of oracle hosts and returns the
    largest per-node value seen.
    """
    worst = 0.0
    for x in window:
        if p == np.inf or p == "inf":
            s = max((w / graph.mu(y) for y, w in graph.neighbors(x)), default=0.0)
        else:
            q = float(p)
            if q < 1:
                raise ValueError(f"p must be >= 1 or inf, got {p}")
            s = sum(w ** q / graph.mu(y) ** (q - 1.0) for y, w in graph.neighbors(x))
        if not np.isfinite(s):
            return False, float("inf")
        worst = max(worst, s)
    return True, worst


# -- JSON graph format -------------------------------------------------------

def load_graph_json(path) -> WeightedGraph:
    """Load an explicit finite graph from the JSON node/edge format.

    Tuple node ids are stored as "(a,b)" strings and parsed back, so a
    save/load round trip reproduces the original ids.
    """
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GraphError(f"invalid graph JSON: {exc}") from None
    if not isinstance(data, dict) or "nodes" not in data or "edges" not in data:
        raise GraphError('graph JSON must have "nodes" and "edges" arrays')
    nodes = [{**row, "id": _parse_json_id(row.get("id"))} for row in data["nodes"]]
    edges = [{**row, "u": _parse_json_id(row.get("u")),
              "v": _parse_json_id(row.get("v"))} for row in data["edges"]]
    return WeightedGraph.from_data(nodes, edges, name=str(path))


def save_graph_json(graph, path, window=None, dirichlet=False):
    """Write a finite graph (or a window of a host) in the JSON format.

    With ``dirichlet=True`` the outward edge mass of the window is folded
    into kappa, so reloading the file reproduces the Dirichlet subgraph.
    """
    if window is None:
        window = graph.nodes
    window = list(window)
    wset = set(window)
    nodes = []
    edges = []
    seen = set()
    for x in window:
        kap = graph.kappa(x)
        if dirichlet:
            kap += sum(w for y, w in graph.neighbors(x) if y not in wset)
        nodes.append({"id": _json_id(x), "mu": graph.mu(x), "kappa": kap})
        for y, w in graph.neighbors(x):
            if y in wset:
                key = (x, y) if _node_key(x) <= _node_key(y) else (y, x)
                if key not in seen:
                    seen.add(key)
                    edges.append({"u": _json_id(key[0]), "v": _json_id(key[1]), "w": w})
    payload = {"nodes": nodes, "edges": edges}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def _json_id(node):
    if isinstance(node, tuple):
        return format_node(node)
    return node


def _parse_json_id(value):
    if isinstance(value, str) and value.startswith("(") and value.endswith(")"):
        inner = value[1:-1]
        if not inner:
            return ()
        try:
            return tuple(int(c) for c in inner.split(","))
        except ValueError:
            return value
    return value
