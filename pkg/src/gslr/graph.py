"""Undirected weighted feature graphs."""
import csv
import io
import math
from collections import deque

import numpy as np


class GraphError(ValueError):
    """Raised for malformed edge lists or invalid graph structure."""


class FeatureGraph:
    """Immutable undirected graph on feature indices ``0 .. d-1``.

    Parameters
    ----------
    node_names : sequence of str
        One unique name per node; its position is the node index.
    edges : iterable of (int, int, float)
        Undirected edges ``(u, v, cost)`` with ``u != v`` and finite
        ``cost >= 0``. Duplicate undirected pairs are rejected.
    """

    def __init__(self, node_names, edges):
        names = tuple(str(n) for n in node_names)
        if len(set(names)) != len(names):
            raise GraphError("node names must be pairwise distinct")
        d = len(names)
        us, vs, cs = [], [], []
        seen = set()
        for u, v, c in edges:
            u, v, c = int(u), int(v), float(c)
            if not (0 <= u < d and 0 <= v < d):
                raise GraphError(f"edge ({u}, {v}) references a node outside 0..{d - 1}")
            if u == v:
                raise GraphError(f"self-loop on node {names[u]!r}")
            if not math.isfinite(c) or c < 0:
                raise GraphError(f"edge ({names[u]!r}, {names[v]!r}) has invalid cost {c}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GraphError(f"duplicate edge ({names[u]!r}, {names[v]!r})")
            seen.add(key)
            us.append(u)
            vs.append(v)
            cs.append(c)

        self._names = names
        self._index = {n: i for i, n in enumerate(names)}
        self._u = np.asarray(us, dtype=np.int64)
        self._v = np.asarray(vs, dtype=np.int64)
        self._cost = np.asarray(cs, dtype=np.float64)
        for arr in (self._u, self._v, self._cost):
            arr.setflags(write=False)

        adjacency = [[] for _ in range(d)]
        for e, (u, v) in enumerate(zip(us, vs)):
            adjacency[u].append((v, e))
            adjacency[v].append((u, e))
        self._adjacency = tuple(tuple(a) for a in adjacency)

    @property
    def node_count(self):
        return len(self._names)

    @property
    def edge_count(self):
        return len(self._cost)

    @property
    def node_names(self):
        return self._names

    @property
    def edge_u(self):
        return self._u

    @property
    def edge_v(self):
        return self._v

    @property
    def edge_costs(self):
        return self._cost

    @property
    def edges(self):
        """List of ``(u, v, cost)`` tuples in edge-index order."""
        return [(int(u), int(v), float(c)) for u, v, c in zip(self._u, self._v, self._cost)]

    def neighbors(self, node):
        """Return ``(neighbor, edge_index)`` pairs incident to ``node``."""
        return self._adjacency[node]

    def index_of(self, name):
        try:
            return self._index[name]
        except KeyError:
            raise GraphError(f"unknown node {name!r}") from None

    def with_costs(self, costs):
        """Return a copy of the graph with edge costs replaced."""
        costs = np.asarray(costs, dtype=np.float64)
        if costs.shape != self._cost.shape:
            raise GraphError("cost vector length does not match edge count")
        return FeatureGraph(self._names, zip(self._u, self._v, costs))

    def __eq__(self, other):
        if not isinstance(other, FeatureGraph):
            return NotImplemented
        return (self._names == other._names
                and np.array_equal(self._u, other._u)
                and np.array_equal(self._v, other._v)
                and np.array_equal(self._cost, other._cost))

    def __hash__(self):
        return hash((self._names, self._u.tobytes(), self._v.tobytes(), self._cost.tobytes()))

    def __repr__(self):
        return f"FeatureGraph(node_count={self.node_count}, edge_count={self.edge_count})"

    def __getstate__(self):
        return {"node_names": self._names, "edges": self.edges}

    def __setstate__(self, state):
        self.__init__(state["node_names"], state["edges"])

    def __deepcopy__(self, memo):
        # immutable, so sharing is safe (sklearn.clone deep-copies params)
        return self


def _split_row(line):
    if "\t" in line:
        return [f.strip() for f in line.split("\t")]
    return next(csv.reader([line], skipinitialspace=True))


def load_graph(source, name_policy="by-name", node_names=None):
    """Parse an edge list into a :class:`FeatureGraph`.

    ``source`` is a path, an open text stream, or an iterable of
    ``(node1, node2, cost)`` rows. Text lines are tab- or comma-separated;
    blank lines and lines starting with ``#`` are skipped.

    With ``name_policy="by-name"`` nodes are indexed by first appearance,
    after any names listed in ``node_names`` (which may include isolated
    nodes). A text source may declare that list itself in a leading
    ``# nodes<TAB>name<TAB>...`` line, as :func:`dump_graph` writes. With ``"by-index"`` endpoints must be integers and the node
    count is ``max index + 1`` (or ``len(node_names)``).
    """
    if name_policy not in ("by-name", "by-index"):
        raise ValueError(f"unknown name_policy {name_policy!r}")

    rows, declared = [], None
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, encoding="utf-8") as fh:
            rows, declared = _parse_lines(fh)
    elif isinstance(source, io.IOBase) or hasattr(source, "readline"):
        rows, declared = _parse_lines(source)
    else:
        for lineno, row in enumerate(source, start=1):
            rows.append((lineno, *_coerce_row(list(row), lineno)))

    if node_names is None and declared is not None and name_policy == "by-name":
        node_names = declared
    if name_policy == "by-name":
        names = list(node_names) if node_names is not None else []
        if len(set(names)) != len(names):
            raise GraphError("declared node names are not distinct")
        index = {n: i for i, n in enumerate(names)}
        edges = []
        for lineno, a, b, c in rows:
            for n in (a, b):
                if n not in index:
                    index[n] = len(names)
                    names.append(n)
            edges.append((lineno, index[a], index[b], c))
    else:
        edges = []
        top = -1
        for lineno, a, b, c in rows:
            try:
                u, v = int(a), int(b)
            except ValueError:
                raise GraphError(f"line {lineno}: endpoints must be integers under by-index") from None
            if u < 0 or v < 0:
                raise GraphError(f"line {lineno}: negative node index")
            top = max(top, u, v)
            edges.append((lineno, u, v, c))
        if node_names is not None:
            names = list(node_names)
            if top >= len(names):
                raise GraphError(f"edge index {top} exceeds supplied node names")
        else:
            names = [str(i) for i in range(top + 1)]

    seen = {}
    for lineno, u, v, c in edges:
        if u == v:
            raise GraphError(f"line {lineno}: self-loop on node {names[u]!r}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise GraphError(f"line {lineno}: duplicate edge ({names[u]!r}, {names[v]!r}), "
                             f"first seen on line {seen[key]}")
        seen[key] = lineno
    return FeatureGraph(names, [(u, v, c) for _, u, v, c in edges])


NODES_HEADER = "# nodes\t"


def _parse_lines(fh):
    """Edge rows, plus the node order from a ``# nodes`` header if present."""
    rows, declared = [], None
    for lineno, line in enumerate(fh, start=1):
        if line.startswith(NODES_HEADER) and declared is None:
            declared = [n for n in line[len(NODES_HEADER):].rstrip("\r\n").split("\t") if n]
            continue
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        rows.append((lineno, *_coerce_row(_split_row(line), lineno)))
    return rows, declared


def _coerce_row(fields, lineno):
    if len(fields) != 3:
        raise GraphError(f"line {lineno}: expected 3 fields (node1, node2, cost), got {len(fields)}")
    a, b, c = fields
    a, b = str(a).strip(), str(b).strip()
    if not a or not b:
        raise GraphError(f"line {lineno}: empty node name")
    try:
        cost = float(c)
    except (TypeError, ValueError):
        raise GraphError(f"line {lineno}: cost {c!r} is not a number") from None
    if not math.isfinite(cost) or cost < 0:
        raise GraphError(f"line {lineno}: cost must be a nonnegative finite number, got {c!r}")
    return a, b, cost


def dump_graph(g, fh):
    """Write ``g`` as a tab-separated edge list that :func:`load_graph` reads back."""
    names = g.node_names
    fh.write(NODES_HEADER + "\t".join(names) + "\n")
    fh.write("# node1\tnode2\tcost\n")
    for u, v, c in g.edges:
        fh.write(f"{names[u]}\t{names[v]}\t{c!r}\n")


def grid_graph(rows, cols, cost=1.0):
    """Four-neighbour ``rows x cols`` lattice; node ``r*cols + c`` is named ``"r_c"``."""
    names = [f"{r}_{c}" for r in range(rows) for c in range(cols)]
    edges = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                edges.append((i, i + 1, cost))
            if r + 1 < rows:
                edges.append((i, i + cols, cost))
    return FeatureGraph(names, edges)


def _as_node_set(g, s):
    members = set(int(i) for i in s)
    for i in members:
        if not 0 <= i < g.node_count:
            raise GraphError(f"node {i} is not in the graph")
    return members


def is_connected_subgraph(g, s):
    """True iff the subgraph of ``g`` induced by node set ``s`` is connected.

    A single node counts as connected. An empty set raises ``ValueError``.
    """
    members = _as_node_set(g, s)
    if not members:
        raise ValueError("connectivity of the empty node set is undefined")
    start = min(members)
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v, _ in g.neighbors(u):
            if v in members and v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == len(members)


def connected_components(g, nodes=None):
    """Connected components of the subgraph induced by ``nodes`` (default: all).

    Components are sorted lists, ordered by smallest member.
    """
    members = set(range(g.node_count)) if nodes is None else _as_node_set(g, nodes)
    comps = []
    seen = set()
    for start in sorted(members):
        if start in seen:
            continue
        comp = [start]
        seen.add(start)
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v, _ in g.neighbors(u):
                if v in members and v not in seen:
                    seen.add(v)
                    comp.append(v)
                    queue.append(v)
        comps.append(sorted(comp))
    return comps
