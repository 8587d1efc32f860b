"""Approximate projection onto graph-sparse vectors.

Node prizes are the squared coefficients, so the prize left outside a
prize-collecting Steiner tree equals the squared distance between the input
and its restriction to the tree. A log-scale bisection over a multiplier on
all edge costs steers the tree size into ``[s, (1 + slack) * s]``. The tree
size is not continuous in the multiplier, so trees that overshoot the window
are trimmed to their heaviest connected subtree of the window's upper size,
and connected sets grown greedily from the heaviest nodes compete as well.
"""
import heapq
import itertools
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .graph import is_connected_subgraph
from .pcst import solve_arrays

LAMBDA_BOUNDS = (1e-6, 1e6)
GREEDY_STARTS = 5


@dataclass(frozen=True)
class SparsityTarget:
    s: int
    slack_fraction: float = 0.10

    def __post_init__(self):
        if int(self.s) != self.s or self.s < 1:
            raise ValueError(f"sparsity must be a positive integer, got {self.s}")
        if not (math.isfinite(self.slack_fraction) and self.slack_fraction >= 0):
            raise ValueError("slack_fraction must be finite and nonnegative")

    @property
    def upper(self):
        """Largest support size inside the sparsity window."""
        return max(self.s, int(math.floor((1.0 + self.slack_fraction) * self.s + 1e-9)))

    @property
    def size_bound(self):
        return 6 * self.s + 1


@dataclass(frozen=True)
class ProjectionResult:
    projected: np.ndarray
    support: frozenset
    lambda_used: float
    solver_calls: int


@njit(cache=True)
def _heaviest_subtree(n, tree_u, tree_v, weight, k):
    """Node mask of the max-weight connected subtree with exactly ``k`` nodes
    of the tree given by edges ``tree_u[i] - tree_v[i]`` (tree knapsack)."""
    m = tree_u.shape[0]
    deg = np.zeros(n + 1, dtype=np.int64)
    for i in range(m):
        deg[tree_u[i] + 1] += 1
        deg[tree_v[i] + 1] += 1
    for i in range(n):
        deg[i + 1] += deg[i]
    adj = np.empty(2 * m, dtype=np.int64)
    fill = deg[:n].copy()
    for i in range(m):
        adj[fill[tree_u[i]]] = tree_v[i]
        fill[tree_u[i]] += 1
        adj[fill[tree_v[i]]] = tree_u[i]
        fill[tree_v[i]] += 1

    root = tree_u[0]
    parent = np.full(n, -2, dtype=np.int64)
    order = np.empty(m + 1, dtype=np.int64)
    parent[root] = -1
    order[0] = root
    n_order = 1
    head = 0
    while head < n_order:
        v = order[head]
        head += 1
        for q in range(deg[v], deg[v + 1]):
            w = adj[q]
            if parent[w] == -2:
                parent[w] = v
                order[n_order] = w
                n_order += 1

    neg = -np.inf
    best = np.full((n, k + 1), neg)
    split = np.zeros((n, k + 1), dtype=np.int64)
    size = np.zeros(n, dtype=np.int64)
    tmp = np.empty(k + 1)
    for idx in range(n_order - 1, -1, -1):
        v = order[idx]
        best[v, 1] = weight[v]
        size[v] = 1
        for q in range(deg[v], deg[v + 1]):
            c = adj[q]
            if parent[c] != v:
                continue
            top_v = min(size[v], k)
            top_c = min(size[c], k - 1)
            for j in range(k + 1):
                tmp[j] = best[v, j]
            for a in range(1, top_v + 1):
                if best[v, a] == neg:
                    continue
                for b in range(1, min(top_c, k - a) + 1):
                    val = best[v, a] + best[c, b]
                    if val > tmp[a + b]:
                        tmp[a + b] = val
                        split[c, a + b] = b
            for j in range(k + 1):
                best[v, j] = tmp[j]
            size[v] += size[c]

    top = -1
    for idx in range(n_order):
        v = order[idx]
        if best[v, k] != neg and (top == -1 or best[v, k] > best[top, k]
                                   or (best[v, k] == best[top, k] and v < top)):
            top = v
    keep = np.zeros(n, dtype=np.bool_)
    if top == -1:
        return keep
    # unwind the knapsack: children were merged in adjacency order
    stack_v = np.empty(m + 1, dtype=np.int64)
    stack_j = np.empty(m + 1, dtype=np.int64)
    stack_v[0] = top
    stack_j[0] = k
    sp = 1
    while sp > 0:
        sp -= 1
        v = stack_v[sp]
        j = stack_j[sp]
        keep[v] = True
        for q in range(deg[v + 1] - 1, deg[v] - 1, -1):
            c = adj[q]
            if parent[c] != v:
                continue
            b = split[c, j]
            if b > 0:
                stack_v[sp] = c
                stack_j[sp] = b
                sp += 1
                j -= b
    return keep


@njit(cache=True)
def _induced_spanning_tree(n, eu, ev, keep, weight):
    """Max-weight spanning forest of the subgraph induced by ``keep``, edges
    weighted by the sum of their endpoint weights (Kruskal)."""
    inside = np.flatnonzero(keep[eu] & keep[ev])
    order = inside[np.argsort(-(weight[eu[inside]] + weight[ev[inside]]), kind="mergesort")]
    parent = np.arange(n)
    tu = np.empty(order.shape[0], dtype=np.int64)
    tv = np.empty(order.shape[0], dtype=np.int64)
    m = 0
    for e in order:
        a, b = eu[e], ev[e]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a != b:
            parent[a] = b
            tu[m] = eu[e]
            tv[m] = ev[e]
            m += 1
    return tu[:m], tv[:m]


def _greedy_support(g, weight, start, k):
    """Grow a connected set from ``start`` by repeatedly adding the heaviest
    neighbouring node until it has ``k`` nodes or the component runs out."""
    members = {start}
    frontier = []
    for v, _ in g.neighbors(start):
        heapq.heappush(frontier, (-weight[v], v))
    while frontier and len(members) < k:
        _, v = heapq.heappop(frontier)
        if v in members:
            continue
        members.add(v)
        for w, _ in g.neighbors(v):
            if w not in members:
                heapq.heappush(frontier, (-weight[w], w))
    return frozenset(members)


def _excluded_mass(sq, members):
    kept = math.fsum(sq[i] for i in members)
    return math.fsum(sq) - kept


def project(g, p, target, max_bisection_steps=30, lambda_bounds=LAMBDA_BOUNDS,
            use_graph_costs=True):
    """Restrict ``p`` to a connected support of size about ``target.s``.

    Parameters
    ----------
    g : FeatureGraph
    p : array-like of shape (d,)
        Vector to project.
    target : SparsityTarget or int
    max_bisection_steps : int
        Solver calls allowed after the two bracket endpoints.
    lambda_bounds : (float, float)
        Bracket for the edge-cost multiplier; prizes are normalized by
        ``max p[i]**2`` so the bracket is scale free.
    use_graph_costs : bool
        Multiply the graph's edge costs by the multiplier; when False every
        edge has base cost 1.

    Returns
    -------
    ProjectionResult
        Among the supports examined (window-sized or smaller solver trees,
        trimmed oversize trees, and greedily grown sets) the one retaining
        the most squared mass; ties go to the smaller, then lexicographically
        smaller, support.
    """
    if not isinstance(target, SparsityTarget):
        target = SparsityTarget(int(target))
    p = np.asarray(p, dtype=np.float64)
    d = g.node_count
    if p.shape != (d,):
        raise ValueError(f"vector has shape {p.shape} but the graph has {d} nodes")
    if not np.all(np.isfinite(p)):
        raise ValueError("cannot project a vector with non-finite entries")
    lam_lo, lam_hi = float(lambda_bounds[0]), float(lambda_bounds[1])
    if not 0 < lam_lo < lam_hi:
        raise ValueError("lambda bounds must satisfy 0 < low < high")

    scale = np.max(np.abs(p))
    if scale == 0.0:
        return ProjectionResult(np.zeros(d), frozenset(), 0.0, 0)
    prizes = (p / scale) ** 2
    base = g.edge_costs if use_graph_costs else np.ones(g.edge_count)
    s, upper = target.s, target.upper

    candidates = {}
    oversize = {}
    calls = 0

    def run(lam):
        nonlocal calls
        calls += 1
        mask, edges = solve_arrays(d, g.edge_u, g.edge_v, base * lam, prizes)
        support = frozenset(np.flatnonzero(mask).tolist())
        if len(support) > upper:
            oversize.setdefault(support, (lam, edges))
        else:
            candidates.setdefault(support, lam)
        return len(support)

    n_lo = run(lam_lo)
    n_hi = run(lam_hi)
    if not (s <= n_lo <= upper or s <= n_hi <= upper) and n_lo > upper and n_hi < s:
        lo, hi = math.log(lam_lo), math.log(lam_hi)
        for _ in range(max_bisection_steps):
            mid = 0.5 * (lo + hi)
            n_mid = run(math.exp(mid))
            if s <= n_mid <= upper:
                break
            if n_mid > upper:
                lo = mid
            else:
                hi = mid

    for support, (lam, edges) in oversize.items():
        keep = np.zeros(d, dtype=np.bool_)
        keep[list(support)] = True
        trees = [(g.edge_u[edges], g.edge_v[edges]),
                 _induced_spanning_tree(d, g.edge_u, g.edge_v, keep, prizes)]
        for tu, tv in trees:
            mask = _heaviest_subtree(d, tu, tv, prizes, upper)
            candidates.setdefault(frozenset(np.flatnonzero(mask).tolist()), lam)
    heaviest = np.argsort(-prizes, kind="stable")[:GREEDY_STARTS]
    for start in heaviest:
        if prizes[start] > 0:
            candidates.setdefault(_greedy_support(g, prizes, int(start), upper), lam_hi)
    candidates.pop(frozenset(), None)

    sq = (p * p).tolist()
    support = min(candidates, key=lambda c: (_excluded_mass(sq, c), len(c), sorted(c)))
    projected = np.zeros(d)
    idx = sorted(support)
    projected[idx] = p[idx]
    return ProjectionResult(projected, support, candidates[support], calls)


def exact_project_bruteforce(g, p, s, max_nodes=12, max_sparsity=4):
    """Connected support of size <= ``s`` retaining the most squared mass.

    Exhaustive; ties go to the lexicographically smallest sorted index tuple
    (the empty set wins when ``p`` is zero).
    """
    p = np.asarray(p, dtype=np.float64)
    d = g.node_count
    if d > max_nodes or s > max_sparsity:
        raise ValueError(f"brute force needs d <= {max_nodes} and s <= {max_sparsity}")
    if p.shape != (d,):
        raise ValueError(f"vector has shape {p.shape} but the graph has {d} nodes")
    sq = (p * p).tolist()
    best, best_key = (), (0.0, ())
    for size in range(1, min(s, d) + 1):
        for subset in itertools.combinations(range(d), size):
            if not is_connected_subgraph(g, subset):
                continue
            key = (-math.fsum(sq[i] for i in subset), subset)
            if key < best_key:
                best, best_key = subset, key
    return frozenset(best)
