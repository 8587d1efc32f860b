"""Prize-collecting Steiner tree: objective, approximate solver, exhaustive oracle.

The solver runs Goemans-Williamson moat growing on the unrooted instance,
stopping once ``target_components`` clusters remain active, then applies
strong pruning with the best root to every tree of the grown forest.
"""
import heapq
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .graph import FeatureGraph

EVENT_TOL = 1e-12


@dataclass(frozen=True)
class PCSTInstance:
    """Instance of ``beta * sum(excluded prizes) + sum(edge costs) + omega * components``."""

    graph: FeatureGraph
    prizes: np.ndarray
    prize_scale: float = 1.0
    component_penalty: float = 0.0
    target_components: int = 1

    def __post_init__(self):
        prizes = np.asarray(self.prizes, dtype=np.float64)
        if prizes.shape != (self.graph.node_count,):
            raise ValueError(f"expected {self.graph.node_count} prizes, got shape {prizes.shape}")
        if not np.all(np.isfinite(prizes)) or np.any(prizes < 0):
            raise ValueError("prizes must be finite and nonnegative")
        if not (math.isfinite(self.prize_scale) and self.prize_scale >= 0):
            raise ValueError("prize_scale must be finite and nonnegative")
        if not (math.isfinite(self.component_penalty) and self.component_penalty >= 0):
            raise ValueError("component_penalty must be finite and nonnegative")
        if int(self.target_components) < 1:
            raise ValueError("target_components must be a positive integer")
        object.__setattr__(self, "prizes", prizes)


@dataclass(frozen=True)
class PCSTSolution:
    nodes: frozenset
    edges: tuple = field(default=())
    objective_value: float = 0.0


def _components(nodes, edge_pairs):
    parent = {v: v for v in nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    count = len(parent)
    for u, v in edge_pairs:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            count -= 1
    return count


def evaluate_objective(inst, nodes, edges=()):
    """Objective value of selecting ``nodes`` joined by edge indices ``edges``."""
    g = inst.graph
    nodes = set(int(v) for v in nodes)
    for v in nodes:
        if not 0 <= v < g.node_count:
            raise ValueError(f"node {v} is not in the graph")
    pairs = []
    edge_cost = []
    for e in edges:
        e = int(e)
        if not 0 <= e < g.edge_count:
            raise ValueError(f"edge index {e} is not in the graph")
        u, v = int(g.edge_u[e]), int(g.edge_v[e])
        if u not in nodes or v not in nodes:
            raise ValueError(f"edge {e} has an endpoint outside the selected nodes")
        pairs.append((u, v))
        edge_cost.append(float(g.edge_costs[e]))
    excluded = math.fsum(float(p) for i, p in enumerate(inst.prizes) if i not in nodes)
    return (inst.prize_scale * excluded + math.fsum(edge_cost)
            + inst.component_penalty * _components(nodes, pairs))


@njit(cache=True)
def _moat(c, now, moat, t_upd, active):
    if active[c]:
        return moat[c] + (now - t_upd[c])
    return moat[c]


@njit(cache=True)
def _remaining(c, now, rem, t_upd, active):
    if active[c]:
        return rem[c] - (now - t_upd[c])
    return rem[c]


@njit(cache=True)
def _edge_time(e, now, eu, ev, cost, root_of, off, moat, t_upd, active):
    """Absolute time edge ``e`` becomes tight, or -1 if it is internal or idle."""
    a = eu[e]
    b = ev[e]
    ra = root_of[a]
    rb = root_of[b]
    if ra == rb:
        return -1.0
    rate = 0
    if active[ra]:
        rate += 1
    if active[rb]:
        rate += 1
    if rate == 0:
        return -1.0
    slack = (cost[e] - off[a] - _moat(ra, now, moat, t_upd, active)
             - off[b] - _moat(rb, now, moat, t_upd, active))
    if slack < 0.0:
        slack = 0.0
    return now + slack / rate


@njit(cache=True)
def _grow(n, eu, ev, cost, prizes, target_active):
    """Moat growing. Returns merge-edge indices in the order they were added.

    Node ``u`` has accumulated dual ``off[u] + moat(root_of[u])``. Merged
    clusters keep the id of the larger side; the smaller side's offsets are
    rebased. Edge heap entries are validated lazily on pop; the only event
    that makes a stored edge time too late is an inactive cluster joining an
    active one, so exactly those edges are re-pushed.
    """
    m = eu.shape[0]
    moat = np.zeros(n)
    t_upd = np.zeros(n)
    rem = prizes.copy()
    active = prizes > 0.0
    size = np.ones(n, dtype=np.int64)
    version = np.zeros(n, dtype=np.int64)
    root_of = np.arange(n)
    off = np.zeros(n)
    head = np.arange(n)
    tail = np.arange(n)
    nxt = np.full(n, -1, dtype=np.int64)

    deg = np.zeros(n + 1, dtype=np.int64)
    for e in range(m):
        deg[eu[e] + 1] += 1
        deg[ev[e] + 1] += 1
    for i in range(n):
        deg[i + 1] += deg[i]
    inc = np.empty(2 * m, dtype=np.int64)
    fill = deg[:n].copy()
    for e in range(m):
        inc[fill[eu[e]]] = e
        fill[eu[e]] += 1
        inc[fill[ev[e]]] = e
        fill[ev[e]] += 1

    now = 0.0
    num_active = 0
    ch = [(0.0, np.int64(0), np.int64(0))]
    ch.pop()
    for c in range(n):
        if active[c]:
            num_active += 1
            heapq.heappush(ch, (rem[c], np.int64(c), np.int64(0)))
    eh = [(0.0, np.int64(0))]
    eh.pop()
    for e in range(m):
        t = _edge_time(e, now, eu, ev, cost, root_of, off, moat, t_upd, active)
        if t >= 0.0:
            eh.append((t, np.int64(e)))
    heapq.heapify(eh)

    merged = np.empty(max(n - 1, 0), dtype=np.int64)
    n_merged = 0

    while num_active > target_active:
        while len(ch) > 0:
            tc, c, ver = ch[0]
            if root_of[c] == c and active[c] and version[c] == ver:
                break
            heapq.heappop(ch)
        t_cluster = ch[0][0] if len(ch) > 0 else np.inf

        # heap order (time, edge index) breaks exact ties toward the lowest edge
        best_e = -1
        best_t = np.inf
        while len(eh) > 0:
            tk, e = eh[0]
            t = _edge_time(e, now, eu, ev, cost, root_of, off, moat, t_upd, active)
            if t < 0.0:
                heapq.heappop(eh)
                continue
            if t > tk + EVENT_TOL:
                heapq.heapreplace(eh, (t, e))
                continue
            best_e = e
            best_t = max(now, t)
            break

        if best_e < 0 and len(ch) == 0:
            break
        if best_e >= 0 and best_t <= t_cluster + EVENT_TOL:
            heapq.heappop(eh)
            now = best_t
            ra = root_of[eu[best_e]]
            rb = root_of[ev[best_e]]
            if size[ra] < size[rb]:
                ra, rb = rb, ra
            ma = _moat(ra, now, moat, t_upd, active)
            mb = _moat(rb, now, moat, t_upd, active)
            r_new = (_remaining(ra, now, rem, t_upd, active)
                     + _remaining(rb, now, rem, t_upd, active))
            if r_new < 0.0:
                r_new = 0.0
            was_a = active[ra]
            was_b = active[rb]
            if was_a:
                num_active -= 1
            if was_b:
                num_active -= 1
            node = head[rb]
            while node != -1:
                off[node] += mb - ma
                root_of[node] = ra
                node = nxt[node]
            nxt[tail[ra]] = head[rb]
            tail[ra] = tail[rb]
            size[ra] += size[rb]
            active[rb] = False
            moat[ra] = ma
            t_upd[ra] = now
            rem[ra] = r_new
            version[ra] += 1
            active[ra] = r_new > EVENT_TOL
            merged[n_merged] = best_e
            n_merged += 1
            if active[ra]:
                num_active += 1
                heapq.heappush(ch, (now + r_new, np.int64(ra), version[ra]))
                # the formerly idle side now grows: its boundary edges speed up
                if not was_a or not was_b:
                    start = head[ra] if not was_a else head[rb]
                    node = start
                    while node != -1:
                        for q in range(deg[node], deg[node + 1]):
                            e = inc[q]
                            t = _edge_time(e, now, eu, ev, cost, root_of, off, moat,
                                           t_upd, active)
                            if t >= 0.0:
                                heapq.heappush(eh, (t, e))
                        node = nxt[node]
                        if not was_a and node == head[rb]:
                            break
        else:
            tc, c, ver = heapq.heappop(ch)
            now = max(now, tc)
            moat[c] = _moat(c, now, moat, t_upd, active)
            t_upd[c] = now
            rem[c] = 0.0
            active[c] = False
            version[c] += 1
            num_active -= 1
    return merged[:n_merged]


@njit(cache=True)
def _prune(n, eu, ev, cost, prizes, forest, n_trees, penalty):
    """Keep the best connected subtree (strong pruning, best root) of up to
    ``n_trees`` trees of the forest. Returns (node mask, kept edge indices)."""
    k = forest.shape[0]
    deg = np.zeros(n + 1, dtype=np.int64)
    for j in range(k):
        e = forest[j]
        deg[eu[e] + 1] += 1
        deg[ev[e] + 1] += 1
    for i in range(n):
        deg[i + 1] += deg[i]
    adj = np.empty(2 * k, dtype=np.int64)
    adj_e = np.empty(2 * k, dtype=np.int64)
    fill = deg[:n].copy()
    for j in range(k):
        e = forest[j]
        a = eu[e]
        b = ev[e]
        adj[fill[a]] = b
        adj_e[fill[a]] = e
        fill[a] += 1
        adj[fill[b]] = a
        adj_e[fill[b]] = e
        fill[b] += 1

    parent = np.full(n, -1, dtype=np.int64)
    parent_e = np.full(n, -1, dtype=np.int64)
    comp = np.full(n, -1, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    n_order = 0
    n_comp = 0
    for s in range(n):
        if comp[s] != -1:
            continue
        comp[s] = n_comp
        top = 0
        stack[0] = s
        top = 1
        while top > 0:
            top -= 1
            v = stack[top]
            order[n_order] = v
            n_order += 1
            for q in range(deg[v], deg[v + 1]):
                w = adj[q]
                if comp[w] == -1:
                    comp[w] = n_comp
                    parent[w] = v
                    parent_e[w] = adj_e[q]
                    stack[top] = w
                    top += 1
        n_comp += 1

    worth = prizes.copy()
    for idx in range(n - 1, -1, -1):
        v = order[idx]
        p = parent[v]
        if p != -1:
            contrib = worth[v] - cost[parent_e[v]]
            if contrib > 0.0:
                worth[p] += contrib

    best_node = np.full(n_comp, -1, dtype=np.int64)
    for v in range(n):
        c = comp[v]
        if best_node[c] == -1 or worth[v] > worth[best_node[c]]:
            best_node[c] = v

    chosen = np.zeros(n_comp, dtype=np.bool_)
    for _ in range(n_trees):
        pick = -1
        for c in range(n_comp):
            if chosen[c]:
                continue
            v = best_node[c]
            if pick == -1 or worth[v] > worth[best_node[pick]]:
                pick = c
        if pick == -1 or worth[best_node[pick]] <= penalty:
            break
        chosen[pick] = True

    keep = np.zeros(n, dtype=np.bool_)
    kept_edges = np.empty(max(n - 1, 0), dtype=np.int64)
    n_kept = 0
    for c in range(n_comp):
        if not chosen[c]:
            continue
        r = best_node[c]
        keep[r] = True
        top = 1
        stack[0] = r
        while top > 0:
            top -= 1
            v = stack[top]
            for q in range(deg[v], deg[v + 1]):
                w = adj[q]
                if parent[w] == v and worth[w] - cost[adj_e[q]] > 0.0:
                    keep[w] = True
                    kept_edges[n_kept] = adj_e[q]
                    n_kept += 1
                    stack[top] = w
                    top += 1
    return keep, kept_edges[:n_kept]


def solve_arrays(node_count, edge_u, edge_v, edge_costs, prizes, target_components=1,
                 component_penalty=0.0):
    """Array-level solver used by the projection's inner loop.

    Returns ``(node_mask, edge_indices)``; prizes are assumed already scaled.
    """
    forest = _grow(node_count, edge_u, edge_v, edge_costs, prizes, target_components)
    return _prune(node_count, edge_u, edge_v, edge_costs, prizes, forest,
                  target_components, float(component_penalty))


def solve_pcst(inst):
    """Approximately minimize the PCST objective over forests of at most
    ``inst.target_components`` trees.

    An empty solution is returned when no subtree's prize outweighs its
    edge cost plus the component penalty.
    """
    g = inst.graph
    prizes = inst.prize_scale * inst.prizes
    mask, edges = solve_arrays(g.node_count, g.edge_u, g.edge_v, g.edge_costs, prizes,
                               int(inst.target_components), inst.component_penalty)
    nodes = frozenset(int(i) for i in np.flatnonzero(mask))
    edges = tuple(sorted(int(e) for e in edges))
    return PCSTSolution(nodes, edges, evaluate_objective(inst, nodes, edges))


def _kruskal(nodes, candidate_edges, g):
    parent = {v: v for v in nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    chosen = []
    for e in sorted(candidate_edges, key=lambda e: (g.edge_costs[e], e)):
        ru, rv = find(int(g.edge_u[e])), find(int(g.edge_v[e]))
        if ru != rv:
            parent[ru] = rv
            chosen.append(e)
    return chosen


def brute_force_pcst(inst, max_nodes=15):
    """Exact single-tree optimum by enumerating every connected node subset.

    The edge term of each subset is its minimum spanning tree weight.
    Exponential; refuses graphs with more than ``max_nodes`` nodes.
    """
    g = inst.graph
    d = g.node_count
    if d > max_nodes:
        raise ValueError(f"brute force limited to {max_nodes} nodes, graph has {d}")
    best = PCSTSolution(frozenset(), (), evaluate_objective(inst, ()))
    for size in range(1, d + 1):
        for subset in itertools.combinations(range(d), size):
            members = set(subset)
            inner = [e for e in range(g.edge_count)
                     if g.edge_u[e] in members and g.edge_v[e] in members]
            tree = _kruskal(members, inner, g)
            if len(tree) != size - 1:
                continue
            value = evaluate_objective(inst, members, tree)
            if value < best.objective_value:
                best = PCSTSolution(frozenset(members), tuple(sorted(tree)), value)
    return best
