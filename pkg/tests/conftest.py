import numpy as np
import pytest

from gslr.graph import FeatureGraph


def random_graph(rng, n, edge_prob=0.4, cost_range=(0.0, 5.0), connected=False):
    """Erdos-Renyi style graph; ``connected`` first lays a random spanning tree."""
    names = [f"v{i}" for i in range(n)]
    pairs = set()
    if connected:
        order = rng.permutation(n)
        for k in range(1, n):
            a, b = int(order[k]), int(order[rng.integers(k)])
            pairs.add((min(a, b), max(a, b)))
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < edge_prob:
                pairs.add((a, b))
    lo, hi = cost_range
    edges = [(a, b, float(rng.uniform(lo, hi))) for a, b in sorted(pairs)]
    return FeatureGraph(names, edges)


def path_graph(names, cost=1.0):
    return FeatureGraph(list(names), [(i, i + 1, cost) for i in range(len(names) - 1)])


def star_graph(leaves, cost=1.0):
    return FeatureGraph([str(i) for i in range(leaves + 1)],
                        [(0, i, cost) for i in range(1, leaves + 1)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
