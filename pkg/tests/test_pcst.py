import math
import time

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gslr.graph import FeatureGraph, connected_components, grid_graph
from gslr.pcst import PCSTInstance, brute_force_pcst, evaluate_objective, solve_pcst

from conftest import random_graph, star_graph


def _two_nodes(prizes, cost):
    return PCSTInstance(FeatureGraph(["0", "1"], [(0, 1, cost)]), np.array(prizes, float))


def _assert_forest(inst, sol):
    g = inst.graph
    for e in sol.edges:
        assert g.edge_u[e] in sol.nodes and g.edge_v[e] in sol.nodes
    n_comp = len(connected_components(g.__class__(
        g.node_names, [g.edges[e] for e in sol.edges]), sol.nodes)) if sol.nodes else 0
    # a forest on |nodes| vertices with |edges| edges has |nodes| - |edges| components
    assert len(sol.nodes) - len(sol.edges) == n_comp
    return n_comp


class TestObjective:
    def test_both_nodes(self):
        assert evaluate_objective(_two_nodes([5, 1], 3), {0, 1}, [0]) == 3

    def test_single_node(self):
        assert evaluate_objective(_two_nodes([5, 1], 3), {0}) == 1

    def test_empty(self):
        assert evaluate_objective(_two_nodes([5, 1], 3), set()) == 6

    def test_component_penalty_and_scale(self):
        inst = PCSTInstance(FeatureGraph(["a", "b", "c"], [(0, 1, 1.0)]), np.array([1, 2, 4.0]),
                            prize_scale=2.0, component_penalty=0.5)
        # nodes {a, c} without edges: two components, excluded prize 2
        assert evaluate_objective(inst, {0, 2}) == pytest.approx(2 * 2 + 0 + 0.5 * 2)

    def test_edge_outside_nodes_rejected(self):
        with pytest.raises(ValueError):
            evaluate_objective(_two_nodes([5, 1], 3), {0}, [0])

    def test_negative_prize_rejected(self):
        with pytest.raises(ValueError):
            _two_nodes([-1, 1], 1)


class TestSolveExamples:
    def test_star(self):
        inst = PCSTInstance(star_graph(3), np.array([0, 10, 10, 10.0]))
        sol = solve_pcst(inst)
        assert sol.nodes == frozenset(range(4))
        assert sol.objective_value == 3
        assert brute_force_pcst(inst).objective_value == 3

    def test_expensive_edge(self):
        sol = solve_pcst(_two_nodes([10, 0.1], 5))
        assert sol.nodes == frozenset({0})
        assert sol.objective_value == pytest.approx(0.1)

    def test_zero_prizes_give_empty(self):
        sol = solve_pcst(PCSTInstance(grid_graph(3, 3), np.zeros(9)))
        assert sol.nodes == frozenset()
        assert sol.objective_value == 0

    def test_brute_force_single_node(self):
        inst = PCSTInstance(FeatureGraph(["x"], []), np.array([7.0]))
        assert brute_force_pcst(inst).objective_value == 0

    def test_brute_force_triangle(self):
        g = FeatureGraph(["a", "b", "c"], [(0, 1, 10), (1, 2, 10), (0, 2, 10)])
        sol = brute_force_pcst(PCSTInstance(g, np.ones(3)))
        assert sol.objective_value == 2
        assert len(sol.nodes) == 1

    def test_brute_force_size_limit(self):
        with pytest.raises(ValueError):
            brute_force_pcst(PCSTInstance(grid_graph(4, 4), np.ones(16)))


class TestSolveProperties:
    @settings(max_examples=150, deadline=None)
    @given(seed=st.integers(0, 2**31 - 1), n=st.integers(1, 9))
    def test_within_factor_two_of_optimum(self, seed, n):
        rng = np.random.default_rng(seed)
        g = random_graph(rng, n, edge_prob=rng.uniform(0.1, 0.8))
        inst = PCSTInstance(g, rng.uniform(0, 10, n))
        sol = solve_pcst(inst)
        best = brute_force_pcst(inst)
        assert sol.objective_value <= 2 * best.objective_value + 1e-9
        assert _assert_forest(inst, sol) <= 1
        assert sol.objective_value == pytest.approx(evaluate_objective(inst, sol.nodes, sol.edges))
        # strong pruning never returns something worse than the empty solution
        assert sol.objective_value <= inst.prizes.sum() + 1e-9

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**31 - 1), n=st.integers(2, 10))
    def test_huge_prizes_give_minimum_spanning_tree(self, seed, n):
        rng = np.random.default_rng(seed)
        g = random_graph(rng, n, edge_prob=0.4, connected=True)
        inst = PCSTInstance(g, np.full(n, 10 * max(g.edge_costs.sum(), 1.0)))
        sol = solve_pcst(inst)
        ref = nx.Graph()
        ref.add_weighted_edges_from(g.edges)
        mst = sum(d["weight"] for *_, d in nx.minimum_spanning_edges(ref, data=True))
        assert sol.nodes == frozenset(range(n))
        assert math.isclose(sum(g.edge_costs[list(sol.edges)]), mst, rel_tol=1e-12, abs_tol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**31 - 1), kappa=st.integers(1, 4))
    def test_forest_respects_component_target(self, seed, kappa):
        rng = np.random.default_rng(seed)
        g = random_graph(rng, 12, edge_prob=0.2)
        inst = PCSTInstance(g, rng.uniform(0, 10, 12), target_components=kappa,
                            component_penalty=float(rng.uniform(0, 2)))
        sol = solve_pcst(inst)
        assert _assert_forest(inst, sol) <= kappa

    def test_prize_scale_zero_gives_empty(self):
        inst = PCSTInstance(grid_graph(3, 3), np.ones(9), prize_scale=0.0)
        assert solve_pcst(inst).nodes == frozenset()

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        g = grid_graph(10, 10)
        inst = PCSTInstance(g, rng.uniform(0, 3, 100))
        assert solve_pcst(inst) == solve_pcst(inst)

    def test_zero_cost_edges(self):
        g = FeatureGraph(list("abcd"), [(0, 1, 0.0), (1, 2, 0.0), (2, 3, 0.0)])
        sol = solve_pcst(PCSTInstance(g, np.array([1.0, 0, 0, 1.0])))
        assert sol.nodes == frozenset(range(4))
        assert sol.objective_value == 0

    def test_large_grid_is_fast(self):
        g = grid_graph(30, 30)
        inst = PCSTInstance(g, np.random.default_rng(0).exponential(1.0, 900))
        solve_pcst(inst)
        start = time.perf_counter()
        for _ in range(10):
            solve_pcst(inst)
        assert (time.perf_counter() - start) / 10 < 0.25
