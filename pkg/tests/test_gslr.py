import numpy as np
import pytest

from gslr.graph import FeatureGraph, grid_graph, is_connected_subgraph
from gslr.graph_sparse import GSLRConfig, fit_gslr
from gslr.logistic import LabeledDataset, NonFiniteLossError, WeightVector, logistic_loss
from gslr.logistic import refit_on_support


def planted_dataset(g, support, n=120, k=2, seed=0, strength=2.0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, g.node_count))
    y = np.arange(n) % k
    for c in range(1, k):
        shift = np.zeros(g.node_count)
        shift[sorted(support)] = strength * (1 if c % 2 else -1)
        X[y == c] += shift
    return LabeledDataset(X, y, ground_truth_support=support)


class TestConfig:
    @pytest.mark.parametrize("kwargs", [dict(sparsity=0), dict(sparsity=3, iterations=0),
                                        dict(sparsity=3, step_size=-1.0),
                                        dict(sparsity=3, multiclass_support_rule="other")])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            GSLRConfig(**kwargs)

    def test_to_dict_roundtrips(self):
        cfg = GSLRConfig(sparsity=4, iterations=7)
        assert GSLRConfig(**{**cfg.to_dict(), "lambda_bounds": tuple(cfg.lambda_bounds)}) == cfg


class TestFit:
    def test_zero_step_gives_zero_model(self):
        g = grid_graph(3, 3)
        ds = planted_dataset(g, {0, 1})
        model = fit_gslr(ds, g, GSLRConfig(sparsity=2, step_size=0.0, iterations=1, refit=False))
        assert not np.any(model.weights.coefficients)
        assert model.support == frozenset()

    def test_single_informative_feature(self):
        g = FeatureGraph(["a", "b"], [(0, 1, 1.0)])
        rng = np.random.default_rng(0)
        X = rng.standard_normal((200, 2))
        y = (X[:, 0] > 0).astype(int)
        ds = LabeledDataset(X, y)
        model = fit_gslr(ds, g, GSLRConfig(sparsity=1, iterations=50))
        losses = {j: logistic_loss(ds, refit_on_support(ds, WeightVector.zeros(2, 2), {j},
                                                        n_iter=500)) for j in (0, 1)}
        assert model.support == {min(losses, key=losses.get)} == {0}

    def test_recovers_planted_connected_support(self):
        g = grid_graph(8, 8)
        truth = {g.index_of(n) for n in ("2_2", "2_3", "3_3", "4_3", "4_4")}
        ds = planted_dataset(g, truth, n=200, strength=1.0)
        model = fit_gslr(ds, g, GSLRConfig(sparsity=5, iterations=60))
        assert is_connected_subgraph(g, model.support)
        assert len(model.support & truth) >= 4

    def test_trace_records(self):
        g = grid_graph(4, 4)
        ds = planted_dataset(g, {5, 6})
        model = fit_gslr(ds, g, GSLRConfig(sparsity=3, iterations=5))
        assert [t["iteration"] for t in model.trace] == [1, 2, 3, 4, 5]
        for t in model.trace:
            assert set(t) == {"iteration", "loss_before_projection", "loss_after_projection",
                              "support_size", "lambda_used", "solver_calls"}
            assert t["support_size"] <= 3
            assert t["loss_after_projection"] >= 0

    def test_every_iterate_is_graph_sparse(self):
        g = grid_graph(6, 6)
        ds = planted_dataset(g, {7, 8, 14})
        for iters in (1, 3, 10):
            model = fit_gslr(ds, g, GSLRConfig(sparsity=4, iterations=iters, refit=False))
            sup = model.weights.support()
            assert sup <= model.support
            assert len(model.support) <= 4 and is_connected_subgraph(g, model.support)

    def test_default_returns_last_projected_iterate(self):
        g = grid_graph(5, 5)
        ds = planted_dataset(g, {6, 7, 12}, strength=0.7)
        model = fit_gslr(ds, g, GSLRConfig(sparsity=3, iterations=12))
        assert logistic_loss(ds, model.weights) == model.trace[-1]["loss_after_projection"]

    def test_refit_keeps_support_and_lowers_loss(self):
        g = grid_graph(5, 5)
        ds = planted_dataset(g, {6, 7, 12}, strength=0.7)
        plain = fit_gslr(ds, g, GSLRConfig(sparsity=3, iterations=20, refit=False))
        refit = fit_gslr(ds, g, GSLRConfig(sparsity=3, iterations=20, refit=True))
        assert plain.support == refit.support
        assert logistic_loss(ds, refit.weights) <= logistic_loss(ds, plain.weights) + 1e-12

    def test_deterministic(self):
        g = grid_graph(5, 5)
        ds = planted_dataset(g, {0, 1, 5})
        a = fit_gslr(ds, g, GSLRConfig(sparsity=3, iterations=10))
        b = fit_gslr(ds, g, GSLRConfig(sparsity=3, iterations=10))
        np.testing.assert_array_equal(a.weights.coefficients, b.weights.coefficients)
        assert a.trace == b.trace

    def test_dimension_mismatch_names_sizes(self):
        ds = planted_dataset(grid_graph(3, 3), {0})
        with pytest.raises(ValueError, match="9 features.*16 nodes"):
            fit_gslr(ds, grid_graph(4, 4), GSLRConfig(sparsity=2))

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_diverging_step(self):
        g = grid_graph(3, 3)
        ds = planted_dataset(g, {0}, strength=1e6)
        with pytest.raises(NonFiniteLossError):
            fit_gslr(ds, g, GSLRConfig(sparsity=2, step_size=1e300, iterations=5))


class TestMulticlass:
    def test_shared_rule_zeroes_all_classes_off_support(self):
        g = grid_graph(5, 5)
        ds = planted_dataset(g, {6, 7, 8}, k=3)
        model = fit_gslr(ds, g, GSLRConfig(sparsity=3, iterations=20))
        off = sorted(set(range(25)) - model.support)
        assert not np.any(model.weights.coefficients[:, off])
        assert model.class_supports is None
        assert model.weights.coefficients.shape == (3, 25)

    def test_per_class_rule(self):
        g = grid_graph(5, 5)
        ds = planted_dataset(g, {6, 7, 8}, k=3)
        model = fit_gslr(ds, g, GSLRConfig(sparsity=2, iterations=20,
                                           multiclass_support_rule="per-class"))
        assert len(model.class_supports) == 3
        for k, sup in enumerate(model.class_supports):
            assert is_connected_subgraph(g, sup) and len(sup) <= 2
            assert set(np.flatnonzero(model.weights.coefficients[k])) <= sup
        assert model.support == frozenset().union(*model.class_supports)

    def test_shared_prizes_are_row_norms(self):
        # with shared support the projection sees sqrt(sum_k w_k^2), so a single
        # iteration picks the support that the projection picks on that vector
        from gslr.logistic import _gradient, lipschitz_constant
        from gslr.projection import project

        g = grid_graph(4, 4)
        ds = planted_dataset(g, {5, 6}, k=3)
        eta = 1.0 / lipschitz_constant(ds.features)
        gc, _ = _gradient(ds.features, ds.labels, np.zeros((3, 16)), np.zeros(3))
        expected = project(g, np.sqrt(np.sum((eta * gc) ** 2, axis=0)), 2).support
        model = fit_gslr(ds, g, GSLRConfig(sparsity=2, iterations=1, refit=False))
        assert model.support == expected
