import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gslr.logistic import (LabeledDataset, NonFiniteLossError, WeightVector, fit_l1_logistic,
                           lipschitz_constant, logistic_gradient, logistic_loss, predict_proba,
                           refit_on_support, soft_threshold)


def random_dataset(rng, n=40, d=5, k=2):
    X = rng.standard_normal((n, d))
    y = np.concatenate([np.arange(k), rng.integers(0, k, n - k)])
    return LabeledDataset(X, y, n_classes=k)


def random_weights(rng, k, d, scale=1.0):
    return WeightVector(scale * rng.standard_normal((k, d)), scale * rng.standard_normal(k))


def finite_difference(ds, w, h=1e-5):
    theta = np.concatenate([w.coefficients.ravel(), w.intercept])
    k, d = w.coefficients.shape
    out = np.empty_like(theta)

    def f(t):
        return logistic_loss(ds, WeightVector(t[:k * d].reshape(k, d), t[k * d:]))

    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        out[i] = (f(theta + e) - f(theta - e)) / (2 * h)
    return out


class TestDataset:
    def test_label_range(self):
        with pytest.raises(ValueError, match="0..1"):
            LabeledDataset(np.zeros((3, 2)), [0, 1, 2], n_classes=2)

    def test_missing_class(self):
        with pytest.raises(ValueError, match="no samples"):
            LabeledDataset(np.zeros((3, 2)), [0, 0, 2])

    def test_non_finite(self):
        with pytest.raises(ValueError):
            LabeledDataset(np.array([[np.inf]]), [0])

    def test_subset_keeps_metadata(self):
        ds = LabeledDataset(np.eye(4), [0, 1, 0, 1], ground_truth_support={2},
                            feature_names=list("abcd"))
        sub = ds.subset([0, 1])
        assert sub.ground_truth_support == {2}
        assert sub.feature_names == list("abcd")


class TestLoss:
    @pytest.mark.parametrize("k", [2, 3, 5])
    def test_zero_weights_give_log_k(self, k):
        ds = random_dataset(np.random.default_rng(k), n=30, d=4, k=k)
        assert abs(logistic_loss(ds, WeightVector.zeros(k, 4)) - math.log(k)) <= 1e-12

    def test_saturation(self):
        ds = LabeledDataset(np.array([[1.0], [-1.0]]), [1, 0])
        losses = [logistic_loss(ds, WeightVector([[-m], [m]], [0, 0])) for m in (1, 5, 10, 20)]
        assert all(a > b for a, b in zip(losses, losses[1:]))
        assert losses[-1] < 1e-17

    def test_extreme_logits_stay_finite(self):
        ds = LabeledDataset(np.array([[1.0], [-1.0]]), [0, 1])
        value = logistic_loss(ds, WeightVector([[-1e6], [1e6]], [0, 0]))
        assert value == pytest.approx(2e6)

    def test_dimension_mismatch(self):
        ds = random_dataset(np.random.default_rng(0))
        with pytest.raises(ValueError, match="features"):
            logistic_loss(ds, WeightVector.zeros(2, 4))


class TestGradient:
    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**31 - 1), k=st.sampled_from([2, 3]))
    def test_matches_central_differences(self, seed, k):
        rng = np.random.default_rng(seed)
        ds = random_dataset(rng, n=30, d=4, k=k)
        w = random_weights(rng, k, 4)
        g = logistic_gradient(ds, w)
        analytic = np.concatenate([g.coefficients.ravel(), g.intercept])
        numeric = finite_difference(ds, w)
        assert np.linalg.norm(analytic - numeric) <= 1e-5 * np.linalg.norm(analytic)

    def test_symmetric_data_zero_coefficient_gradient(self):
        x = np.random.default_rng(0).standard_normal((10, 3))
        # each x appears in one class and -x in the other, and vice versa
        ds = LabeledDataset(np.vstack([x, -x, -x, x]), [0] * 10 + [1] * 10 + [0] * 10 + [1] * 10)
        g = logistic_gradient(ds, WeightVector.zeros(2, 3))
        np.testing.assert_allclose(g.coefficients, 0, atol=1e-15)

    def test_intercept_at_zero(self):
        ds = LabeledDataset(np.zeros((10, 2)), [1, 1, 1, 0, 0, 0, 0, 0, 0, 0])
        g = logistic_gradient(ds, WeightVector.zeros(2, 2))
        assert g.intercept[1] == pytest.approx(0.5 - 0.3)
        assert g.intercept[0] == pytest.approx(0.5 - 0.7)


class TestPredictProba:
    def test_zero_weights_uniform(self):
        P = predict_proba(np.ones((4, 3)), WeightVector.zeros(3, 3))
        np.testing.assert_allclose(P, 1 / 3)

    def test_decision_boundary(self):
        w = WeightVector([[0.0, 0.0], [1.0, -1.0]], [0.0, 0.0])
        assert predict_proba(np.array([[2.0, 2.0]]), w)[0, 1] == pytest.approx(0.5)

    def test_monotone_in_margin(self):
        w = WeightVector([[0.0], [1.0]], [0.0, 0.0])
        p = predict_proba(np.linspace(-5, 5, 50)[:, None], w)[:, 1]
        assert np.all(np.diff(p) > 0)

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(0)
        P = predict_proba(rng.standard_normal((20, 4)), random_weights(rng, 5, 4, scale=10))
        np.testing.assert_allclose(P.sum(axis=1), 1.0)


class TestSoftThreshold:
    def test_definition(self):
        np.testing.assert_array_equal(soft_threshold([3, -1, 0.5], 1), [2, 0, 0])

    def test_zero_threshold(self):
        v = np.array([1.5, -2.0, 0.0])
        np.testing.assert_array_equal(soft_threshold(v, 0), v)

    def test_large_threshold(self):
        assert not np.any(soft_threshold([1, -4, 2], 4))

    def test_negative_threshold(self):
        with pytest.raises(ValueError):
            soft_threshold([1.0], -0.1)


class TestLipschitz:
    def test_bounds_true_curvature(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((50, 6)) + 2.0
        Xa = np.hstack([X, np.ones((50, 1))])
        exact = np.linalg.eigvalsh(Xa.T @ Xa / 50)[-1] / 2
        assert lipschitz_constant(X) == pytest.approx(exact, rel=1e-3)

    def test_zero_matrix(self):
        assert lipschitz_constant(np.zeros((3, 2))) > 0


class TestL1:
    def test_huge_penalty_gives_base_rate(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((40, 5))
        y = np.array([1] * 10 + [0] * 30)
        w = fit_l1_logistic(LabeledDataset(X, y), 1e3, tol=1e-14)
        assert not np.any(w.coefficients)
        assert w.intercept[1] - w.intercept[0] == pytest.approx(math.log(10 / 30), abs=1e-5)

    def test_descent_without_penalty(self):
        ds = LabeledDataset(np.array([[-1.0], [1.0]]), [0, 1])
        _, history = fit_l1_logistic(ds, 0.0, max_iter=200, return_history=True)
        assert all(b < a for a, b in zip(history, history[1:]))

    def test_history_monotone_with_penalty(self):
        ds = random_dataset(np.random.default_rng(3), n=60, d=8)
        _, history = fit_l1_logistic(ds, 0.05, return_history=True)
        assert np.all(np.diff(history) <= 1e-12)

    def test_optimality_conditions(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((80, 6))
        y = (X[:, 0] - X[:, 1] + 0.5 * rng.standard_normal(80) > 0).astype(int)
        ds = LabeledDataset(X, y)
        reg = 0.02
        w = fit_l1_logistic(ds, reg, tol=0, max_iter=20000)
        g = logistic_gradient(ds, w)
        zero = w.coefficients == 0
        assert np.all(np.abs(g.coefficients[zero]) <= reg + 1e-6)
        np.testing.assert_allclose(g.coefficients[~zero], -reg * np.sign(w.coefficients[~zero]),
                                   atol=1e-6)
        np.testing.assert_allclose(g.intercept, 0, atol=1e-6)

    def test_nested_supports_reported(self):
        ds = random_dataset(np.random.default_rng(7), n=100, d=20)
        big = fit_l1_logistic(ds, 0.1).support()
        small = fit_l1_logistic(ds, 0.01).support()
        # not guaranteed in general; the difference is reported rather than asserted
        print(f"support(reg=0.1) - support(reg=0.01) = {sorted(big - small)}")
        assert len(big) <= len(small)

    def test_negative_penalty(self):
        with pytest.raises(ValueError):
            fit_l1_logistic(random_dataset(np.random.default_rng(0)), -1)

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_oversized_step_raises(self):
        X = np.random.default_rng(0).standard_normal((20, 2)) * 1e6
        ds = LabeledDataset(X, [0, 1] * 10)
        with pytest.raises(NonFiniteLossError):
            fit_l1_logistic(ds, 0.0, step_size=1e300, max_iter=50)


class TestRefit:
    def test_support_preserved_and_loss_drops(self):
        rng = np.random.default_rng(2)
        ds = random_dataset(rng, n=60, d=6)
        start = WeightVector.zeros(2, 6)
        w = refit_on_support(ds, start, {1, 3})
        assert w.support() <= {1, 3}
        assert logistic_loss(ds, w) < logistic_loss(ds, start)

    def test_empty_support(self):
        ds = random_dataset(np.random.default_rng(2))
        w = refit_on_support(ds, WeightVector.zeros(2, 5), set())
        assert not np.any(w.coefficients)

    def test_class_supports(self):
        ds = random_dataset(np.random.default_rng(3), n=60, d=5, k=3)
        w = refit_on_support(ds, WeightVector.zeros(3, 5), {0, 1, 2},
                             class_supports=[{0}, {1}, {2}])
        for k in range(3):
            assert set(np.flatnonzero(w.coefficients[k])) <= {k}
