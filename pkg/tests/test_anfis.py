import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from windcast import anfis
from windcast.anfis import AnfisConfig, AnfisModel
from windcast.errors import AllRulesSilent, DegenerateColumn, DimensionMismatch
from windcast.features import Scaler


def small_model(seed, n=2, m=2, consequents=None):
    r = np.random.default_rng(seed)
    cfg = AnfisConfig(n_inputs=n, mfs_per_input=m)
    centers = np.sort(r.uniform(-1, 1, (n, m)), axis=1)
    sigmas = r.uniform(0.4, 1.2, (n, m))
    if consequents is None:
        consequents = r.normal(size=(m ** n, n + 1))
    return AnfisModel(centers, sigmas, consequents, cfg)


def naive_output(model, x):
    """Rule-by-rule evaluation straight from the definitions."""
    w, f = [], []
    for r, idx in enumerate(model.rules):
        prod = 1.0
        for j, k in enumerate(idx):
            prod *= math.exp(-(x[j] - model.centers[j, k]) ** 2 / (2 * model.sigmas[j, k] ** 2))
        w.append(prod)
        f.append(float(np.dot(model.consequents[r, :-1], x) + model.consequents[r, -1]))
    return math.fsum(wi * fi for wi, fi in zip(w, f)) / math.fsum(w)


def batch_mse(model, X, y):
    out, _ = anfis.forward_batch(model, X)
    return float(np.mean((out - y) ** 2))


class TestPremise:
    def test_init_three_mfs(self):
        c, s = anfis.init_premise(AnfisConfig(n_inputs=1), np.array([[-1.0], [0.3], [1.0]]))
        np.testing.assert_array_equal(c, [[-1, 0, 1]])
        np.testing.assert_array_equal(s, [[0.5, 0.5, 0.5]])

    def test_init_two_mfs(self):
        # width follows the spacing formula: 4 / (2 * 1) = 2
        c, s = anfis.init_premise(AnfisConfig(n_inputs=1, mfs_per_input=2), np.array([[0.0], [4.0]]))
        np.testing.assert_array_equal(c, [[0, 4]])
        np.testing.assert_array_equal(s, [[2, 2]])

    def test_neighbours_cross_near_0_6(self):
        c, s = anfis.init_premise(AnfisConfig(n_inputs=1, mfs_per_input=4), np.array([[-3.0], [5.0]]))
        mid = (c[0, 1] + c[0, 2]) / 2
        assert anfis.gaussian_mf(mid, c[0, 1], s[0, 1]) == pytest.approx(np.exp(-0.5), rel=1e-15)

    def test_degenerate(self):
        with pytest.raises(DegenerateColumn):
            anfis.init_premise(AnfisConfig(n_inputs=2), np.array([[0.0, 1.0], [1.0, 1.0]]))

    def test_mf_at_centre(self):
        assert anfis.gaussian_mf(0.37, 0.37, 0.2) == 1.0

    def test_grid_complete(self):
        rules = anfis.grid_rules(6, 3)
        assert len(rules) == 729
        assert len({tuple(r) for r in rules}) == 729
        np.testing.assert_array_equal(rules[1], [0, 0, 0, 0, 0, 1])


class TestFiring:
    def test_symmetric_pair(self):
        cfg = AnfisConfig(n_inputs=1, mfs_per_input=2)
        m = AnfisModel(np.array([[-1.0, 1.0]]), np.ones((1, 2)), np.zeros((2, 2)), cfg)
        w, wbar = anfis.firing_strengths(m, [0.0])
        np.testing.assert_array_equal(wbar, [0.5, 0.5])

    def test_grid_point_rule_fires_fully(self):
        m = small_model(1)
        x = [m.centers[0, 1], m.centers[1, 0]]
        w, _ = anfis.firing_strengths(m, x)
        assert w[2] == 1.0

    def test_hand_enumerated_products(self):
        # memberships {0.8, 0.2} and {0.5, 0.5} at x = (0, 0)
        cfg = AnfisConfig(n_inputs=2, mfs_per_input=2)
        s = 1.0
        c1 = math.sqrt(-2 * math.log(0.8))
        c2 = math.sqrt(-2 * math.log(0.2))
        c3 = math.sqrt(-2 * math.log(0.5))
        m = AnfisModel(np.array([[c1, c2], [c3, -c3]]), np.full((2, 2), s), np.zeros((4, 3)), cfg)
        w, wbar = anfis.firing_strengths(m, [0.0, 0.0])
        np.testing.assert_allclose(w, [0.4, 0.4, 0.1, 0.1], rtol=1e-14)
        np.testing.assert_allclose(wbar, [0.4, 0.4, 0.1, 0.1], rtol=1e-14)

    def test_silent_input(self):
        cfg = AnfisConfig(n_inputs=1, mfs_per_input=2)
        m = AnfisModel(np.array([[-1.0, 1.0]]), np.full((1, 2), 1e-3), np.zeros((2, 2)), cfg)
        with pytest.raises(AllRulesSilent):
            anfis.firing_strengths(m, [0.0])
        out, ok = anfis.forward_batch(m, np.array([[0.0], [1.0]]))
        assert np.isnan(out[0]) and not ok[0] and ok[1]


class TestForward:
    def test_constant_consequents(self, rng):
        m = small_model(2, consequents=np.tile([0.0, 0.0, 3.25], (4, 1)))
        out, _ = anfis.forward_batch(m, rng.uniform(-2, 2, (50, 2)))
        np.testing.assert_allclose(out, 3.25, rtol=1e-15)

    def test_shared_affine_map(self, rng):
        m = small_model(3, consequents=np.tile([2.0, -0.5, 1.0], (4, 1)))
        X = rng.uniform(-1, 1, (50, 2))
        out, _ = anfis.forward_batch(m, X)
        np.testing.assert_allclose(out, X @ [2.0, -0.5] + 1.0, rtol=0, atol=1e-13)

    def test_weighted_average(self):
        # one input, two rules; membership ratio 1:3 at x = 0
        cfg = AnfisConfig(n_inputs=1, mfs_per_input=2)
        c = math.sqrt(-2 * math.log(1 / 3))
        m = AnfisModel(np.array([[c, 0.0]]), np.ones((1, 2)), np.array([[0.0, 4.0], [0.0, 8.0]]), cfg)
        assert anfis.anfis_forward(m, [0.0]) == pytest.approx(7.0, abs=1e-14)

    def test_matches_naive(self, rng):
        m = small_model(4, n=3, m=3)
        for x in rng.uniform(-1.5, 1.5, (20, 3)):
            assert anfis.anfis_forward(m, x) == pytest.approx(naive_output(m, x), rel=1e-12, abs=1e-14)

    @given(st.integers(0, 10**6))
    @settings(max_examples=40, deadline=None)
    def test_normalized_and_convex(self, seed):
        m = small_model(seed, n=3, m=2)
        x = np.random.default_rng(seed).uniform(-2, 2, 3)
        _, wbar = anfis.firing_strengths(m, x)
        assert abs(wbar.sum() - 1) <= 1e-12
        f = m.consequents[:, :-1] @ x + m.consequents[:, -1]
        y = anfis.anfis_forward(m, x)
        assert f.min() - 1e-12 <= y <= f.max() + 1e-12

    def test_wrong_dimension(self):
        with pytest.raises(DimensionMismatch):
            anfis.anfis_forward(small_model(0), [0.0, 0.0, 0.0])


class TestLse:
    def test_recovers_known_consequents(self, rng):
        truth = small_model(5)
        X = rng.uniform(-1, 1, (200, 2))
        y, _ = anfis.forward_batch(truth, X)
        fitted, skipped = anfis.solve_consequents_lse(replace(truth, consequents=np.zeros((4, 3))), X, y)
        assert skipped == 0
        assert batch_mse(fitted, X, y) < 1e-10

    def test_global_linear_target(self, rng):
        m = small_model(6, consequents=np.zeros((4, 3)))
        X = rng.uniform(-1, 1, (200, 2))
        y = 3 * X[:, 0] - 2 * X[:, 1] + 1
        fitted, _ = anfis.solve_consequents_lse(m, X, y)
        assert batch_mse(fitted, X, y) < 1e-8

    def test_single_row(self):
        m = small_model(7, consequents=np.zeros((4, 3)))
        fitted, _ = anfis.solve_consequents_lse(m, np.array([[0.2, -0.4]]), np.array([1.7]))
        assert anfis.anfis_forward(fitted, [0.2, -0.4]) == pytest.approx(1.7, abs=1e-5)

    def test_local_optimality(self, rng):
        m = small_model(8, consequents=np.zeros((4, 3)))
        X = rng.uniform(-1, 1, (150, 2))
        y = np.sin(2 * X[:, 0]) * X[:, 1] + rng.normal(0, 0.05, 150)
        fitted, _ = anfis.solve_consequents_lse(m, X, y)
        base = batch_mse(fitted, X, y) * len(y)
        for idx in np.ndindex(fitted.consequents.shape):
            for d in (1e-4, -1e-4):
                theta = fitted.consequents.copy()
                theta[idx] += d
                sse = batch_mse(replace(fitted, consequents=theta), X, y) * len(y)
                assert sse >= base * (1 - 1e-9)

    def test_silent_rows_skipped(self):
        cfg = AnfisConfig(n_inputs=1, mfs_per_input=2)
        m = AnfisModel(np.array([[-1.0, 1.0]]), np.full((1, 2), 1e-3), np.zeros((2, 2)), cfg)
        X = np.array([[-1.0], [0.0], [1.0]])
        _, skipped = anfis.solve_consequents_lse(m, X, np.array([1.0, 2.0, 3.0]))
        assert skipped == 1


class TestPremiseGradient:
    @pytest.mark.parametrize("seed", range(5))
    def test_finite_difference(self, seed):
        m = small_model(seed)
        r = np.random.default_rng(seed + 50)
        X = r.uniform(-1, 1, (10, 2))
        y = r.normal(size=10)
        gc, gs = anfis.premise_gradient(m, X, y)
        h = 1e-6
        for name, grad in (("centers", gc), ("sigmas", gs)):
            for idx in np.ndindex(grad.shape):
                up, dn = getattr(m, name).copy(), getattr(m, name).copy()
                up[idx] += h
                dn[idx] -= h
                fd = (batch_mse(replace(m, **{name: up}), X, y) - batch_mse(replace(m, **{name: dn}), X, y)) / (2 * h)
                assert grad[idx] == pytest.approx(fd, rel=1e-5, abs=1e-9)

    def test_zero_error_zero_gradient(self):
        m = small_model(9)
        X = np.array([[m.centers[0, 0], m.centers[1, 1]], [m.centers[0, 1], m.centers[1, 0]]])
        y, _ = anfis.forward_batch(m, X)
        gc, gs = anfis.premise_gradient(m, X, y)
        np.testing.assert_array_equal(gc, 0)
        np.testing.assert_array_equal(gs, 0)

    def test_mirror_symmetry(self, rng):
        cfg = AnfisConfig(n_inputs=1, mfs_per_input=2)
        # even target, mirrored premise and consequents: f_0(x) = f_1(-x)
        m = AnfisModel(np.array([[-0.5, 0.5]]), np.array([[0.4, 0.4]]), np.array([[1.0, 0.2], [-1.0, 0.2]]), cfg)
        x = rng.uniform(0, 1, 8)
        X = np.concatenate([x, -x])[:, None]
        y = np.concatenate([x * x, x * x])
        gc, gs = anfis.premise_gradient(m, X, y)
        assert gc[0, 0] == pytest.approx(-gc[0, 1], rel=1e-12, abs=1e-15)
        assert gs[0, 0] == pytest.approx(gs[0, 1], rel=1e-12, abs=1e-15)


class TestAdaptStep:
    def test_four_decreases(self):
        assert anfis.adapt_step([5, 4, 3, 2, 1], 0.1) == pytest.approx(0.11)

    def test_oscillation(self):
        assert anfis.adapt_step([1, 2, 1, 2, 1], 0.1) == pytest.approx(0.09)

    def test_neutral(self):
        assert anfis.adapt_step([1, 2, 3, 4, 5], 0.1) == 0.1
        assert anfis.adapt_step([3, 2, 1], 0.1) == 0.1


class TestTraining:
    def test_first_epoch_beats_constant_and_zero(self, small_dataset):
        cfg = AnfisConfig(n_inputs=6, mfs_per_input=2, max_epochs=3)
        ds = small_dataset
        X, y = ds.scaled_features()[ds.mask("train")], ds.scaled_target()[ds.mask("train")]
        model, trace = anfis.train_hybrid(anfis.init_model(cfg, X, ds.scaler), ds)
        assert trace.train_mse[0] <= np.var(y)
        assert trace.train_mse[0] <= np.mean(y ** 2)
        assert trace.best_epoch == int(np.nanargmin(trace.val_mse)) + 1

    def test_no_validation_returns_last(self, rng):
        X = rng.uniform(-1, 1, (60, 2))
        y = X[:, 0] * X[:, 1]
        cfg = AnfisConfig(n_inputs=2, mfs_per_input=2, max_epochs=4)
        model, trace = anfis.fit_hybrid(anfis.init_model(cfg, X), X, y)
        assert trace.best_epoch == 4 and trace.epochs == 4
        assert math.isnan(trace.val_mse[0])

    def test_deterministic(self, rng):
        X = rng.uniform(-1, 1, (80, 2))
        y = np.tanh(X[:, 0] - X[:, 1])
        cfg = AnfisConfig(n_inputs=2, mfs_per_input=3, max_epochs=6)
        a = anfis.fit_hybrid(anfis.init_model(cfg, X), X[:60], y[:60], X[60:], y[60:])[0]
        b = anfis.fit_hybrid(anfis.init_model(cfg, X), X[:60], y[:60], X[60:], y[60:])[0]
        assert a.to_json() == b.to_json()

    def test_sigma_floor(self, rng):
        X = rng.uniform(-1, 1, (40, 1))
        cfg = AnfisConfig(n_inputs=1, mfs_per_input=2, max_epochs=5, step_size=50.0, sigma_floor=0.05)
        m = anfis.init_model(cfg, X)
        m = replace(m, sigmas=np.array([[0.06, 0.06]]))
        best, _ = anfis.fit_hybrid(m, X, X[:, 0] ** 2)
        assert np.all(best.sigmas >= 0.05)


class TestPredict:
    def _fitted(self, rng):
        sc = Scaler(np.array([0.0, 10.0]), np.array([10.0, 30.0]), 0.0, 20.0)
        # the diffuse prior biases the fit by O(1/rows); 2000 rows keeps it under 1e-6 m/s
        raw = np.column_stack([rng.uniform(0, 10, 2000), rng.uniform(10, 30, 2000)])
        target = 0.5 * raw[:, 0] + 0.25 * raw[:, 1] + 1
        cfg = AnfisConfig(n_inputs=2, mfs_per_input=2)
        X = sc.transform(raw)
        m = anfis.init_model(cfg, X, sc)
        m, _ = anfis.solve_consequents_lse(m, X, sc.transform_target(target))
        return m, raw, target

    def test_linear_target_recovered(self, rng):
        m, raw, target = self._fitted(rng)
        np.testing.assert_allclose(anfis.anfis_predict(m, raw), target, rtol=0, atol=1e-6)

    def test_batch_is_map_of_single(self, rng):
        m, raw, _ = self._fitted(rng)
        batch = anfis.anfis_predict(m, raw[:5])
        np.testing.assert_array_equal(batch, [anfis.anfis_predict(m, r) for r in raw[:5]])

    def test_silent_rows_named(self, rng):
        m, raw, _ = self._fitted(rng)
        m = replace(m, sigmas=np.full((2, 2), 1e-3))
        with pytest.raises(AllRulesSilent) as info:
            anfis.anfis_predict(m, np.array([[0.0, 10.0], [5.0, 20.0]]))
        assert list(info.value.rows) == [1]

    def test_json_round_trip(self, rng):
        m, raw, _ = self._fitted(rng)
        back = AnfisModel.from_json(m.to_json())
        np.testing.assert_array_equal(back.consequents, m.consequents)
        np.testing.assert_array_equal(back.centers, m.centers)
        np.testing.assert_array_equal(anfis.anfis_predict(back, raw), anfis.anfis_predict(m, raw))
