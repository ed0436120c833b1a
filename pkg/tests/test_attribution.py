"""Shapley attribution: value-function oracle, axiom checks, route
equivalences, and the ranking/plot-data products."""

import numpy as np
import pytest

from scorelens.attribution import (Attribution, BackgroundSet,
                                   decision_plot_data, exact_shapley,
                                   interventional_value, kernel_shap,
                                   linear_shap, rank_instances,
                                   summary_plot_data, tree_shap)
from scorelens.errors import DataError
from scorelens.models import (LogisticRegressionModel, ModelConfig,
                              fit_gradient_boosting, fit_model)


class _AdditiveModel:
    """f(x) = x0 + x1 (identity link)."""

    family = "mlp"   # treated as black-box
    feature_width = 2
    link = "identity"

    def attribution_output(self, X):
        X = np.atleast_2d(X)
        return X[:, 0] + X[:, 1]


class _ProductModel:
    family = "mlp"
    feature_width = 2
    link = "identity"

    def attribution_output(self, X):
        X = np.atleast_2d(X)
        return X[:, 0] * X[:, 1]


class _IgnoresSecondFeature:
    family = "mlp"
    feature_width = 3
    link = "identity"

    def attribution_output(self, X):
        X = np.atleast_2d(X)
        return np.sin(X[:, 0]) + X[:, 2] ** 2


class TestInterventionalValue:
    def test_full_coalition_is_prediction(self, rng):
        model = _AdditiveModel()
        bg = BackgroundSet(rows=rng.normal(size=(7, 2)))
        x = np.array([3.0, 4.0])
        assert interventional_value(model, x, [0, 1], bg) == pytest.approx(7.0)

    def test_empty_coalition_is_background_mean(self, rng):
        model = _AdditiveModel()
        rows = rng.normal(size=(9, 2))
        bg = BackgroundSet(rows=rows)
        x = np.array([3.0, 4.0])
        expected = (rows[:, 0] + rows[:, 1]).mean()
        assert interventional_value(model, x, [], bg) == pytest.approx(expected)

    def test_matches_hand_spliced_hybrids(self, rng):
        model = _IgnoresSecondFeature()
        model.feature_width = 4

        class Model4:
            family = "mlp"
            feature_width = 4
            link = "identity"

            def attribution_output(self, X):
                X = np.atleast_2d(X)
                return X[:, 0] + 2 * X[:, 1] - X[:, 2] * X[:, 3]

        m = Model4()
        rows = rng.normal(size=(5, 4))
        bg = BackgroundSet(rows=rows)
        x = rng.normal(size=4)
        S = [1, 3]
        # manual row splicing oracle
        total = 0.0
        for row in rows:
            hybrid = row.copy()
            hybrid[1] = x[1]
            hybrid[3] = x[3]
            total += hybrid[0] + 2 * hybrid[1] - hybrid[2] * hybrid[3]
        assert interventional_value(m, x, S, bg) == pytest.approx(total / 5)


class TestExactShapley:
    def test_additive_model(self, rng):
        model = _AdditiveModel()
        rows = rng.normal(size=(20, 2))
        rows -= rows.mean(axis=0)   # zero column means
        bg = BackgroundSet(rows=rows)
        x = np.array([2.5, -1.5])
        attr = exact_shapley(model, x, bg)
        assert attr.values[0] == pytest.approx(2.5, abs=1e-9)
        assert attr.values[1] == pytest.approx(-1.5, abs=1e-9)

    def test_null_player(self, rng):
        model = _IgnoresSecondFeature()
        bg = BackgroundSet(rows=rng.normal(size=(8, 3)))
        attr = exact_shapley(model, rng.normal(size=3), bg)
        assert attr.values[1] == 0.0

    def test_symmetry(self, rng):
        model = _ProductModel()
        base = rng.normal(size=(10, 1))
        # exchangeable background: identical columns
        bg = BackgroundSet(rows=np.hstack([base, base]))
        x = np.array([1.7, 1.7])
        attr = exact_shapley(model, x, bg)
        assert attr.values[0] == pytest.approx(attr.values[1], abs=1e-12)

    def test_efficiency(self, rng):
        model = _ProductModel()
        bg = BackgroundSet(rows=rng.normal(size=(6, 2)))
        attr = exact_shapley(model, rng.normal(size=2), bg)
        assert attr.efficiency_gap() <= 1e-9

    def test_feature_cap(self, rng):
        class Wide:
            family = "mlp"
            feature_width = 16
            link = "identity"

            def attribution_output(self, X):
                return np.atleast_2d(X).sum(axis=1)

        bg = BackgroundSet(rows=rng.normal(size=(4, 16)))
        with pytest.raises(DataError, match="kernel_shap"):
            exact_shapley(Wide(), rng.normal(size=16), bg)


def _tree_model(rng, n_estimators=12, m=8, n=250):
    X = rng.normal(size=(n, m))
    y = (X[:, 0] + 0.7 * X[:, 1] - 0.4 * X[:, 2] > 0).astype(np.float64)
    model = fit_gradient_boosting(
        (X, y), ModelConfig("gradient-boosting",
                            {"n_estimators": n_estimators,
                             "learning_rate": 0.1}, seed=4))
    return model, X


class TestKernelShap:
    def test_full_budget_equals_exact_on_tree_ensemble(self, rng):
        model, X = _tree_model(rng, m=8)
        bg = BackgroundSet(rows=X[:10].copy())
        x = X[42]
        exact = exact_shapley(model, x, bg)
        kernel = kernel_shap(model, x, bg, budget=1 << 8)
        assert np.max(np.abs(kernel.values - exact.values)) <= 1e-6

    def test_linear_model_matches_linear_shap(self, rng):
        w = rng.normal(size=5)
        model = LogisticRegressionModel(
            ModelConfig("logistic-regression", {}, seed=0), 5, w, 0.3)
        bg = BackgroundSet(rows=rng.normal(size=(12, 5)))
        x = rng.normal(size=5)
        kernel = kernel_shap(model, x, bg, budget=1 << 5)
        linear = linear_shap(model, x, bg)
        assert np.max(np.abs(kernel.values - linear.values)) <= 1e-6

    def test_single_feature(self, rng):
        class OneD:
            family = "mlp"
            feature_width = 1
            link = "identity"

            def attribution_output(self, X):
                return np.atleast_2d(X)[:, 0] ** 2

        bg = BackgroundSet(rows=rng.normal(size=(6, 1)))
        x = np.array([2.0])
        attr = kernel_shap(OneD(), x, bg, budget=16)
        assert attr.values[0] == pytest.approx(attr.prediction - attr.baseline)

    def test_sampled_budget_deterministic(self, rng):
        model, X = _tree_model(rng, m=8)
        bg = BackgroundSet(rows=X[:6].copy())
        x = X[3]
        a = kernel_shap(model, x, bg, budget=60, seed=9)
        b = kernel_shap(model, x, bg, budget=60, seed=9)
        assert np.array_equal(a.values, b.values)
        # efficiency is enforced exactly even for sampled budgets
        assert a.efficiency_gap() <= 1e-9

    def test_budget_floor(self, rng):
        model, X = _tree_model(rng, m=8)
        bg = BackgroundSet(rows=X[:4].copy())
        with pytest.raises(DataError):
            kernel_shap(model, X[0], bg, budget=5)

    def test_sampled_budget_approximates_exact(self, rng):
        # sampled coalitions (budget < 2^M) must stay close to the exact
        # values, not just satisfy the efficiency constraint
        model, X = _tree_model(rng, n_estimators=10, m=10, n=300)
        bg = BackgroundSet(rows=X[:8].copy())
        x = X[25]
        exact = exact_shapley(model, x, bg)
        sampled = kernel_shap(model, x, bg, budget=700, seed=3)
        scale = max(1.0, float(np.abs(exact.values).max()))
        assert np.max(np.abs(sampled.values - exact.values)) / scale < 0.1


class TestLinearShap:
    def test_direct_formula(self):
        model = LogisticRegressionModel(
            ModelConfig("logistic-regression", {}, seed=0), 2,
            np.array([2.0, 0.0]), 0.0)
        bg = BackgroundSet(rows=np.ones((4, 2)))
        attr = linear_shap(model, np.array([3.0, 7.0]), bg)
        assert attr.values.tolist() == [4.0, 0.0]

    def test_zero_at_background_mean(self, rng):
        w = rng.normal(size=3)
        model = LogisticRegressionModel(
            ModelConfig("logistic-regression", {}, seed=0), 3, w, 1.0)
        rows = rng.normal(size=(9, 3))
        bg = BackgroundSet(rows=rows)
        attr = linear_shap(model, rows.mean(axis=0), bg)
        assert np.max(np.abs(attr.values)) <= 1e-12

    def test_matches_exact_enumeration(self, rng):
        w = rng.normal(size=6)
        model = LogisticRegressionModel(
            ModelConfig("logistic-regression", {}, seed=0), 6, w, -0.4)
        bg = BackgroundSet(rows=rng.normal(size=(10, 6)))
        x = rng.normal(size=6)
        linear = linear_shap(model, x, bg)
        exact = exact_shapley(model, x, bg)
        assert np.max(np.abs(linear.values - exact.values)) <= 1e-9

    def test_rejects_nonlinear(self, rng):
        model, X = _tree_model(rng)
        bg = BackgroundSet(rows=X[:5].copy())
        with pytest.raises(DataError):
            linear_shap(model, X[0], bg)


class TestTreeShap:
    def test_single_leaf_tree_gives_zeros(self, rng):
        X = rng.normal(size=(60, 4))
        y = np.ones(60)
        y[:20] = 0.0
        model = fit_model((X, y), ModelConfig("decision-tree",
                                              {"max_depth": 0}, seed=0))
        bg = BackgroundSet(rows=X[:8].copy())
        attr = tree_shap(model, X[0], bg)
        assert np.array_equal(attr.values, np.zeros(4))

    def test_stump_has_single_nonzero_coordinate(self, rng):
        X = rng.normal(size=(200, 5))
        y = (X[:, 1] > 0).astype(np.float64)
        model = fit_model((X, y), ModelConfig("decision-tree",
                                              {"max_depth": 1}, seed=0))
        assert model.root.feature == 1
        bg = BackgroundSet(rows=X[:10].copy())
        attr = tree_shap(model, X[0], bg)
        nonzero = np.flatnonzero(attr.values)
        assert nonzero.tolist() == [1]

    def test_matches_exact_on_ensemble(self, rng):
        model, X = _tree_model(rng, n_estimators=10, m=8)
        bg = BackgroundSet(rows=X[:10].copy())
        for row in (X[5], X[77], X[130]):
            tree = tree_shap(model, row, bg)
            exact = exact_shapley(model, row, bg)
            assert np.max(np.abs(tree.values - exact.values)) <= 1e-9
            assert tree.efficiency_gap() <= 1e-9

    def test_all_families(self, rng):
        X = rng.normal(size=(250, 6))
        y = (X[:, 0] - X[:, 4] > 0).astype(np.float64)
        bg = BackgroundSet(rows=X[:8].copy())
        for family, hp in [
            ("decision-tree", {"max_depth": 4}),
            ("random-forest", {"n_estimators": 6, "max_depth": 4}),
            ("gradient-boosting", {"n_estimators": 6, "learning_rate": 0.1}),
            ("second-order-boosting", {"n_estimators": 6,
                                       "learning_rate": 0.1}),
            ("leafwise-boosting", {"n_estimators": 6, "learning_rate": 0.1,
                                   "num_leaves": 6, "max_bins": 32}),
        ]:
            model = fit_model((X, y), ModelConfig(family, hp, seed=2))
            tree = tree_shap(model, X[17], bg)
            exact = exact_shapley(model, X[17], bg)
            assert np.max(np.abs(tree.values - exact.values)) <= 1e-9, family

    def test_rejects_unsupported_family(self, rng):
        X = rng.normal(size=(60, 3))
        y = (X[:, 0] > 0).astype(np.float64)
        model = fit_model((X, y), ModelConfig(
            "logistic-regression", {"penalty": "l2", "c": 1.0}, seed=0))
        bg = BackgroundSet(rows=X[:5].copy())
        with pytest.raises(DataError):
            tree_shap(model, X[0], bg)

    def test_null_player_exact_zero(self, rng):
        # a constant column can never be split on, so no tree reads it and
        # its attribution must be exactly zero
        from scorelens.models import collect_features
        X = rng.normal(size=(300, 5))
        X[:, 2] = 1.0
        y = (X[:, 0] + X[:, 1] > 0).astype(np.float64)
        model = fit_model((X, y), ModelConfig(
            "gradient-boosting", {"n_estimators": 10, "learning_rate": 0.1},
            seed=1))
        used = set().union(*(collect_features(r) for r in model.trees))
        assert 2 not in used
        bg = BackgroundSet(rows=X[:10].copy())
        for q in X[rng.choice(300, size=5, replace=False)]:
            attr = tree_shap(model, q, bg)
            assert attr.values[2] == 0.0


def _attr(instance_id, values, baseline=0.0):
    values = np.asarray(values, dtype=np.float64)
    return Attribution(instance_id=instance_id, values=values,
                       baseline=baseline,
                       prediction=baseline + values.sum(),
                       feature_names=tuple(f"f{i}"
                                           for i in range(len(values))))


class TestRankInstances:
    def test_sort_order(self):
        summary = rank_instances([_attr(0, [1.0, 1.0]),
                                  _attr(1, [-2.0, 1.0]),
                                  _attr(2, [4.0, 1.0])])
        assert [i for i, _ in summary.totals] == [2, 0, 1]

    def test_tiebreak_by_id(self):
        summary = rank_instances([_attr(5, [1.0]), _attr(2, [1.0]),
                                  _attr(9, [1.0])])
        assert [i for i, _ in summary.totals] == [2, 5, 9]

    def test_extremes_match_scan_oracle(self, rng):
        attrs = [_attr(i, rng.normal(size=4)) for i in range(50)]
        summary = rank_instances(attrs)
        totals = {a.instance_id: float(a.values.sum()) for a in attrs}
        assert summary.totals[0][0] == max(totals, key=totals.get)
        assert summary.totals[-1][0] == min(totals, key=totals.get)

    def test_mean_abs_nonnegative_sorted_table(self, rng):
        attrs = [_attr(i, rng.normal(size=3)) for i in range(10)]
        summary = rank_instances(attrs)
        assert (summary.mean_abs >= 0).all()
        totals = [t for _, t in summary.totals]
        assert totals == sorted(totals, reverse=True)


class TestPlotData:
    def test_summary_top_one(self, rng):
        attrs = [_attr(0, [0.1, 3.0, -1.0])]
        summary = rank_instances(attrs)
        doc = summary_plot_data(summary, top=1)
        assert len(doc["entries"]) == 1
        assert doc["entries"][0]["feature"] == "f1"

    def test_summary_all_zero_deterministic(self):
        attrs = [_attr(0, [0.0, 0.0])]
        summary = rank_instances(attrs)
        doc = summary_plot_data(summary, top=2)
        assert [e["feature"] for e in doc["entries"]] == ["f0", "f1"]

    def test_summary_top_clipped_with_warning(self):
        attrs = [_attr(0, [1.0, 2.0])]
        summary = rank_instances(attrs)
        with pytest.warns(UserWarning):
            doc = summary_plot_data(summary, top=10)
        assert len(doc["entries"]) == 2

    def test_summary_order_matches_recompute(self, rng):
        attrs = [_attr(i, rng.normal(size=5)) for i in range(20)]
        summary = rank_instances(attrs)
        doc = summary_plot_data(summary, top=5)
        stack = np.vstack([a.values for a in attrs])
        recomputed = np.abs(stack).mean(axis=0)
        expected = [f"f{i}" for i in np.argsort(-recomputed)]
        assert [e["feature"] for e in doc["entries"]] == expected

    def test_decision_endpoint_is_prediction(self, rng):
        attr = _attr(3, rng.normal(size=6), baseline=0.7)
        doc = decision_plot_data(attr, list(range(6)))
        assert doc["entries"][-1]["cumulative"] == pytest.approx(
            attr.prediction)

    def test_decision_single_feature_two_point_path(self):
        attr = _attr(1, [2.0], baseline=0.5)
        doc = decision_plot_data(attr, ["4"])
        assert len(doc["entries"]) == 1
        assert doc["baseline"] == 0.5
        assert doc["entries"][0]["cumulative"] == pytest.approx(2.5)

    def test_partial_sums_match_prefix_oracle(self, rng):
        attr = _attr(2, rng.normal(size=5), baseline=-0.2)
        doc = decision_plot_data(attr, list("abcde"))
        shaps = [e["shap"] for e in doc["entries"]]
        running = -0.2
        for entry, s in zip(doc["entries"], shaps):
            running += s
            assert entry["cumulative"] == pytest.approx(running)

    def test_misalignment_rejected(self):
        attr = _attr(0, [1.0, 2.0])
        with pytest.raises(DataError):
            decision_plot_data(attr, [1.0])
