"""Fold assignment, metric formulas, AUC oracle, grid search contracts."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scorelens.errors import ConfigError, DataError
from scorelens.models import ModelConfig
from scorelens.validation import (ConfusionMatrix, EvaluationReport,
                                  accuracy, cross_validate, evaluate_on_test,
                                  evaluate_scores, f1,
                                  f1_from_precision_recall, grid_search,
                                  mean_metrics, metrics_from_confusion,
                                  precision, recall, roc_auc, select_best,
                                  specificity, stratified_kfold)

from conftest import make_dataset, planted_signal


def labeled_dataset(rng, n=100, pos_fraction=0.6):
    n_pos = int(round(n * pos_fraction))
    y = np.array([1.0] * n_pos + [0.0] * (n - n_pos))
    return make_dataset(rng.normal(size=(n, 3)), y=y)


class TestStratifiedKFold:
    def test_exact_divisibility(self, rng):
        ds = labeled_dataset(rng, n=100, pos_fraction=0.6)
        folds = stratified_kfold(ds, k=5, seed=1)
        for f in range(5):
            part = ds.take(folds.fold_positions(f))
            assert part.n_rows == 20
            assert int(part.target.sum()) == 12

    def test_remainder_rule(self, rng):
        y = np.array([1.0] * 61 + [0.0] * 40)
        ds = make_dataset(rng.normal(size=(101, 2)), y=y)
        folds = stratified_kfold(ds, k=5, seed=1)
        majority_counts = sorted(
            int(ds.take(folds.fold_positions(f)).target.sum())
            for f in range(5))
        assert majority_counts == [12, 12, 12, 12, 13]

    def test_union_covers_training_rows(self, rng):
        ds = labeled_dataset(rng, n=83, pos_fraction=0.4)
        folds = stratified_kfold(ds, k=5, seed=3)
        seen = np.concatenate([folds.fold_positions(f) for f in range(5)])
        assert sorted(seen) == list(range(83))

    def test_class_smaller_than_k(self, rng):
        y = np.array([1.0] * 3 + [0.0] * 20)
        ds = make_dataset(rng.normal(size=(23, 2)), y=y)
        with pytest.raises(DataError):
            stratified_kfold(ds, k=5, seed=0)

    def test_proportions_within_one_sample_many_seeds(self, rng):
        ds = labeled_dataset(rng, n=97, pos_fraction=0.37)
        global_pos = ds.target.mean()
        for seed in range(20):
            folds = stratified_kfold(ds, k=5, seed=seed)
            for f in range(5):
                part = ds.take(folds.fold_positions(f))
                expected = global_pos * part.n_rows
                assert abs(part.target.sum() - expected) <= 1.0


class TestMetrics:
    def test_perfect_classifier(self):
        cm = ConfusionMatrix(tp=3, tn=2, fp=0, fn=0)
        assert accuracy(cm) == recall(cm) == precision(cm) == 1.0
        assert specificity(cm) == f1(cm) == 1.0

    def test_recall_direct(self):
        cm = ConfusionMatrix(tp=7, tn=5, fp=4, fn=3)
        assert recall(cm) == pytest.approx(0.7)

    def test_paper_f1_identity(self):
        assert f1_from_precision_recall(0.7926, 0.7259) == pytest.approx(
            0.7578, abs=1e-4)

    def test_zero_denominators_flagged(self):
        cm = ConfusionMatrix(tp=0, tn=5, fp=0, fn=0)
        values, warnings = metrics_from_confusion(cm)
        assert values["PR"] == 0.0 and values["RC"] == 0.0
        assert any("PR" in w for w in warnings)
        assert any("F1S" in w for w in warnings)

    @given(st.integers(0, 500), st.integers(0, 500), st.integers(0, 500),
           st.integers(0, 500))
    @settings(max_examples=200, deadline=None)
    def test_accuracy_identity(self, tp, tn, fp, fn):
        if tp + tn + fp + fn == 0:
            return
        cm = ConfusionMatrix(tp=tp, tn=tn, fp=fp, fn=fn)
        p, n = tp + fn, tn + fp
        expected = ((recall(cm) * p + specificity(cm) * n) / (p + n)
                    if p + n else 0.0)
        assert accuracy(cm) == pytest.approx(expected, abs=1e-12)

    @given(st.integers(1, 500), st.integers(0, 500), st.integers(0, 500),
           st.integers(0, 500))
    @settings(max_examples=100, deadline=None)
    def test_f1_is_harmonic_mean(self, tp, tn, fp, fn):
        cm = ConfusionMatrix(tp=tp, tn=tn, fp=fp, fn=fn)
        pr, rc = precision(cm), recall(cm)
        if pr > 0 and rc > 0:
            assert f1(cm) == pytest.approx(2 / (1 / pr + 1 / rc), abs=1e-12)


def threshold_sweep_auc(scores, labels):
    """Independent oracle: explicit ROC trapezoid over all thresholds."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = labels == 1
    neg = labels == 0
    thresholds = np.concatenate([[np.inf], np.unique(scores)[::-1]])
    tpr = [np.sum(scores[pos] >= t) / pos.sum() for t in thresholds]
    fpr = [np.sum(scores[neg] >= t) / neg.sum() for t in thresholds]
    return float(np.trapezoid(tpr, fpr))


class TestRocAuc:
    def test_perfect_ranking(self):
        assert roc_auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0

    def test_constant_scores(self):
        assert roc_auc([0.5] * 10, [0, 1] * 5) == 0.5

    def test_matches_threshold_sweep(self, rng):
        for _ in range(100):
            n = int(rng.integers(10, 60))
            scores = rng.choice(rng.normal(size=max(4, n // 2)), size=n)
            labels = (rng.random(n) < 0.5).astype(int)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            got = roc_auc(scores, labels)
            want = threshold_sweep_auc(scores, labels)
            assert got == pytest.approx(want, abs=1e-12)

    def test_invariant_under_monotone_transform(self, rng):
        scores = rng.normal(size=50)
        labels = (rng.random(50) < 0.4).astype(int)
        labels[0], labels[1] = 0, 1
        base = roc_auc(scores, labels)
        assert roc_auc(np.exp(scores), labels) == pytest.approx(base, abs=1e-12)
        assert roc_auc(3 * scores + 7, labels) == pytest.approx(base, abs=1e-12)

    def test_single_class_rejected(self):
        with pytest.raises(DataError):
            roc_auc([0.1, 0.2], [1, 1])


class _OracleModel:
    """Planted grid-search winner: scores equal the labels."""

    decision_threshold = 0.5
    score_kind = "probability"

    def __init__(self, y_by_rowid):
        self.y_by_rowid = y_by_rowid


class TestCrossValidate:
    def test_five_metric_rows(self, rng):
        ds = labeled_dataset(rng, n=120)
        folds = stratified_kfold(ds, k=5, seed=0)
        config = ModelConfig("decision-tree", {"max_depth": 2}, seed=0)
        fold_metrics, _ = cross_validate(ds, config, folds)
        assert len(fold_metrics) == 5

    def test_replayed_metrics_match(self, rng):
        # independent evaluator over stored per-fold predictions
        ds = labeled_dataset(rng, n=150, pos_fraction=0.5)
        folds = stratified_kfold(ds, k=5, seed=2)
        config = ModelConfig("decision-tree", {"max_depth": 3}, seed=1)
        fold_metrics, _ = cross_validate(ds, config, folds)
        from scorelens.dataset import undersample
        from scorelens.models import fit_model
        from scorelens.validation import _fold_seed
        for f in range(5):
            fit_part = ds.take(folds.rest_positions(f))
            val_part = ds.take(folds.fold_positions(f))
            model = fit_model(undersample(fit_part, _fold_seed(1, 0, f)),
                              config)
            scores = model.score(val_part.rows)
            replay, _, _ = evaluate_scores(scores, val_part.target, 0.5)
            for key, value in replay.items():
                assert fold_metrics[f][key] == pytest.approx(value, abs=1e-12)

    def test_mean_equals_arithmetic_mean(self, rng):
        ds = labeled_dataset(rng, n=120)
        folds = stratified_kfold(ds, k=5, seed=0)
        config = ModelConfig("decision-tree", {"max_depth": 2}, seed=0)
        fold_metrics, _ = cross_validate(ds, config, folds)
        means = mean_metrics(fold_metrics)
        for key, value in means.items():
            assert value == pytest.approx(
                sum(m[key] for m in fold_metrics) / 5, abs=1e-12)


class TestGridSearch:
    def test_full_product_evaluated(self, rng):
        ds = labeled_dataset(rng, n=120)
        folds = stratified_kfold(ds, k=5, seed=0)
        grid = {"penalty": ["l1", "l2"], "c": [0.1, 1.0, 10.0]}
        best, report = grid_search(ds, "logistic-regression", grid, folds,
                                   seed=0)
        assert len(report.candidates) == 6
        assert len(report.selection.records) == 6

    def test_single_point_grid(self, rng):
        ds = labeled_dataset(rng, n=100)
        folds = stratified_kfold(ds, k=5, seed=0)
        best, report = grid_search(ds, "decision-tree",
                                   {"max_depth": [3]}, folds, seed=0)
        assert best.hyperparameters == {"max_depth": 3}

    def test_empty_grid_rejected(self, rng):
        ds = labeled_dataset(rng, n=100)
        folds = stratified_kfold(ds, k=5, seed=0)
        with pytest.raises(ConfigError):
            grid_search(ds, "decision-tree", {}, folds)

    def test_planted_winner_selected(self, rng):
        # a dominant candidate (depth 8 on strongly separable data) must win
        X = rng.normal(size=(200, 3))
        y = (X[:, 0] > 0).astype(np.float64)
        ds = make_dataset(X, y=y)
        folds = stratified_kfold(ds, k=5, seed=0)
        best, report = grid_search(ds, "decision-tree",
                                   {"max_depth": [0, 8]}, folds, seed=0)
        assert best.hyperparameters["max_depth"] == 8
        aucs = [c.mean_metrics["AUC"] for c in report.candidates]
        assert aucs[1] == max(aucs)

    def test_winner_invariant_under_monotone_transform(self):
        rows = [{"AUC": 0.61, "ACC": 0.58}, {"AUC": 0.74, "ACC": 0.50},
                {"AUC": 0.74, "ACC": 0.55}, {"AUC": 0.40, "ACC": 0.90}]
        base = select_best(rows)
        transformed = [{"AUC": 3 * r["AUC"] + 1, "ACC": r["ACC"]}
                       for r in rows]
        assert select_best(transformed) == base
        assert base == 2   # AUC tie broken by ACC


def test_fit_error_tagged_with_fold_index(rng):
    from scorelens.errors import ConvergenceError
    ds = labeled_dataset(rng, n=120, pos_fraction=0.5)
    folds = stratified_kfold(ds, k=5, seed=0)
    config = ModelConfig("svm", {"kernel": "rbf", "c": 1.0, "max_sweeps": 1},
                         seed=0)
    with pytest.raises(ConvergenceError, match="fold 0"):
        cross_validate(ds, config, folds)


class TestEvaluateOnTest:
    def test_balanced_noop_when_already_balanced(self, rng):
        ds = labeled_dataset(rng, n=80, pos_fraction=0.5)
        folds = stratified_kfold(ds, k=5, seed=0)
        config = ModelConfig("decision-tree", {"max_depth": 3}, seed=0)
        from scorelens.models import fit_model
        model = fit_model(ds, config)
        balanced, _, _ = evaluate_on_test(model, ds, balance=True, seed=0)
        natural, _, _ = evaluate_on_test(model, ds, balance=False, seed=0)
        assert balanced == natural

    def test_oracle_model_scores_one(self, rng):
        ds = planted_signal(300, seed=5)
        train = ds
        from scorelens.models import fit_model
        model = fit_model(train, ModelConfig(
            "gradient-boosting", {"n_estimators": 40, "learning_rate": 0.1},
            seed=0))
        metrics, cm, _ = evaluate_on_test(model, train, balance=False, seed=0)
        assert metrics["ACC"] > 0.9
        assert cm.total == train.n_rows


class TestReportCsv:
    def test_layout(self, rng):
        ds = labeled_dataset(rng, n=100)
        folds = stratified_kfold(ds, k=5, seed=0)
        _, report = grid_search(ds, "decision-tree",
                                {"criterion": ["gini", "entropy"],
                                 "max_depth": [2]}, folds, seed=0)
        text = report.to_csv()
        lines = text.strip().split("\n")
        assert lines[0] == "model,hyperparameters,ACC,RC,PR,SP,F1S,AUC"
        assert len(lines) == 3
