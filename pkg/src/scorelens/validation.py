"""Stratified 5-fold training with undersampling, grid search, and the
six-metric evaluation suite (accuracy, recall, precision, specificity,
F1, ROC-AUC) with confusion matrices.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field

import numpy as np

from .dataset import undersample
from .errors import ConfigError, DataError, ScorelensError
from .models import DEFAULT_GRIDS, ModelConfig, fit_model, training_arrays

METRIC_KEYS = ("ACC", "RC", "PR", "SP", "F1S", "AUC")

DEFAULT_FOLDS = 5


@dataclass(frozen=True)
class FoldAssignment:
    """Partition of training rows into k stratified folds."""

    k: int
    membership: np.ndarray      # fold index per row position
    row_ids: np.ndarray

    def fold_positions(self, fold):
        return np.flatnonzero(self.membership == fold)

    def rest_positions(self, fold):
        return np.flatnonzero(self.membership != fold)


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise DataError("confusion counts must be nonnegative")

    @property
    def total(self):
        return self.tp + self.tn + self.fp + self.fn

    def to_dict(self):
        return {"tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn}

    @classmethod
    def from_predictions(cls, y_true, y_pred):
        y_true = np.asarray(y_true)
        y_pred = np.asarray(y_pred)
        return cls(
            tp=int(np.sum((y_true == 1) & (y_pred == 1))),
            tn=int(np.sum((y_true == 0) & (y_pred == 0))),
            fp=int(np.sum((y_true == 0) & (y_pred == 1))),
            fn=int(np.sum((y_true == 1) & (y_pred == 0))),
        )


def _ratio(num, den):
    return num / den if den > 0 else 0.0


def accuracy(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tp + cm.tn, cm.total)


def recall(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tp, cm.tp + cm.fn)


def precision(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tp, cm.tp + cm.fp)


def specificity(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tn, cm.tn + cm.fp)


def f1_from_precision_recall(pr: float, rc: float) -> float:
    return _ratio(2.0 * pr * rc, pr + rc)


def f1(cm: ConfusionMatrix) -> float:
    return f1_from_precision_recall(precision(cm), recall(cm))


def metrics_from_confusion(cm: ConfusionMatrix):
    """All threshold metrics plus warnings for zero-denominator cases.

    Zero denominators yield 0 rather than aborting (undersampled folds can
    produce empty positive predictions); each such case is flagged.
    """
    warnings = []
    checks = (
        ("ACC", cm.total), ("RC", cm.tp + cm.fn), ("PR", cm.tp + cm.fp),
        ("SP", cm.tn + cm.fp),
    )
    for key, den in checks:
        if den == 0:
            warnings.append(f"{key} denominator is zero; reported 0")
    values = {
        "ACC": accuracy(cm),
        "RC": recall(cm),
        "PR": precision(cm),
        "SP": specificity(cm),
        "F1S": f1(cm),
    }
    if precision(cm) + recall(cm) == 0:
        warnings.append("F1S denominator is zero; reported 0")
    return values, warnings


def roc_auc(scores, labels) -> float:
    """Rank-based AUC (midrank tie convention); equals the trapezoidal
    area under the threshold-swept ROC curve."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUC needs both classes present")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores))
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    rank_sum = float(ranks[labels == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def evaluate_scores(scores, y_true, threshold):
    """Six metrics plus confusion matrix from raw scores."""
    y_pred = (np.asarray(scores) >= threshold).astype(np.int64)
    cm = ConfusionMatrix.from_predictions(y_true, y_pred)
    values, warnings = metrics_from_confusion(cm)
    values["AUC"] = roc_auc(scores, y_true)
    return values, cm, warnings


def stratified_kfold(train, k=DEFAULT_FOLDS, seed=0) -> FoldAssignment:
    """Within each class, a seeded permutation dealt round-robin."""
    key = train.stratify_key()
    membership = np.full(train.n_rows, -1, dtype=np.int64)
    rng = np.random.Generator(np.random.PCG64(seed))
    for cls in np.unique(key):
        members = np.flatnonzero(key == cls)
        if len(members) < k:
            raise DataError(
                f"class {cls!r} has {len(members)} rows, fewer than k={k}")
        perm = rng.permutation(members)
        membership[perm] = np.arange(len(perm)) % k
    return FoldAssignment(k=k, membership=membership,
                          row_ids=train.row_ids.copy())


def _fold_seed(seed, config_index, fold):
    seq = np.random.SeedSequence(seed, spawn_key=(config_index, fold))
    return int(seq.generate_state(1)[0])


def cross_validate(train, config: ModelConfig, folds: FoldAssignment,
                   config_index=0):
    """Fit fresh per fold on the undersampled rest, evaluate on the fold.

    Returns (fold_metrics, fold_warnings); no state crosses iterations.
    """
    fold_metrics = []
    fold_warnings = []
    for fold in range(folds.k):
        fit_part = train.take(folds.rest_positions(fold))
        val_part = train.take(folds.fold_positions(fold))
        balanced = undersample(fit_part, _fold_seed(config.seed, config_index,
                                                    fold))
        try:
            model = fit_model(balanced, config)
        except ScorelensError as exc:
            exc.args = (f"fold {fold}: {exc.args[0]}",) + exc.args[1:]
            raise
        scores = model.score(val_part.rows)
        values, _, warnings = evaluate_scores(scores, val_part.target,
                                              model.decision_threshold)
        fold_metrics.append(values)
        fold_warnings.extend(f"fold {fold}: {w}" for w in warnings)
    return fold_metrics, fold_warnings


@dataclass
class CandidateEvaluation:
    config: ModelConfig
    fold_metrics: list
    mean_metrics: dict
    warnings: list = field(default_factory=list)

    def to_dict(self):
        return {
            "config": self.config.to_dict(),
            "fold_metrics": self.fold_metrics,
            "mean_metrics": self.mean_metrics,
            "warnings": list(self.warnings),
        }


@dataclass
class SelectionTrace:
    criterion: str
    records: list
    winner_index: int

    def to_dict(self):
        return {"criterion": self.criterion, "records": self.records,
                "winner_index": self.winner_index}


@dataclass
class EvaluationReport:
    family: str
    candidates: list
    selection: SelectionTrace
    test_metrics: dict | None = None    # mode -> {"metrics", "confusion", ...}

    @property
    def best(self) -> CandidateEvaluation:
        return self.candidates[self.selection.winner_index]

    def to_dict(self):
        return {
            "family": self.family,
            "candidates": [c.to_dict() for c in self.candidates],
            "selection": self.selection.to_dict(),
            "test_metrics": self.test_metrics,
        }

    def to_csv(self) -> str:
        """Metric table, one row per config, columns ACC..AUC."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["model", "hyperparameters", *METRIC_KEYS])
        for cand in self.candidates:
            hp = ", ".join(f"{k}: {v}" for k, v in
                           sorted(cand.config.hyperparameters.items()))
            writer.writerow([self.family, hp] +
                            [f"{cand.mean_metrics[k]:.4f}" for k in METRIC_KEYS])
        return buf.getvalue()


def mean_metrics(fold_metrics):
    return {key: float(np.mean([m[key] for m in fold_metrics]))
            for key in METRIC_KEYS}


def select_best(mean_rows):
    """Argmax by AUC, ties by ACC, remaining ties by grid order."""
    best_index = 0
    for i, row in enumerate(mean_rows[1:], start=1):
        leader = mean_rows[best_index]
        if (row["AUC"], row["ACC"]) > (leader["AUC"], leader["ACC"]):
            best_index = i
    return best_index


def expand_grid(family, grid):
    """Cartesian product of grid axes, in declared axis order."""
    if not grid:
        raise ConfigError(f"empty grid for {family}")
    known = set(DEFAULT_GRIDS[family])
    from .models import EXTENSION_AXES
    for axis in grid:
        if axis not in known and axis not in EXTENSION_AXES[family]:
            raise ConfigError(f"{family} has no grid axis {axis!r}")
    axes = list(grid.keys())
    combos = []
    for values in itertools.product(*(grid[a] for a in axes)):
        combos.append(dict(zip(axes, values)))
    return combos


def grid_search(train, family, grid, folds: FoldAssignment, seed=0):
    """Evaluate the full grid under cross-validation; pick by mean AUC."""
    combos = expand_grid(family, grid)
    candidates = []
    for index, hp in enumerate(combos):
        config = ModelConfig(family=family, hyperparameters=hp, seed=seed)
        fold_metrics, warnings = cross_validate(train, config, folds,
                                                config_index=index)
        candidates.append(CandidateEvaluation(
            config=config,
            fold_metrics=fold_metrics,
            mean_metrics=mean_metrics(fold_metrics),
            warnings=warnings,
        ))
    winner = select_best([c.mean_metrics for c in candidates])
    trace = SelectionTrace(
        criterion="mean validation AUC, ties by mean ACC then grid order",
        records=[{
            "index": i,
            "label": c.config.label(),
            "mean_auc": c.mean_metrics["AUC"],
            "mean_acc": c.mean_metrics["ACC"],
        } for i, c in enumerate(candidates)],
        winner_index=winner,
    )
    report = EvaluationReport(family=family, candidates=candidates,
                              selection=trace)
    return candidates[winner].config, report


def evaluate_on_test(model, test, balance=True, seed=0):
    """Six metrics plus confusion matrix on the held-out partition."""
    if test.n_rows == 0:
        raise DataError("test partition is empty")
    part = undersample(test, seed) if balance else test
    X, y = training_arrays(part)
    scores = model.score(X)
    values, cm, warnings = evaluate_scores(scores, y, model.decision_threshold)
    return values, cm, warnings
