"""Greedy CART classifier."""

from __future__ import annotations

import numpy as np

from ..errors import DataError
from .base import FittedModel, ModelConfig
from .trees import (FlatTree, classification_split_fn, grow_tree,
                    tree_from_arrays, tree_to_arrays)

DEFAULT_MIN_LEAF = 5


class DecisionTreeModel(FittedModel):
    family = "decision-tree"
    score_kind = "probability"
    link = "identity"

    def __init__(self, config, feature_width, root):
        super().__init__(config, feature_width)
        self.root = root
        self._flat = FlatTree(root)

    @property
    def trees(self):
        """Uniform tree-ensemble view (used by tree attributions)."""
        return [self.root]

    @property
    def base_offset(self):
        return 0.0

    def _score_batch(self, X):
        return self._flat.predict(X)

    def _params_to_dict(self):
        return {"root": tree_to_arrays(self.root)}

    @classmethod
    def _from_params(cls, config, feature_width, params):
        return cls(config, feature_width, tree_from_arrays(params["root"]))


def check_binary_labels(y):
    y = np.asarray(y, dtype=np.float64)
    if not set(np.unique(y)) <= {0.0, 1.0}:
        raise DataError("labels must be binary 0/1")
    return y


def fit_decision_tree(X, y, config: ModelConfig):
    X = np.asarray(X, dtype=np.float64)
    y = check_binary_labels(y)
    criterion = config.get("criterion", "gini")
    max_depth = config.get("max_depth")
    min_leaf = int(config.get("min_samples_leaf", DEFAULT_MIN_LEAF))
    features = np.arange(X.shape[1])
    root = grow_tree(
        X,
        split_fn=classification_split_fn(y, criterion, min_leaf),
        leaf_fn=lambda rows: float(y[rows].mean()),
        rows=np.arange(X.shape[0]),
        max_depth=max_depth,
        min_leaf=min_leaf,
        feature_indices_fn=lambda: features,
        pure_fn=lambda rows: y[rows].min() == y[rows].max(),
    )
    return DecisionTreeModel(config, X.shape[1], root)
