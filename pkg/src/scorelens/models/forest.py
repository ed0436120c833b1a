"""Random forest: bagged CART trees with per-split feature subsampling."""

from __future__ import annotations

import math

import numpy as np

from .base import FittedModel, ModelConfig
from .tree import DEFAULT_MIN_LEAF, check_binary_labels
from .trees import (FlatTree, classification_split_fn, grow_tree,
                    tree_from_arrays, tree_to_arrays)


class RandomForestModel(FittedModel):
    family = "random-forest"
    score_kind = "probability"
    link = "identity"

    def __init__(self, config, feature_width, roots):
        super().__init__(config, feature_width)
        self.roots = list(roots)
        self._flats = [FlatTree(r) for r in self.roots]

    @property
    def trees(self):
        return self.roots

    @property
    def base_offset(self):
        return 0.0

    @property
    def tree_scale(self):
        return 1.0 / len(self.roots)

    def _score_batch(self, X):
        total = np.zeros(X.shape[0])
        for flat in self._flats:
            total += flat.predict(X)
        return total / len(self._flats)

    def _params_to_dict(self):
        return {"roots": [tree_to_arrays(r) for r in self.roots]}

    @classmethod
    def _from_params(cls, config, feature_width, params):
        return cls(config, feature_width,
                   [tree_from_arrays(r) for r in params["roots"]])


def fit_random_forest(X, y, config: ModelConfig):
    X = np.asarray(X, dtype=np.float64)
    y = check_binary_labels(y)
    n, m = X.shape
    n_estimators = int(config.get("n_estimators", 100))
    max_depth = config.get("max_depth")
    criterion = config.get("criterion", "gini")
    min_leaf = int(config.get("min_samples_leaf", DEFAULT_MIN_LEAF))
    bootstrap = bool(config.get("bootstrap", True))
    max_features = config.get("max_features", "sqrt")
    if max_features == "sqrt":
        k = math.ceil(math.sqrt(m))
    elif max_features == "all":
        k = m
    else:
        k = min(int(max_features), m)

    seeds = np.random.SeedSequence(config.seed).spawn(n_estimators)
    roots = []
    features = np.arange(m)
    for tree_seed in seeds:
        rng = np.random.Generator(np.random.PCG64(tree_seed))
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)

        def sample_features():
            if k >= m:
                return features
            return np.sort(rng.choice(m, size=k, replace=False))

        roots.append(grow_tree(
            X,
            split_fn=classification_split_fn(y, criterion, min_leaf),
            leaf_fn=lambda idx: float(y[idx].mean()),
            rows=rows,
            max_depth=max_depth,
            min_leaf=min_leaf,
            feature_indices_fn=sample_features,
            pure_fn=lambda idx: y[idx].min() == y[idx].max(),
        ))
    return RandomForestModel(config, m, roots)
