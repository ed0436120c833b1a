"""Stagewise boosted tree ensembles on log-odds with logistic loss.

Three variants cover the paper-family distinctions without ecosystem
dependencies:

* first-order: trees fit to residuals with a variance criterion, leaf
  values recomputed as damped Newton steps (sum residual / sum hessian);
* second-order: split gain and leaf weights from per-leaf gradient and
  hessian sums, ``-G / (H + lambda)`` with an L2 regularizer;
* leafwise: second-order statistics over quantile-binned features
  (<= 255 bins), trees grown best-leaf-first to a leaf-count cap.

Learning-rate-scaled leaf values are baked into the stored trees, so the
model margin is ``base + sum(tree(x))`` for every variant.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from .base import FittedModel, ModelConfig, log_loss, sigmoid
from .tree import DEFAULT_MIN_LEAF, check_binary_labels
from .trees import (FlatTree, grow_tree, gradhess_split_fn, leaf,
                    tree_from_arrays, tree_to_arrays, variance_split_fn)

DEFAULT_TREE_DEPTH = 3
DEFAULT_REG_LAMBDA = 1.0
DEFAULT_NUM_LEAVES = 31
DEFAULT_MAX_BINS = 255

_EPS = 1e-12


def _base_margin(y):
    p = min(max(float(y.mean()), 1e-12), 1.0 - 1e-12)
    return float(np.log(p / (1.0 - p)))


class _BoostedEnsemble(FittedModel):
    score_kind = "probability"
    link = "logit"

    def __init__(self, config, feature_width, base, roots, train_loss=None):
        super().__init__(config, feature_width)
        self.base = float(base)
        self.roots = list(roots)
        self._flats = [FlatTree(r) for r in self.roots]
        self.train_loss_ = list(train_loss) if train_loss is not None else None

    @property
    def trees(self):
        return self.roots

    @property
    def base_offset(self):
        return self.base

    def margin(self, X):
        total = np.full(X.shape[0], self.base)
        for flat in self._flats:
            total += flat.predict(X)
        return total

    def _score_batch(self, X):
        return sigmoid(self.margin(X))

    def _attribution_batch(self, X):
        return self.margin(X)

    def _params_to_dict(self):
        return {"base": self.base,
                "roots": [tree_to_arrays(r) for r in self.roots]}

    @classmethod
    def _from_params(cls, config, feature_width, params):
        return cls(config, feature_width, params["base"],
                   [tree_from_arrays(r) for r in params["roots"]])


class GradientBoostingModel(_BoostedEnsemble):
    family = "gradient-boosting"


class SecondOrderBoostingModel(_BoostedEnsemble):
    family = "second-order-boosting"


class LeafwiseBoostingModel(_BoostedEnsemble):
    family = "leafwise-boosting"

    def __init__(self, config, feature_width, base, roots, train_loss=None,
                 bin_edges=None):
        super().__init__(config, feature_width, base, roots, train_loss)
        self.bin_edges_ = bin_edges

    def _params_to_dict(self):
        params = super()._params_to_dict()
        if self.bin_edges_ is not None:
            params["bin_edges"] = [e.tolist() for e in self.bin_edges_]
        return params

    @classmethod
    def _from_params(cls, config, feature_width, params):
        edges = params.get("bin_edges")
        return cls(config, feature_width, params["base"],
                   [tree_from_arrays(r) for r in params["roots"]],
                   bin_edges=[np.array(e) for e in edges] if edges else None)


def _boost_common(config):
    n_estimators = int(config.get("n_estimators", 100))
    learning_rate = float(config.get("learning_rate", 0.1))
    if n_estimators < 0:
        raise ConfigError("n_estimators must be >= 0")
    if learning_rate < 0:
        raise ConfigError("learning rate must be >= 0")
    max_depth = config.get("max_depth", DEFAULT_TREE_DEPTH)
    min_leaf = int(config.get("min_samples_leaf", DEFAULT_MIN_LEAF))
    return n_estimators, learning_rate, max_depth, min_leaf


def fit_gradient_boosting(X, y, config: ModelConfig):
    X = np.asarray(X, dtype=np.float64)
    y = check_binary_labels(y)
    n, m = X.shape
    n_estimators, lr, max_depth, min_leaf = _boost_common(config)

    base = _base_margin(y)
    margin = np.full(n, base)
    roots = []
    losses = [log_loss(margin, y)]
    all_rows = np.arange(n)
    features = np.arange(m)
    for _ in range(n_estimators):
        p = sigmoid(margin)
        residual = y - p
        hess = np.maximum(p * (1.0 - p), _EPS)

        def newton_leaf(rows):
            return lr * residual[rows].sum() / (hess[rows].sum() + _EPS)

        root = grow_tree(
            X,
            split_fn=variance_split_fn(residual, min_leaf),
            leaf_fn=newton_leaf,
            rows=all_rows,
            max_depth=max_depth,
            min_leaf=min_leaf,
            feature_indices_fn=lambda: features,
            pure_fn=lambda rows: residual[rows].min() == residual[rows].max(),
        )
        roots.append(root)
        margin += FlatTree(root).predict(X)
        losses.append(log_loss(margin, y))
    return GradientBoostingModel(config, m, base, roots, train_loss=losses)


def fit_second_order_boosting(X, y, config: ModelConfig):
    X = np.asarray(X, dtype=np.float64)
    y = check_binary_labels(y)
    n, m = X.shape
    n_estimators, lr, max_depth, min_leaf = _boost_common(config)
    lam = float(config.get("reg_lambda", DEFAULT_REG_LAMBDA))
    if lam < 0:
        raise ConfigError("reg_lambda must be >= 0")

    base = _base_margin(y)
    margin = np.full(n, base)
    roots = []
    losses = [log_loss(margin, y)]
    all_rows = np.arange(n)
    features = np.arange(m)
    for _ in range(n_estimators):
        p = sigmoid(margin)
        grad = p - y
        hess = np.maximum(p * (1.0 - p), _EPS)

        def weight_leaf(rows):
            return lr * (-grad[rows].sum() / (hess[rows].sum() + lam))

        root = grow_tree(
            X,
            split_fn=gradhess_split_fn(grad, hess, lam, min_leaf),
            leaf_fn=weight_leaf,
            rows=all_rows,
            max_depth=max_depth,
            min_leaf=min_leaf,
            feature_indices_fn=lambda: features,
            require_positive_gain=True,
        )
        roots.append(root)
        margin += FlatTree(root).predict(X)
        losses.append(log_loss(margin, y))
    return SecondOrderBoostingModel(config, m, base, roots, train_loss=losses)


def quantile_bin_edges(X, max_bins):
    """Interior quantile edges per feature; <= max_bins - 1 each."""
    edges = []
    for j in range(X.shape[1]):
        if max_bins <= 1:
            edges.append(np.empty(0))
            continue
        qs = np.linspace(0.0, 1.0, max_bins + 1)[1:-1]
        col_edges = np.unique(np.quantile(X[:, j], qs))
        # an edge at or past the column max can never split
        col_edges = col_edges[col_edges < X[:, j].max()]
        edges.append(col_edges)
    return edges


def bin_features(X, edges):
    """Bin index per cell: bin k holds values in (edge[k-1], edge[k]]."""
    cols = [np.searchsorted(edges[j], X[:, j], side="left")
            for j in range(X.shape[1])]
    return np.column_stack(cols).astype(np.int64)


def fit_leafwise_boosting(X, y, config: ModelConfig):
    X = np.asarray(X, dtype=np.float64)
    y = check_binary_labels(y)
    n, m = X.shape
    n_estimators, lr, max_depth, min_leaf = _boost_common(config)
    lam = float(config.get("reg_lambda", DEFAULT_REG_LAMBDA))
    num_leaves = int(config.get("num_leaves", DEFAULT_NUM_LEAVES))
    max_bins = int(config.get("max_bins", DEFAULT_MAX_BINS))
    if max_bins < 1 or max_bins > 255:
        raise ConfigError("max_bins must be in [1, 255]")
    if num_leaves < 2:
        raise ConfigError("num_leaves must be >= 2")

    edges = quantile_bin_edges(X, max_bins)
    bins = bin_features(X, edges)

    base = _base_margin(y)
    margin = np.full(n, base)
    roots = []
    losses = [log_loss(margin, y)]
    for _ in range(n_estimators):
        p = sigmoid(margin)
        grad = p - y
        hess = np.maximum(p * (1.0 - p), _EPS)
        root = _grow_leafwise(bins, edges, grad, hess, lam, lr,
                              num_leaves, min_leaf)
        roots.append(root)
        margin += FlatTree(root).predict(X)
        losses.append(log_loss(margin, y))
    return LeafwiseBoostingModel(config, m, base, roots, train_loss=losses,
                                 bin_edges=edges)


def _grow_leafwise(bins, edges, grad, hess, lam, lr, num_leaves, min_leaf):
    n, m = bins.shape

    def leaf_weight(rows):
        return lr * (-grad[rows].sum() / (hess[rows].sum() + lam))

    def best_split(rows):
        best = (0.0, None, None)
        if rows.shape[0] < 2 * min_leaf:
            return best
        for f in range(m):
            n_bins = len(edges[f]) + 1
            if n_bins < 2:
                continue
            idx = bins[rows, f]
            g_hist = np.bincount(idx, weights=grad[rows], minlength=n_bins)
            h_hist = np.bincount(idx, weights=hess[rows], minlength=n_bins)
            c_hist = np.bincount(idx, minlength=n_bins).astype(np.float64)
            g_left = np.cumsum(g_hist)[:-1]
            h_left = np.cumsum(h_hist)[:-1]
            c_left = np.cumsum(c_hist)[:-1]
            g_total = g_left[-1] + g_hist[-1]
            h_total = h_left[-1] + h_hist[-1]
            c_total = rows.shape[0]
            valid = (c_left >= min_leaf) & (c_total - c_left >= min_leaf)
            if not valid.any():
                continue
            gain = 0.5 * (g_left ** 2 / (h_left + lam)
                          + (g_total - g_left) ** 2 / (h_total - h_left + lam)
                          - g_total ** 2 / (h_total + lam))
            gain = np.where(valid, gain, -np.inf)
            b = int(np.argmax(gain))
            if gain[b] > best[0]:
                best = (float(gain[b]), f, b)
        return best

    all_rows = np.arange(n)
    root = leaf(leaf_weight(all_rows), n)
    # candidate pool: (gain, insertion order, node, rows, feature, bin)
    counter = 0
    gain, f, b = best_split(all_rows)
    candidates = []
    if f is not None:
        candidates.append((gain, counter, root, all_rows, f, b))
    leaves = 1
    while leaves < num_leaves and candidates:
        candidates.sort(key=lambda c: (-c[0], c[1]))
        gain, _, node, rows, f, b = candidates.pop(0)
        go_left = bins[rows, f] <= b
        left_rows, right_rows = rows[go_left], rows[~go_left]
        node.feature = int(f)
        node.threshold = float(edges[f][b])
        node.left = leaf(leaf_weight(left_rows), left_rows.shape[0])
        node.right = leaf(leaf_weight(right_rows), right_rows.shape[0])
        leaves += 1
        for child, child_rows in ((node.left, left_rows),
                                  (node.right, right_rows)):
            child_gain, cf, cb = best_split(child_rows)
            if cf is not None:
                counter += 1
                candidates.append((child_gain, counter, child, child_rows,
                                   cf, cb))
    return root
