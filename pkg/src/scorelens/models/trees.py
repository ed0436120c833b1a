"""Binary tree structure and greedy growers shared by all tree models.

Trees route a row to the left child when ``x[feature] <= threshold``. The
growers are parameterized by a split scorer and a leaf-value function so
the CART classifier, the residual regressor, and the second-order booster
all share one recursion; split scanning is delegated to the kernel layer.
All walks are iterative, so uncapped-depth trees on large data cannot hit
the interpreter recursion limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import _kernels


@dataclass
class TreeNode:
    feature: int | None          # None marks a leaf
    threshold: float | None
    left: TreeNode | None
    right: TreeNode | None
    value: float                 # class fraction or additive weight at leaves
    n_samples: int

    @property
    def is_leaf(self):
        return self.feature is None


def leaf(value, n_samples):
    return TreeNode(feature=None, threshold=None, left=None, right=None,
                    value=float(value), n_samples=int(n_samples))


def tree_to_arrays(root):
    """Flat serialization: parallel lists with child indices (-1 = none)."""
    nodes = []
    stack = [root]
    index = {}
    while stack:
        node = stack.pop()
        index[id(node)] = len(nodes)
        nodes.append(node)
        if not node.is_leaf:
            stack.append(node.right)
            stack.append(node.left)
    doc = {"feature": [], "threshold": [], "left": [], "right": [],
           "value": [], "n_samples": []}
    for node in nodes:
        doc["feature"].append(-1 if node.is_leaf else node.feature)
        doc["threshold"].append(None if node.is_leaf else node.threshold)
        doc["left"].append(-1 if node.is_leaf else index[id(node.left)])
        doc["right"].append(-1 if node.is_leaf else index[id(node.right)])
        doc["value"].append(node.value)
        doc["n_samples"].append(node.n_samples)
    return doc


def tree_from_arrays(doc):
    nodes = [
        TreeNode(feature=None if doc["feature"][i] < 0 else doc["feature"][i],
                 threshold=doc["threshold"][i],
                 left=None, right=None,
                 value=doc["value"][i], n_samples=doc["n_samples"][i])
        for i in range(len(doc["feature"]))
    ]
    for i, node in enumerate(nodes):
        if node.feature is not None:
            node.left = nodes[doc["left"][i]]
            node.right = nodes[doc["right"][i]]
    return nodes[0]


def _walk(root):
    stack = [root]
    while stack:
        node = stack.pop()
        yield node
        if not node.is_leaf:
            stack.append(node.right)
            stack.append(node.left)


def tree_depth(root):
    best = 0
    stack = [(root, 0)]
    while stack:
        node, depth = stack.pop()
        if node.is_leaf:
            best = max(best, depth)
        else:
            stack.append((node.left, depth + 1))
            stack.append((node.right, depth + 1))
    return best


def collect_features(root):
    """Set of feature indices the tree actually splits on."""
    return {node.feature for node in _walk(root) if not node.is_leaf}


class FlatTree:
    """Array form of a TreeNode for vectorized batch prediction."""

    def __init__(self, root):
        nodes = list(_walk(root))
        index = {id(node): i for i, node in enumerate(nodes)}
        count = len(nodes)
        self._feature = np.full(count, -1, dtype=np.int64)
        self._threshold = np.full(count, np.nan)
        self._left = np.zeros(count, dtype=np.int64)
        self._right = np.zeros(count, dtype=np.int64)
        self._value = np.zeros(count)
        for i, node in enumerate(nodes):
            self._value[i] = node.value
            if not node.is_leaf:
                self._feature[i] = node.feature
                self._threshold[i] = node.threshold
                self._left[i] = index[id(node.left)]
                self._right[i] = index[id(node.right)]

    def predict(self, X):
        n = X.shape[0]
        at = np.zeros(n, dtype=np.int64)
        active = self._feature[at] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            nodes = at[rows]
            go_left = X[rows, self._feature[nodes]] <= self._threshold[nodes]
            at[rows] = np.where(go_left, self._left[nodes], self._right[nodes])
            active[rows] = self._feature[at[rows]] >= 0
        return self._value[at]


def grow_tree(X, split_fn, leaf_fn, rows, max_depth, min_leaf,
              feature_indices_fn, pure_fn=None, require_positive_gain=False):
    """Greedy grower over an explicit work stack.

    split_fn(feature, sorted_values, sorted_rows) -> (gain, threshold);
    leaf_fn(rows) -> leaf value; feature_indices_fn() -> candidate features
    for one split (lets forests subsample per split); pure_fn(rows) stops
    early. Zero-gain splits on impure nodes are taken (they can enable
    useful splits deeper down, e.g. on XOR-style data) unless
    ``require_positive_gain`` is set, as it is for regularized gains that
    may be legitimately negative.
    """
    depth_cap = math.inf if max_depth is None else max_depth
    root = leaf(0.0, 0)          # placeholder, filled below
    stack = [(root, rows, 0)]
    while stack:
        node, node_rows, depth = stack.pop()
        node.value = float(leaf_fn(node_rows))
        node.n_samples = int(node_rows.shape[0])
        n = node_rows.shape[0]
        if depth >= depth_cap or n < 2 * min_leaf:
            continue
        if pure_fn is not None and pure_fn(node_rows):
            continue
        best_gain = -math.inf
        best = None
        for f in feature_indices_fn():
            col = X[node_rows, f]
            order = np.argsort(col, kind="stable")
            gain, thr = split_fn(f, col[order], node_rows[order])
            if gain > best_gain:
                best_gain = gain
                best = (f, thr)
        if best is None or not math.isfinite(best_gain):
            continue
        if require_positive_gain and best_gain <= 0.0:
            continue
        f, thr = best
        go_left = X[node_rows, f] <= thr
        node.feature = int(f)
        node.threshold = float(thr)
        node.left = leaf(0.0, 0)
        node.right = leaf(0.0, 0)
        # left child pops first: forests consume their per-split feature
        # stream in depth-first left-to-right order
        stack.append((node.right, node_rows[~go_left], depth + 1))
        stack.append((node.left, node_rows[go_left], depth + 1))
    return root


def classification_split_fn(y, criterion, min_leaf):
    crit = (_kernels.CRITERION_GINI if criterion == "gini"
            else _kernels.CRITERION_ENTROPY)

    def split_fn(feature, sorted_values, sorted_rows):
        return _kernels.best_split_class(
            np.ascontiguousarray(sorted_values), y[sorted_rows], min_leaf, crit)

    return split_fn


def variance_split_fn(targets, min_leaf):
    def split_fn(feature, sorted_values, sorted_rows):
        return _kernels.best_split_variance(
            np.ascontiguousarray(sorted_values), targets[sorted_rows], min_leaf)

    return split_fn


def gradhess_split_fn(grad, hess, lam, min_leaf):
    def split_fn(feature, sorted_values, sorted_rows):
        return _kernels.best_split_gradhess(
            np.ascontiguousarray(sorted_values), grad[sorted_rows],
            hess[sorted_rows], lam, min_leaf)

    return split_fn
