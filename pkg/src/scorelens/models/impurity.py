"""Node impurity measures used by the tree-based models."""

import numpy as np

from ..errors import DataError


def _check_proportions(proportions):
    p = np.asarray(proportions, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise DataError("proportions must be a non-empty 1-D vector")
    if (p < 0).any():
        raise DataError("proportions must be nonnegative")
    if abs(p.sum() - 1.0) > 1e-9:
        raise DataError(f"proportions sum to {p.sum()!r}, not 1")
    return p


def gini_impurity(proportions):
    """1 - sum(p_i^2); zero at a pure node, maximal at uniform."""
    p = _check_proportions(proportions)
    return float(1.0 - np.sum(p * p))


def entropy_impurity(proportions):
    """-sum(p_i * log2(p_i)) with 0*log(0) = 0."""
    p = _check_proportions(proportions)
    nonzero = p[p > 0]
    return float(-np.sum(nonzero * np.log2(nonzero)))
