"""Pure-numpy split-scan kernels.

These are the reference semantics for the compiled module: every function
takes a feature column already sorted ascending (with its companion arrays
gathered into the same order) and returns ``(gain, threshold)``. A gain of
``-inf`` means no admissible split. Candidate boundaries are positions where
the sorted value strictly increases and both children keep at least
``min_leaf`` rows; thresholds are midpoints between adjacent distinct values
with rows routed left when ``x <= threshold``. Ties in gain resolve to the
leftmost boundary.
"""

import numpy as np

NO_SPLIT = (-np.inf, np.nan)

CRITERION_GINI = 0
CRITERION_ENTROPY = 1


def _thresholds(values):
    """Midpoints guarded against rounding up onto the right value."""
    lo = values[:-1]
    hi = values[1:]
    mid = 0.5 * (lo + hi)
    return np.where(mid < hi, mid, lo)


def best_split_class(values, labels, min_leaf, criterion):
    """Best impurity-decrease split for binary labels (0/1 floats)."""
    n = values.shape[0]
    if n < 2 * min_leaf:
        return NO_SPLIT
    cum_pos = np.cumsum(labels)
    total_pos = cum_pos[-1]
    n_left = np.arange(1, n, dtype=np.float64)
    n_right = n - n_left
    valid = (values[1:] > values[:-1]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return NO_SPLIT
    pos_left = cum_pos[:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        p_left = pos_left / n_left
        p_right = (total_pos - pos_left) / n_right
        p_all = total_pos / n
        if criterion == CRITERION_GINI:
            imp_left = _gini(p_left)
            imp_right = _gini(p_right)
            imp_all = _gini(p_all)
        else:
            imp_left = _entropy(p_left)
            imp_right = _entropy(p_right)
            imp_all = _entropy(p_all)
        gain = imp_all - (n_left / n) * imp_left - (n_right / n) * imp_right
    gain = np.where(valid, gain, -np.inf)
    k = int(np.argmax(gain))
    if not np.isfinite(gain[k]):
        return NO_SPLIT
    return float(gain[k]), float(_thresholds(values)[k])


def _gini(p):
    q = 1.0 - p
    return 1.0 - p * p - q * q


def _entropy(p):
    p = np.asarray(p, dtype=np.float64)
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        term_p = np.where(p > 0.0, p * np.log2(p), 0.0)
        term_q = np.where(q > 0.0, q * np.log2(q), 0.0)
    return -(term_p + term_q)


def best_split_variance(values, targets, min_leaf):
    """Best sum-of-squares reduction split for real-valued targets."""
    n = values.shape[0]
    if n < 2 * min_leaf:
        return NO_SPLIT
    cum = np.cumsum(targets)
    total = cum[-1]
    n_left = np.arange(1, n, dtype=np.float64)
    n_right = n - n_left
    valid = (values[1:] > values[:-1]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return NO_SPLIT
    sum_left = cum[:-1]
    sum_right = total - sum_left
    gain = (sum_left * sum_left / n_left
            + sum_right * sum_right / n_right
            - total * total / n)
    gain = np.where(valid, gain, -np.inf)
    k = int(np.argmax(gain))
    if not np.isfinite(gain[k]):
        return NO_SPLIT
    return float(gain[k]), float(_thresholds(values)[k])


def best_split_gradhess(values, grad, hess, lam, min_leaf):
    """Best second-order gain split from per-row gradient/hessian sums."""
    n = values.shape[0]
    if n < 2 * min_leaf:
        return NO_SPLIT
    cum_g = np.cumsum(grad)
    cum_h = np.cumsum(hess)
    g_total = cum_g[-1]
    h_total = cum_h[-1]
    n_left = np.arange(1, n, dtype=np.float64)
    n_right = n - n_left
    valid = (values[1:] > values[:-1]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return NO_SPLIT
    g_left = cum_g[:-1]
    h_left = cum_h[:-1]
    g_right = g_total - g_left
    h_right = h_total - h_left
    gain = 0.5 * (g_left * g_left / (h_left + lam)
                  + g_right * g_right / (h_right + lam)
                  - g_total * g_total / (h_total + lam))
    gain = np.where(valid, gain, -np.inf)
    k = int(np.argmax(gain))
    if not np.isfinite(gain[k]):
        return NO_SPLIT
    return float(gain[k]), float(_thresholds(values)[k])
