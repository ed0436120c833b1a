"""Shapley-value feature attribution over an interventional value function.

The value of a coalition S at query point x is the mean model output over
the background rows with the S columns overwritten by x. Four routes
compute the resulting Shapley values: exact enumeration over all 2^M
coalitions, a kernel-weighted least-squares estimate, the closed form for
linear models, and a per-background-row tree recursion for tree ensembles.
All of them attribute the model's additive output (log-odds for
sigmoid-output families, margins for the SVM), recorded as ``link``.
"""

from __future__ import annotations

import math
import warnings as _warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .models import (LogisticRegressionModel, SVMModel, TREE_FAMILIES)

EXACT_FEATURE_CAP = 15
DEFAULT_KERNEL_BUDGET_CAP = 2048
DEFAULT_BACKGROUND_SIZE = 100


@dataclass(frozen=True)
class BackgroundSet:
    """Reference rows standing in for the intervention distribution."""

    rows: np.ndarray

    def __post_init__(self):
        if self.rows.ndim != 2 or self.rows.shape[0] == 0:
            raise DataError("background set must be a non-empty matrix")

    @property
    def size(self):
        return self.rows.shape[0]

    @property
    def width(self):
        return self.rows.shape[1]

    @classmethod
    def sample(cls, dataset_or_rows, size=DEFAULT_BACKGROUND_SIZE, seed=0):
        rows = getattr(dataset_or_rows, "rows", dataset_or_rows)
        rows = np.asarray(rows, dtype=np.float64)
        if rows.shape[0] <= size:
            return cls(rows=rows.copy())
        rng = np.random.Generator(np.random.PCG64(seed))
        pick = np.sort(rng.choice(rows.shape[0], size=size, replace=False))
        return cls(rows=rows[pick])


@dataclass
class Attribution:
    """Per-feature Shapley values for one query row."""

    instance_id: int
    values: np.ndarray
    baseline: float          # mean model output over the background
    prediction: float        # model output at the query point
    feature_names: tuple | None = None
    method: str = "exact"
    link: str = "identity"
    residual: float | None = None   # kernel regression residual, else None

    @property
    def total(self):
        return float(self.values.sum())

    def efficiency_gap(self):
        return abs(self.total + self.baseline - self.prediction)

    def to_dict(self):
        return {
            "instance_id": int(self.instance_id),
            "values": [float(v) for v in self.values],
            "baseline": self.baseline,
            "prediction": self.prediction,
            "feature_names": list(self.feature_names) if self.feature_names
            else None,
            "method": self.method,
            "link": self.link,
            "residual": self.residual,
        }


def _check_widths(model, x, bg):
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != model.feature_width:
        raise DataError(f"query width {x.shape[0]} != model width "
                        f"{model.feature_width}")
    if bg.width != model.feature_width:
        raise DataError(f"background width {bg.width} != model width "
                        f"{model.feature_width}")
    return x


def interventional_value(model, x, coalition, bg: BackgroundSet):
    """Mean model output over background rows with coalition columns
    overwritten by the query point's values."""
    x = _check_widths(model, x, bg)
    coalition = np.asarray(list(coalition), dtype=np.intp)
    hybrid = bg.rows.copy()
    if coalition.size:
        hybrid[:, coalition] = x[coalition]
    return float(np.mean(model.attribution_output(hybrid)))


def _coalition_values(model, x, bg, masks, m):
    """Value function at each bitmask coalition, scored in large batches."""
    masks = np.asarray(list(masks), dtype=np.int64)
    n_bg = bg.size
    out = np.empty(len(masks))
    chunk = max(1, 2_000_000 // max(n_bg * m, 1))
    for start in range(0, len(masks), chunk):
        sub = masks[start:start + chunk]
        bits = ((sub[:, None] >> np.arange(m)) & 1).astype(bool)
        hybrid = np.where(np.repeat(bits, n_bg, axis=0),
                          x[None, :], np.tile(bg.rows, (len(sub), 1)))
        values = model.attribution_output(hybrid)
        out[start:start + len(sub)] = values.reshape(len(sub), n_bg).mean(axis=1)
    return out


def exact_shapley(model, x, bg: BackgroundSet, instance_id=-1):
    """Full enumeration with the standard coalition weights
    |S|! (M-|S|-1)! / M!."""
    x = _check_widths(model, x, bg)
    m = x.shape[0]
    if m > EXACT_FEATURE_CAP:
        raise DataError(
            f"{m} features exceeds the exact enumeration cap "
            f"{EXACT_FEATURE_CAP}; use kernel_shap instead")
    n_masks = 1 << m
    values = _coalition_values(model, x, bg, range(n_masks), m)
    popcount = np.array([bin(mask).count("1") for mask in range(n_masks)])
    fact = [math.factorial(k) for k in range(m + 1)]
    size_weight = np.array([fact[s] * fact[m - s - 1] / fact[m]
                            for s in range(m)])
    masks = np.arange(n_masks)
    phi = np.empty(m)
    for i in range(m):
        without = masks[(masks >> i) & 1 == 0]
        weights = size_weight[popcount[without]]
        phi[i] = float(np.sum(weights * (values[without | (1 << i)]
                                         - values[without])))
    return Attribution(
        instance_id=instance_id,
        values=phi,
        baseline=float(values[0]),
        prediction=float(values[n_masks - 1]),
        method="exact",
        link=model.link,
    )


def _kernel_weight(m, size):
    return (m - 1) / (math.comb(m, size) * size * (m - size))


def kernel_shap(model, x, bg: BackgroundSet, budget=None, seed=0,
                instance_id=-1):
    """Weighted least squares over coalitions with Shapley kernel weights.

    The empty and full coalitions are enforced exactly (the intercept is
    the baseline and the values sum to prediction - baseline). With the
    full 2^M budget the solution coincides with exact enumeration; sampled
    runs are deterministic in ``seed`` and use paired complements.
    """
    x = _check_widths(model, x, bg)
    m = x.shape[0]
    if budget is None:
        budget = min(1 << m, DEFAULT_KERNEL_BUDGET_CAP)
    if budget < m + 2:
        raise DataError(f"coalition budget {budget} is below the minimum "
                        f"{m + 2}")
    baseline = interventional_value(model, x, (), bg)
    prediction = interventional_value(model, x, range(m), bg)
    delta = prediction - baseline
    if m == 1:
        return Attribution(instance_id=instance_id, values=np.array([delta]),
                           baseline=baseline, prediction=prediction,
                           method="kernel", link=model.link, residual=0.0)

    interior_budget = budget - 2
    if budget >= (1 << m):
        masks = [mask for mask in range(1, (1 << m) - 1)]
        counts = {mask: 1.0 for mask in masks}
    else:
        rng = np.random.Generator(np.random.PCG64(seed))
        sizes = np.arange(1, m)
        size_p = np.array([(m - 1) / (s * (m - s)) for s in sizes])
        size_p = size_p / size_p.sum()
        counts = {}
        drawn = 0
        while drawn < interior_budget:
            s = int(rng.choice(sizes, p=size_p))
            members = rng.choice(m, size=s, replace=False)
            mask = 0
            for i in members:
                mask |= 1 << int(i)
            for candidate in (mask, (~mask) & ((1 << m) - 1)):
                if drawn >= interior_budget or candidate in (0, (1 << m) - 1):
                    continue
                counts[candidate] = counts.get(candidate, 0.0) + 1.0
                drawn += 1
        masks = sorted(counts)

    values = _coalition_values(model, x, bg, masks, m)
    Z = np.zeros((len(masks), m))
    weights = np.empty(len(masks))
    enumerated = budget >= (1 << m)
    for row, mask in enumerate(masks):
        if enumerated:
            weights[row] = _kernel_weight(m, bin(mask).count("1"))
        else:
            # sampling already follows the kernel measure, so the WLS
            # weight is the draw count alone
            weights[row] = counts[mask]
        for i in range(m):
            if mask >> i & 1:
                Z[row, i] = 1.0

    # eliminate the last feature to enforce sum(phi) == delta exactly
    y = (values - baseline) - Z[:, -1] * delta
    Zr = Z[:, :-1] - Z[:, -1:]
    sw = np.sqrt(weights)
    A = Zr * sw[:, None]
    b = y * sw
    solution, _, rank, _ = np.linalg.lstsq(A, b, rcond=None)
    if rank < m - 1:
        raise DataError(
            "singular coalition design; increase the coalition budget")
    phi = np.empty(m)
    phi[:-1] = solution
    phi[-1] = delta - solution.sum()
    fitted = baseline + Z @ phi
    residual = float(np.sqrt(np.sum(weights * (values - fitted) ** 2)
                             / np.sum(weights)))
    return Attribution(instance_id=instance_id, values=phi, baseline=baseline,
                       prediction=prediction, method="kernel",
                       link=model.link, residual=residual)


def linear_shap(model, x, bg: BackgroundSet, instance_id=-1):
    """Closed form for linear scores: phi_i = w_i * (x_i - mean bg_i)."""
    if isinstance(model, LogisticRegressionModel):
        w = model.weights
    elif isinstance(model, SVMModel) and model.kernel == "linear":
        w = model.linear_weights()
    else:
        raise DataError("linear_shap requires a logistic-regression model "
                        "or a linear-kernel SVM")
    x = _check_widths(model, x, bg)
    phi = w * (x - bg.rows.mean(axis=0))
    return Attribution(
        instance_id=instance_id,
        values=phi,
        baseline=float(np.mean(model.attribution_output(bg.rows))),
        prediction=float(model.attribution_output(x)),
        method="linear",
        link=model.link,
    )


def tree_shap(model, x, bg: BackgroundSet, instance_id=-1):
    """Exact interventional attribution for tree ensembles.

    For each background row the coalition game over one tree decomposes by
    leaf into unanimity-style games (features where the query and the
    background row route differently must, or must not, be in the
    coalition); their Shapley values have closed-form weights
    (a-1)! b! / (a+b)! and -a! (b-1)! / (a+b)!. Contributions are averaged
    over the background and summed over trees, matching exact enumeration
    on the same value function.
    """
    if model.family not in TREE_FAMILIES:
        raise DataError(f"tree_shap does not support family {model.family!r}")
    x = _check_widths(model, x, bg)
    m = x.shape[0]
    phi = np.zeros(m)
    scale = getattr(model, "tree_scale", 1.0)
    for z in bg.rows:
        for root in model.trees:
            _pair_attribution(root, x, z, phi)
    phi *= scale / bg.size
    return Attribution(
        instance_id=instance_id,
        values=phi,
        baseline=float(np.mean(model.attribution_output(bg.rows))),
        prediction=float(model.attribution_output(x)),
        method="tree",
        link=model.link,
    )


def _pair_attribution(root, x, z, phi):
    """Accumulate the single-(tree, background-row) game into phi.

    Iterative walk with an action stack so the constraint state mutates in
    the same order the recursion would: when query and background rows
    disagree at a node, the query-side branch is explored with the feature
    required in the coalition, then the background-side branch with it
    excluded, then the constraint is dropped.
    """
    state = {}   # feature -> +1 (query side) / -1 (background side)
    stack = [("visit", root, 0)]
    while stack:
        action, payload, side = stack.pop()
        if action == "set":
            state[payload] = side
            continue
        if action == "drop":
            del state[payload]
            continue
        node = payload
        if node.is_leaf:
            if not state:
                continue
            query_side = [f for f, s in state.items() if s > 0]
            bg_side = [f for f, s in state.items() if s < 0]
            a, b = len(query_side), len(bg_side)
            denom = math.factorial(a + b)
            if a:
                w = node.value * math.factorial(a - 1) * math.factorial(b)
                for f in query_side:
                    phi[f] += w / denom
            if b:
                w = node.value * math.factorial(a) * math.factorial(b - 1)
                for f in bg_side:
                    phi[f] -= w / denom
            continue
        f = node.feature
        x_go_left = x[f] <= node.threshold
        z_go_left = z[f] <= node.threshold
        if x_go_left == z_go_left:
            stack.append(("visit", node.left if x_go_left else node.right, 0))
            continue
        x_child = node.left if x_go_left else node.right
        z_child = node.left if z_go_left else node.right
        constraint = state.get(f)
        if constraint == 1:
            stack.append(("visit", x_child, 0))
        elif constraint == -1:
            stack.append(("visit", z_child, 0))
        else:
            stack.append(("drop", f, 0))
            stack.append(("visit", z_child, 0))
            stack.append(("set", f, -1))
            stack.append(("visit", x_child, 0))
            stack.append(("set", f, 1))


def attribute(model, x, bg: BackgroundSet, instance_id=-1, budget=None,
              seed=0):
    """Family-appropriate route: tree recursion for tree ensembles, the
    closed form for linear models, kernel estimation otherwise."""
    if model.family in TREE_FAMILIES:
        return tree_shap(model, x, bg, instance_id=instance_id)
    if isinstance(model, LogisticRegressionModel) or (
            isinstance(model, SVMModel) and model.kernel == "linear"):
        return linear_shap(model, x, bg, instance_id=instance_id)
    return kernel_shap(model, x, bg, budget=budget, seed=seed,
                       instance_id=instance_id)


@dataclass
class AttributionSummary:
    """Mean |SHAP| per feature and total SHAP per instance (sorted)."""

    feature_names: tuple
    mean_abs: np.ndarray
    totals: list      # (row_id, total) sorted descending, ties by row id

    def to_dict(self):
        return {
            "mean_abs_shap": [
                {"feature": name, "value": float(v)}
                for name, v in zip(self.feature_names, self.mean_abs)],
            "totals": [{"instance_id": int(i), "total_shap": float(t)}
                       for i, t in self.totals],
        }


def rank_instances(attributions) -> AttributionSummary:
    """Order instances by total SHAP, descending; ties by ascending id."""
    if not attributions:
        raise DataError("cannot rank an empty attribution list")
    m = len(attributions[0].values)
    names = attributions[0].feature_names or tuple(
        f"feature_{i}" for i in range(m))
    stack = np.vstack([a.values for a in attributions])
    mean_abs = np.abs(stack).mean(axis=0)
    totals = sorted(((int(a.instance_id), float(a.values.sum()))
                     for a in attributions),
                    key=lambda item: (-item[1], item[0]))
    return AttributionSummary(feature_names=tuple(names), mean_abs=mean_abs,
                              totals=totals)


def summary_plot_data(summary: AttributionSummary, top):
    """Top-k features by mean |SHAP|, formatted for the SVG renderer."""
    n = len(summary.feature_names)
    if top > n:
        _warnings.warn(f"top={top} exceeds the {n} available features; "
                       "clipping", stacklevel=2)
        top = n
    order = sorted(range(n), key=lambda i: (-summary.mean_abs[i], i))[:top]
    return {
        "kind": "summary",
        "entries": [{"feature": summary.feature_names[i], "value": None,
                     "shap": float(summary.mean_abs[i])} for i in order],
        "baseline": None,
        "prediction": None,
    }


def decision_plot_data(attr: Attribution, feature_values):
    """Cumulative path from baseline to prediction, largest |phi| first,
    each step annotated with the raw (pre-encoding) feature value."""
    m = len(attr.values)
    feature_values = list(feature_values)
    if len(feature_values) != m:
        raise DataError(f"{len(feature_values)} feature values for "
                        f"{m} attributions")
    names = attr.feature_names or tuple(f"feature_{i}" for i in range(m))
    order = sorted(range(m), key=lambda i: (-abs(attr.values[i]), i))
    running = attr.baseline
    entries = []
    for i in order:
        running += float(attr.values[i])
        entries.append({
            "feature": names[i],
            "value": feature_values[i],
            "shap": float(attr.values[i]),
            "cumulative": running,
        })
    return {
        "kind": "decision",
        "instance_id": int(attr.instance_id),
        "entries": entries,
        "baseline": attr.baseline,
        "prediction": attr.prediction,
    }
