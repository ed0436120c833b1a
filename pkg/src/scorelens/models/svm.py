"""Soft-margin SVM trained with sequential minimal optimization.

Pairwise dual updates following Platt's working-set heuristics: pick a
KKT violator, pair it with the example maximizing the error gap, solve the
two-variable subproblem analytically, keep the error cache in sync. The
decision function is an uncalibrated margin; downstream ranking metrics
consume it directly.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, ConvergenceError, DataError
from .base import FittedModel, ModelConfig

DEFAULT_KKT_TOL = 1e-3
DEFAULT_MAX_SWEEPS = 1000
_ALPHA_EPS = 1e-12

# precompute the full Gram matrix only below this row count (0.5 GiB);
# larger problems go through a bounded column cache with identical results
_PRECOMPUTE_LIMIT = 8192


class _GramColumns:
    """Kernel matrix access with a FIFO-bounded column cache."""

    def __init__(self, X, kind, gamma, limit_bytes=256 * 1024 * 1024):
        self.X = X
        self.kind = kind
        self.gamma = gamma
        n = X.shape[0]
        self.max_columns = max(8, limit_bytes // (8 * n))
        self._columns = {}
        if kind == "rbf":
            self.diagonal = np.ones(n)
        else:
            self.diagonal = np.einsum("ij,ij->i", X, X)

    def column(self, i):
        col = self._columns.get(i)
        if col is None:
            col = kernel_matrix(self.kind, self.gamma, self.X,
                                self.X[i:i + 1])[:, 0]
            if len(self._columns) >= self.max_columns:
                self._columns.pop(next(iter(self._columns)))
            self._columns[i] = col
        return col


def rbf_gamma(X):
    """Scale-free default: 1 / (n_features * mean per-feature variance)."""
    var = float(X.var(axis=0).mean())
    if var <= 0.0:
        return 1.0
    return 1.0 / (X.shape[1] * var)


def kernel_matrix(kind, gamma, A, B):
    if kind == "linear":
        return A @ B.T
    if kind == "rbf":
        sq = (np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :]
              - 2.0 * (A @ B.T))
        return np.exp(-gamma * np.maximum(sq, 0.0))
    raise ConfigError(f"unknown kernel {kind!r}")


class SVMModel(FittedModel):
    family = "svm"
    score_kind = "margin"
    link = "identity"

    def __init__(self, config, feature_width, support_vectors, dual_coef,
                 bias, kernel, gamma):
        super().__init__(config, feature_width)
        self.support_vectors = np.asarray(support_vectors, dtype=np.float64)
        self.dual_coef = np.asarray(dual_coef, dtype=np.float64)  # alpha_i * y_i
        self.bias = float(bias)
        self.kernel = kernel
        self.gamma = float(gamma)

    def margin(self, X):
        if self.support_vectors.shape[0] == 0:
            return np.full(X.shape[0], self.bias)
        K = kernel_matrix(self.kernel, self.gamma, X, self.support_vectors)
        return K @ self.dual_coef + self.bias

    def _score_batch(self, X):
        return self.margin(X)

    def linear_weights(self):
        """Explicit primal weights; linear kernel only."""
        if self.kernel != "linear":
            raise DataError("primal weights exist only for the linear kernel")
        return self.support_vectors.T @ self.dual_coef

    def _params_to_dict(self):
        return {
            "support_vectors": self.support_vectors.tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "bias": self.bias,
            "kernel": self.kernel,
            "gamma": self.gamma,
        }

    @classmethod
    def _from_params(cls, config, feature_width, params):
        return cls(config, feature_width, np.array(params["support_vectors"]),
                   np.array(params["dual_coef"]), params["bias"],
                   params["kernel"], params["gamma"])


def fit_svm(X, y, config: ModelConfig):
    X = np.asarray(X, dtype=np.float64)
    y01 = np.asarray(y, dtype=np.float64)
    if not set(np.unique(y01)) <= {0.0, 1.0}:
        raise DataError("labels must be binary 0/1")
    if len(np.unique(y01)) < 2:
        raise DataError("SVM training needs both classes")
    t = np.where(y01 > 0.5, 1.0, -1.0)
    c = float(config.get("c", 1.0))
    if c <= 0:
        raise ConfigError(f"c must be positive, got {c}")
    kernel = config.get("kernel", "rbf")
    gamma = float(config.get("gamma", rbf_gamma(X))) if kernel == "rbf" else 0.0
    tol = float(config.get("tol", DEFAULT_KKT_TOL))
    max_sweeps = int(config.get("max_sweeps", DEFAULT_MAX_SWEEPS))

    n = X.shape[0]
    if n <= _PRECOMPUTE_LIMIT:
        K = kernel_matrix(kernel, gamma, X, X)
        gram_column = lambda i: K[:, i]
        gram_diag = np.diagonal(K)
    else:
        cache = _GramColumns(X, kernel, gamma)
        gram_column = cache.column
        gram_diag = cache.diagonal
    alphas = np.zeros(n)
    state = {"b": 0.0}
    errors = -t.copy()           # f(x) - y with f == 0 initially
    rng = np.random.Generator(np.random.PCG64(config.seed))

    def take_step(i1, i2):
        if i1 == i2:
            return False
        a1, a2 = alphas[i1], alphas[i2]
        t1, t2 = t[i1], t[i2]
        e1, e2 = errors[i1], errors[i2]
        s = t1 * t2
        if s > 0:
            lo, hi = max(0.0, a1 + a2 - c), min(c, a1 + a2)
        else:
            lo, hi = max(0.0, a2 - a1), min(c, c + a2 - a1)
        if lo >= hi:
            return False
        col1 = gram_column(i1)
        col2 = gram_column(i2)
        k11, k12, k22 = gram_diag[i1], col1[i2], gram_diag[i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 0:
            a2_new = a2 + t2 * (e1 - e2) / eta
            a2_new = min(max(a2_new, lo), hi)
        else:
            # degenerate curvature: evaluate the objective at both ends
            f1 = t1 * (e1 + state["b"]) - a1 * k11 - s * a2 * k12
            f2 = t2 * (e2 + state["b"]) - s * a1 * k12 - a2 * k22
            l1 = a1 + s * (a2 - lo)
            h1 = a1 + s * (a2 - hi)
            lo_obj = (l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11
                      + 0.5 * lo * lo * k22 + s * lo * l1 * k12)
            hi_obj = (h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11
                      + 0.5 * hi * hi * k22 + s * hi * h1 * k12)
            if lo_obj < hi_obj - _ALPHA_EPS:
                a2_new = lo
            elif lo_obj > hi_obj + _ALPHA_EPS:
                a2_new = hi
            else:
                a2_new = a2
        if abs(a2_new - a2) < _ALPHA_EPS * (a2_new + a2 + _ALPHA_EPS):
            return False
        a1_new = a1 + s * (a2 - a2_new)

        b_old = state["b"]
        b1 = (e1 + t1 * (a1_new - a1) * k11 + t2 * (a2_new - a2) * k12 + b_old)
        b2 = (e2 + t1 * (a1_new - a1) * k12 + t2 * (a2_new - a2) * k22 + b_old)
        if 0.0 < a1_new < c:
            b_new = b1
        elif 0.0 < a2_new < c:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)

        alphas[i1], alphas[i2] = a1_new, a2_new
        errors[:] += (t1 * (a1_new - a1) * col1
                      + t2 * (a2_new - a2) * col2
                      - (b_new - b_old))
        state["b"] = b_new
        errors[i1] = margin_of(i1) - t[i1]
        errors[i2] = margin_of(i2) - t[i2]
        return True

    def margin_of(i):
        return float((alphas * t) @ gram_column(i) - state["b"])

    def examine(i2):
        e2, a2 = errors[i2], alphas[i2]
        r2 = e2 * t[i2]
        if not ((r2 < -tol and a2 < c) or (r2 > tol and a2 > 0)):
            return False
        non_bound = np.flatnonzero((alphas > 0) & (alphas < c))
        if len(non_bound) > 1:
            i1 = int(non_bound[np.argmax(np.abs(errors[non_bound] - e2))])
            if take_step(i1, i2):
                return True
        for i1 in np.roll(non_bound, -rng.integers(0, max(len(non_bound), 1))):
            if take_step(int(i1), i2):
                return True
        start = rng.integers(0, n)
        for i1 in np.roll(np.arange(n), -start):
            if take_step(int(i1), i2):
                return True
        return False

    examine_all = True
    changed = 0
    sweeps = 0
    while changed > 0 or examine_all:
        sweeps += 1
        if sweeps > max_sweeps:
            worst = float(np.max(np.abs(errors * t).clip(min=0)))
            raise ConvergenceError(
                f"SMO did not satisfy KKT tolerance {tol} within "
                f"{max_sweeps} sweeps", diagnostic={"worst_violation": worst})
        changed = 0
        if examine_all:
            for i in range(n):
                changed += examine(i)
        else:
            for i in np.flatnonzero((alphas > 0) & (alphas < c)):
                changed += examine(int(i))
        if examine_all:
            examine_all = False
        elif changed == 0:
            examine_all = True

    support = np.flatnonzero(alphas > _ALPHA_EPS)
    model = SVMModel(config, X.shape[1],
                     support_vectors=X[support],
                     dual_coef=alphas[support] * t[support],
                     bias=-state["b"],
                     kernel=kernel, gamma=gamma)
    model.train_alphas_ = alphas       # kept for KKT audits, not serialized
    return model


def kkt_violations(margins, t, alphas, c, tol):
    """Independent KKT audit on raw arrays: violation magnitude per row.

    alpha = 0 requires y*f >= 1, alpha = C requires y*f <= 1, interior
    alphas require y*f == 1; each within ``tol``.
    """
    yf = np.asarray(t) * np.asarray(margins)
    alphas = np.asarray(alphas)
    viol = np.zeros(len(yf))
    at_zero = alphas <= _ALPHA_EPS
    at_c = alphas >= c - 1e-8
    interior = ~at_zero & ~at_c
    viol[at_zero] = np.maximum(0.0, 1.0 - yf[at_zero] - tol)
    viol[at_c] = np.maximum(0.0, yf[at_c] - 1.0 - tol)
    viol[interior] = np.maximum(0.0, np.abs(yf[interior] - 1.0) - tol)
    return viol
