"""Model configuration and the uniform fitted-model interface."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DataError

FAMILIES = (
    "logistic-regression",
    "decision-tree",
    "random-forest",
    "gradient-boosting",
    "second-order-boosting",
    "leafwise-boosting",
    "svm",
    "mlp",
)

# Hyperparameter grids searched by default (one axis list per name).
DEFAULT_GRIDS = {
    "logistic-regression": {"penalty": ["l1", "l2"], "c": [0.1, 1.0, 10.0]},
    "decision-tree": {"criterion": ["gini", "entropy"],
                      "max_depth": [None, 5, 10]},
    "random-forest": {"n_estimators": [50, 100, 200],
                      "max_depth": [None, 5, 10]},
    "gradient-boosting": {"n_estimators": [50, 100, 200],
                          "learning_rate": [0.1, 0.01, 0.001]},
    "second-order-boosting": {"n_estimators": [50, 100, 200],
                              "learning_rate": [0.1, 0.01, 0.001]},
    "leafwise-boosting": {"n_estimators": [50, 100, 200],
                          "learning_rate": [0.1, 0.01, 0.001]},
    "svm": {"kernel": ["linear", "rbf"], "c": [0.1, 1.0, 10.0]},
    "mlp": {"hidden_layer_sizes": [(100,), (50, 50), (100, 50, 25)],
            "activation": ["relu", "tanh", "logistic"]},
}

# Documented extension axes beyond the default grids.
EXTENSION_AXES = {
    "logistic-regression": {"tol", "max_iter"},
    "decision-tree": {"min_samples_leaf"},
    "random-forest": {"criterion", "min_samples_leaf", "bootstrap",
                      "max_features"},
    "gradient-boosting": {"max_depth", "min_samples_leaf"},
    "second-order-boosting": {"max_depth", "min_samples_leaf", "reg_lambda"},
    "leafwise-boosting": {"num_leaves", "max_bins", "min_samples_leaf",
                          "reg_lambda"},
    "svm": {"gamma", "tol", "max_sweeps"},
    "mlp": {"learning_rate_init", "batch_size", "max_epochs", "patience"},
}

_ENUM_AXES = {
    "penalty": {"l1", "l2"},
    "criterion": {"gini", "entropy"},
    "kernel": {"linear", "rbf"},
    "activation": {"relu", "tanh", "logistic"},
}


def _normalize_value(name, value):
    if name == "hidden_layer_sizes":
        if isinstance(value, (int, np.integer)):
            return (int(value),)
        return tuple(int(v) for v in value)
    if isinstance(value, str) and name in _ENUM_AXES:
        return value.lower()
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


@dataclass(frozen=True)
class ModelConfig:
    """A model family plus one point of its hyperparameter grid."""

    family: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown model family {self.family!r}")
        allowed = set(DEFAULT_GRIDS[self.family]) | EXTENSION_AXES[self.family]
        normalized = {}
        for name, value in self.hyperparameters.items():
            if name not in allowed:
                raise ConfigError(
                    f"{self.family} has no hyperparameter {name!r} "
                    f"(grid axes: {sorted(allowed)})")
            value = _normalize_value(name, value)
            if name in _ENUM_AXES and value not in _ENUM_AXES[name]:
                raise ConfigError(
                    f"{name}={value!r} is not one of {sorted(_ENUM_AXES[name])}")
            normalized[name] = value
        object.__setattr__(self, "hyperparameters", normalized)

    def get(self, name, default=None):
        return self.hyperparameters.get(name, default)

    def to_dict(self):
        hp = {}
        for name, value in self.hyperparameters.items():
            hp[name] = list(value) if isinstance(value, tuple) else value
        return {"family": self.family, "hyperparameters": hp, "seed": self.seed}

    @classmethod
    def from_dict(cls, d):
        return cls(family=d["family"], hyperparameters=dict(d["hyperparameters"]),
                   seed=int(d["seed"]))

    def label(self):
        """Stable human-readable identity, used in reports and file names."""
        parts = [f"{k}={v}" for k, v in sorted(self.hyperparameters.items())]
        return f"{self.family}({', '.join(parts)})"


def sigmoid(z):
    z = np.clip(z, -500.0, 500.0)
    return 1.0 / (1.0 + np.exp(-z))


def log_loss(margin, y):
    """Mean logistic loss of additive margins against 0/1 labels."""
    sign = np.where(y > 0.5, 1.0, -1.0)
    return float(np.mean(np.logaddexp(0.0, -sign * margin)))


class FittedModel:
    """Uniform scoring surface over all families.

    ``score`` emits probability-like values in [0, 1] for every family
    except the SVM, whose scores are unbounded margins; ``score_kind``
    and ``decision_threshold`` record which convention an instance uses.
    ``attribution_output`` is the additive output attributions act on
    (log-odds for sigmoid-output families), with ``link`` mapping it back
    to ``score``.
    """

    family = None
    score_kind = "probability"     # or "margin"
    link = "identity"              # attribution_output -> score map

    def __init__(self, config, feature_width):
        self.config = config
        self.feature_width = int(feature_width)

    @property
    def decision_threshold(self):
        return 0.5 if self.score_kind == "probability" else 0.0

    def _as_batch(self, X):
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.feature_width:
            raise DataError(
                f"expected rows of width {self.feature_width}, got {X.shape}")
        return X, single

    def score(self, X):
        X, single = self._as_batch(X)
        out = self._score_batch(X)
        return float(out[0]) if single else out

    def predict(self, X):
        s = self.score(X)
        threshold = self.decision_threshold
        if np.isscalar(s):
            return int(s >= threshold)
        return (s >= threshold).astype(np.int64)

    def attribution_output(self, X):
        X, single = self._as_batch(X)
        out = self._attribution_batch(X)
        return float(out[0]) if single else out

    def _score_batch(self, X):
        raise NotImplementedError

    def _attribution_batch(self, X):
        return self._score_batch(X)

    # serialization ------------------------------------------------------
    def to_dict(self):
        return {
            "family": self.family,
            "config": self.config.to_dict(),
            "feature_width": self.feature_width,
            "parameters": self._params_to_dict(),
        }

    def _params_to_dict(self):
        raise NotImplementedError

    @classmethod
    def _from_params(cls, config, feature_width, params):
        raise NotImplementedError
