"""Eight classifier families behind one fit/score interface.

``fit_model`` dispatches on ``ModelConfig.family``; the per-family
``fit_*`` entry points accept either a labeled Dataset or an ``(X, y)``
pair. Every fitted model serializes to a self-describing JSON document via
``model_to_dict`` / ``model_from_dict`` that round-trips to identical
predictions.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, DataError
from .base import (DEFAULT_GRIDS, EXTENSION_AXES, FAMILIES, FittedModel,
                   ModelConfig, log_loss, sigmoid)
from . import boosting as _boosting
from . import forest as _forest
from . import linear as _linear
from . import mlp as _mlp
from . import svm as _svm
from . import tree as _tree
from .boosting import (GradientBoostingModel, LeafwiseBoostingModel,
                       SecondOrderBoostingModel)
from .forest import RandomForestModel
from .impurity import entropy_impurity, gini_impurity
from .linear import LogisticRegressionModel
from .mlp import MLPModel, loss_and_gradients
from .svm import SVMModel, kkt_violations, rbf_gamma
from .tree import DecisionTreeModel
from .trees import TreeNode, collect_features, tree_depth

_FITTERS = {
    "logistic-regression": _linear.fit_logistic_regression,
    "decision-tree": _tree.fit_decision_tree,
    "random-forest": _forest.fit_random_forest,
    "gradient-boosting": _boosting.fit_gradient_boosting,
    "second-order-boosting": _boosting.fit_second_order_boosting,
    "leafwise-boosting": _boosting.fit_leafwise_boosting,
    "svm": _svm.fit_svm,
    "mlp": _mlp.fit_mlp,
}

_MODEL_CLASSES = {
    cls.family: cls for cls in (
        LogisticRegressionModel, DecisionTreeModel, RandomForestModel,
        GradientBoostingModel, SecondOrderBoostingModel,
        LeafwiseBoostingModel, SVMModel, MLPModel,
    )
}

TREE_FAMILIES = ("decision-tree", "random-forest", "gradient-boosting",
                 "second-order-boosting", "leafwise-boosting")


def training_arrays(train):
    """Accept a Dataset (rows + binary target) or an (X, y) pair."""
    if hasattr(train, "rows"):
        if train.target is None:
            raise DataError("dataset has no binary target; "
                            "select an experiment pair first")
        return train.rows, train.target
    X, y = train
    return np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.float64)


def fit_model(train, config: ModelConfig) -> FittedModel:
    if config.family not in _FITTERS:
        raise ConfigError(f"unknown model family {config.family!r}")
    X, y = training_arrays(train)
    return _FITTERS[config.family](X, y, config)


def _family_fitter(family):
    def fit(train, config: ModelConfig):
        if config.family != family:
            raise ConfigError(f"config family {config.family!r} does not "
                              f"match {family!r}")
        X, y = training_arrays(train)
        return _FITTERS[family](X, y, config)
    fit.__name__ = "fit_" + family.replace("-", "_")
    fit.__doc__ = f"Fit a {family} model from a labeled Dataset or (X, y)."
    return fit


fit_logistic_regression = _family_fitter("logistic-regression")
fit_decision_tree = _family_fitter("decision-tree")
fit_random_forest = _family_fitter("random-forest")
fit_gradient_boosting = _family_fitter("gradient-boosting")
fit_second_order_boosting = _family_fitter("second-order-boosting")
fit_leafwise_boosting = _family_fitter("leafwise-boosting")
fit_svm = _family_fitter("svm")
fit_mlp = _family_fitter("mlp")


def score(model: FittedModel, row):
    """Deterministic real-valued score of one row (or a batch)."""
    return model.score(row)


def predict(model: FittedModel, row):
    """Class in {0, 1} per the model's documented decision threshold."""
    return model.predict(row)


def model_to_dict(model: FittedModel) -> dict:
    return model.to_dict()


def model_from_dict(document: dict) -> FittedModel:
    family = document["family"]
    if family not in _MODEL_CLASSES:
        raise ConfigError(f"unknown model family {family!r}")
    config = ModelConfig.from_dict(document["config"])
    return _MODEL_CLASSES[family]._from_params(
        config, document["feature_width"], document["parameters"])


__all__ = [
    "DEFAULT_GRIDS",
    "EXTENSION_AXES",
    "FAMILIES",
    "TREE_FAMILIES",
    "FittedModel",
    "ModelConfig",
    "TreeNode",
    "collect_features",
    "tree_depth",
    "entropy_impurity",
    "gini_impurity",
    "sigmoid",
    "log_loss",
    "fit_model",
    "score",
    "predict",
    "model_to_dict",
    "model_from_dict",
    "fit_logistic_regression",
    "fit_decision_tree",
    "fit_random_forest",
    "fit_gradient_boosting",
    "fit_second_order_boosting",
    "fit_leafwise_boosting",
    "fit_svm",
    "fit_mlp",
    "kkt_violations",
    "rbf_gamma",
    "loss_and_gradients",
    "LogisticRegressionModel",
    "DecisionTreeModel",
    "RandomForestModel",
    "GradientBoostingModel",
    "SecondOrderBoostingModel",
    "LeafwiseBoostingModel",
    "SVMModel",
    "MLPModel",
]
