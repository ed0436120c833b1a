"""Fully-connected feedforward classifier with a sigmoid output head.

Manual forward/backward passes over dense layers, trained with Adam on
mini-batches of the logistic loss. ``loss_and_gradients`` is exposed so
gradient correctness can be audited against finite differences.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, ConvergenceError, DataError
from .base import FittedModel, ModelConfig, log_loss, sigmoid

DEFAULT_LEARNING_RATE = 1e-3
DEFAULT_BATCH_SIZE = 32
DEFAULT_MAX_EPOCHS = 200
DEFAULT_PATIENCE = 10

_ACTIVATIONS = {
    "relu": (lambda z: np.maximum(z, 0.0), lambda z, a: (z > 0.0).astype(float)),
    "tanh": (np.tanh, lambda z, a: 1.0 - a * a),
    "logistic": (sigmoid, lambda z, a: a * (1.0 - a)),
}


class MLPModel(FittedModel):
    family = "mlp"
    score_kind = "probability"
    link = "logit"

    def __init__(self, config, feature_width, weights, biases, activation):
        super().__init__(config, feature_width)
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        self.activation = activation

    def logits(self, X):
        act, _ = _ACTIVATIONS[self.activation]
        a = X
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            a = act(a @ W + b)
        return (a @ self.weights[-1] + self.biases[-1]).ravel()

    def _score_batch(self, X):
        return sigmoid(self.logits(X))

    def _attribution_batch(self, X):
        return self.logits(X)

    def _params_to_dict(self):
        return {
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "activation": self.activation,
        }

    @classmethod
    def _from_params(cls, config, feature_width, params):
        return cls(config, feature_width, params["weights"], params["biases"],
                   params["activation"])


def init_parameters(layer_sizes, rng):
    """Glorot-uniform weights, zero biases."""
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def loss_and_gradients(weights, biases, activation, X, y):
    """Mean logistic loss over the batch and its parameter gradients."""
    act, act_grad = _ACTIVATIONS[activation]
    n = X.shape[0]
    pre, post = [], [X]
    a = X
    for W, b in zip(weights[:-1], biases[:-1]):
        z = a @ W + b
        a = act(z)
        pre.append(z)
        post.append(a)
    logits = (a @ weights[-1] + biases[-1]).ravel()
    p = sigmoid(logits)
    sign = np.where(y > 0.5, 1.0, -1.0)
    loss = float(np.mean(np.logaddexp(0.0, -sign * logits)))

    delta = ((p - y) / n)[:, None]
    grads_w = [None] * len(weights)
    grads_b = [None] * len(biases)
    for layer in range(len(weights) - 1, -1, -1):
        grads_w[layer] = post[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ weights[layer].T) * act_grad(pre[layer - 1],
                                                          post[layer])
    return loss, grads_w, grads_b


def fit_mlp(X, y, config: ModelConfig):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not set(np.unique(y)) <= {0.0, 1.0}:
        raise DataError("labels must be binary 0/1")
    hidden = config.get("hidden_layer_sizes", (100,))
    activation = config.get("activation", "relu")
    if activation not in _ACTIVATIONS:
        raise ConfigError(f"unknown activation {activation!r}")
    lr = float(config.get("learning_rate_init", DEFAULT_LEARNING_RATE))
    batch_size = int(config.get("batch_size", DEFAULT_BATCH_SIZE))
    max_epochs = int(config.get("max_epochs", DEFAULT_MAX_EPOCHS))
    patience = int(config.get("patience", DEFAULT_PATIENCE))

    n, m = X.shape
    layer_sizes = [m, *hidden, 1]
    rng = np.random.Generator(np.random.PCG64(config.seed))
    weights, biases = init_parameters(layer_sizes, rng)

    # Adam state
    mw = [np.zeros_like(w) for w in weights]
    vw = [np.zeros_like(w) for w in weights]
    mb = [np.zeros_like(b) for b in biases]
    vb = [np.zeros_like(b) for b in biases]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0

    best_loss = np.inf
    stall = 0
    for epoch in range(max_epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = order[start:start + batch_size]
            _, gw, gb = loss_and_gradients(weights, biases, activation,
                                           X[batch], y[batch])
            step += 1
            for i in range(len(weights)):
                mw[i] = beta1 * mw[i] + (1 - beta1) * gw[i]
                vw[i] = beta2 * vw[i] + (1 - beta2) * gw[i] ** 2
                mb[i] = beta1 * mb[i] + (1 - beta1) * gb[i]
                vb[i] = beta2 * vb[i] + (1 - beta2) * gb[i] ** 2
                mw_hat = mw[i] / (1 - beta1 ** step)
                vw_hat = vw[i] / (1 - beta2 ** step)
                mb_hat = mb[i] / (1 - beta1 ** step)
                vb_hat = vb[i] / (1 - beta2 ** step)
                weights[i] -= lr * mw_hat / (np.sqrt(vw_hat) + eps)
                biases[i] -= lr * mb_hat / (np.sqrt(vb_hat) + eps)
        model = MLPModel(config, m, weights, biases, activation)
        epoch_loss = log_loss(model.logits(X), y)
        if not np.isfinite(epoch_loss):
            raise ConvergenceError(
                f"training loss became non-finite at epoch {epoch}",
                diagnostic={"epoch": epoch})
        if epoch_loss < best_loss - 1e-7:
            best_loss = epoch_loss
            stall = 0
        else:
            stall += 1
            if stall >= patience:
                break
    return MLPModel(config, m, weights, biases, activation)
