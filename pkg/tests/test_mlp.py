"""MLP: finite-difference gradient audit, determinism, degenerate depth."""

import numpy as np
import pytest

from scorelens.models import ModelConfig, fit_mlp, loss_and_gradients
from scorelens.models.mlp import init_parameters


def mlp_config(**hp):
    hp.setdefault("max_epochs", 80)
    return ModelConfig(family="mlp", hyperparameters=hp, seed=5)


def flatten(grads_w, grads_b):
    return np.concatenate([g.ravel() for g in grads_w]
                          + [g.ravel() for g in grads_b])


@pytest.mark.parametrize("activation", ["relu", "tanh", "logistic"])
def test_gradients_match_central_differences(activation, rng):
    # 5-weight toy net: 2 inputs -> 1 hidden unit -> 1 output
    X = rng.normal(size=(12, 2))
    y = (rng.random(12) < 0.5).astype(np.float64)
    weights, biases = init_parameters([2, 1, 1], rng)
    if activation == "relu":   # keep away from the kink
        weights = [w + 0.5 for w in weights]
    _, gw, gb = loss_and_gradients(weights, biases, activation, X, y)
    analytic = flatten(gw, gb)

    eps = 1e-6
    numeric = np.zeros_like(analytic)
    params = [*weights, *biases]
    k = 0
    for p in params:
        flat = p.ravel()
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + eps
            up, _, _ = loss_and_gradients(weights, biases, activation, X, y)
            flat[i] = old - eps
            down, _, _ = loss_and_gradients(weights, biases, activation, X, y)
            flat[i] = old
            numeric[k] = (up - down) / (2 * eps)
            k += 1
    denom = np.maximum(np.abs(numeric), 1e-8)
    assert np.max(np.abs(analytic - numeric) / denom) < 1e-4


def test_zero_hidden_layers_solves_separable(rng):
    X = np.vstack([rng.normal(size=(30, 2)) + 3.0,
                   rng.normal(size=(30, 2)) - 3.0])
    y = np.array([1.0] * 30 + [0.0] * 30)
    model = fit_mlp((X, y), mlp_config(hidden_layer_sizes=(),
                                       activation="relu", max_epochs=200))
    assert (model.predict(X) == y).all()


def test_same_seed_identical_weights(rng):
    X = rng.normal(size=(64, 3))
    y = (X[:, 0] > 0).astype(np.float64)
    cfg = mlp_config(hidden_layer_sizes=(8,), activation="tanh",
                     max_epochs=10)
    a = fit_mlp((X, y), cfg)
    b = fit_mlp((X, y), cfg)
    for wa, wb in zip(a.weights, b.weights):
        assert np.array_equal(wa, wb)
    for ba, bb in zip(a.biases, b.biases):
        assert np.array_equal(ba, bb)


def test_non_finite_loss_raises_with_epoch(rng, monkeypatch):
    from scorelens.errors import ConvergenceError
    from scorelens.models import mlp as mlp_module
    X = rng.normal(size=(40, 2))
    y = (X[:, 0] > 0).astype(np.float64)
    monkeypatch.setattr(mlp_module, "log_loss", lambda *a: float("nan"))
    with pytest.raises(ConvergenceError, match="epoch 0"):
        fit_mlp((X, y), mlp_config(hidden_layer_sizes=(4,),
                                   activation="tanh"))


def test_hidden_sizes_from_table_grid(rng):
    X = rng.normal(size=(80, 4))
    y = (X[:, 0] > 0).astype(np.float64)
    model = fit_mlp((X, y), mlp_config(hidden_layer_sizes=(100, 50, 25),
                                       activation="logistic", max_epochs=3))
    shapes = [w.shape for w in model.weights]
    assert shapes == [(4, 100), (100, 50), (50, 25), (25, 1)]
