"""Fully connected regressor with three ReLU hidden layers, trained by minibatch SGD.

Hidden widths: the first equals the input width, each next one is half the
previous (rounded up, never below 2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from .base import RegressorModel, check_training_data, population_std


def hidden_widths(p: int) -> list[int]:
    h1 = p
    h2 = max(2, math.ceil(h1 / 2))
    h3 = max(2, math.ceil(h2 / 2))
    return [h1, h2, h3]


def init_params(p: int, rng: np.random.Generator):
    sizes = [p] + hidden_widths(p) + [1]
    params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        params.append((rng.uniform(-bound, bound, (fan_in, fan_out)), np.zeros(fan_out)))
    return params


def forward(params, X):
    """Output vector and the per-layer activations needed for backprop."""
    acts = [X]
    a = X
    for W, b in params[:-1]:
        a = np.maximum(a @ W + b, 0.0)
        acts.append(a)
    W, b = params[-1]
    return (a @ W + b)[:, 0], acts


def loss_and_grad(params, X, y):
    """Half mean squared error and its gradient w.r.t. every (W, b)."""
    out, acts = forward(params, X)
    m = X.shape[0]
    diff = out - y
    loss = 0.5 * float(diff @ diff) / m
    delta = (diff / m)[:, None]
    grads = [None] * len(params)
    for layer in range(len(params) - 1, -1, -1):
        W, _ = params[layer]
        a_in = acts[layer]
        grads[layer] = (a_in.T @ delta, delta.sum(axis=0))
        if layer:
            delta = (delta @ W.T) * (acts[layer] > 0)
    return loss, grads


@dataclass(eq=False)
class MLPModel(RegressorModel):
    params: list
    residual_std: float = 0.0
    kind = "mlp"

    @property
    def n_features(self) -> int:
        return self.params[0][0].shape[0]

    def _predict(self, X):
        return forward(self.params, X)[0]

    def to_dict(self):
        return {"kind": self.kind, "residual_std": self.residual_std,
                "layers": [{"W": W.tolist(), "b": b.tolist()} for W, b in self.params]}

    @classmethod
    def from_dict(cls, d):
        params = [(np.array(l["W"], dtype=np.float64), np.array(l["b"], dtype=np.float64))
                  for l in d["layers"]]
        return cls(params, d["residual_std"])


def fit_mlp(X, y, epochs=200, batch=32, learning_rate=1e-3, seed=0) -> MLPModel:
    X, y = check_training_data(X, y)
    rng = np.random.default_rng(seed)
    params = [(W.copy(), b.copy()) for W, b in init_params(X.shape[1], rng)]
    n = X.shape[0]
    for _ in range(epochs):
        perm = rng.permutation(n)
        for start in range(0, n, batch):
            idx = perm[start:start + batch]
            _, grads = loss_and_grad(params, X[idx], y[idx])
            for (W, b), (gW, gb) in zip(params, grads):
                W -= learning_rate * gW
                b -= learning_rate * gb
    model = MLPModel(params)
    pred = model._predict(X)
    if not np.isfinite(pred).all():
        raise DataError("deep regressor diverged; lower mlp_learning_rate")
    model.residual_std = population_std(y - pred)
    return model
