"""From-scratch multilayer perceptron with rectifier hidden layers.

Heads: "linear" (MSE regression), "softmax" (cross-entropy classification)
and "softmax_mse" (MSE against target fractions, used by the power policy).
Training is mini-batch gradient descent with momentum. The backward pass
also returns gradients with respect to the inputs, which the policy
fine-tuning needs to push gradients through a frozen estimator network.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericalFailure

MOMENTUM = 0.9


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0


class Mlp:
    def __init__(self, layer_sizes, head: str = "linear", seed: int = 0):
        if head not in ("linear", "softmax", "softmax_mse"):
            raise ValueError(f"unknown head {head!r}")
        self.layer_sizes = list(layer_sizes)
        self.head = head
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.weights = []
        self.biases = []
        for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            scale = np.sqrt(2.0 / n_in)
            self.weights.append(rng.normal(0.0, scale, (n_in, n_out)))
            # small nonzero bias keeps pre-activations off the rectifier kink
            self.biases.append(rng.normal(0.0, 0.01, n_out))

    # -- forward --------------------------------------------------------
    def forward(self, X):
        """Returns (output, per-layer activations for backprop)."""
        a = np.atleast_2d(np.asarray(X, dtype=float))
        acts = [a]
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ W + b
            a = np.maximum(z, 0.0) if i < len(self.weights) - 1 else z
            acts.append(a)
        out = _softmax(a) if self.head in ("softmax", "softmax_mse") else a
        return out, acts

    def predict(self, X):
        return self.forward(X)[0]

    # -- loss and gradients ---------------------------------------------
    def loss(self, X, Y) -> float:
        out, _ = self.forward(X)
        return self._loss_from_output(out, np.asarray(Y))

    def _loss_from_output(self, out, Y) -> float:
        n = out.shape[0]
        if self.head == "linear":
            return float(np.mean((out - np.atleast_2d(Y)) ** 2))
        if self.head == "softmax":
            labels = Y.astype(int).ravel()
            p = np.clip(out[np.arange(n), labels], 1e-12, None)
            return float(-np.mean(np.log(p)))
        return float(np.mean((out - np.atleast_2d(Y)) ** 2))

    def loss_and_grads(self, X, Y):
        """(loss, weight grads, bias grads, input grads)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.asarray(Y)
        out, acts = self.forward(X)
        n = X.shape[0]
        if self.head == "linear":
            target = np.atleast_2d(Y).reshape(out.shape)
            loss = float(np.mean((out - target) ** 2))
            delta = 2.0 * (out - target) / out.size
        elif self.head == "softmax":
            labels = Y.astype(int).ravel()
            p = np.clip(out[np.arange(n), labels], 1e-12, None)
            loss = float(-np.mean(np.log(p)))
            delta = out.copy()
            delta[np.arange(n), labels] -= 1.0
            delta /= n
        else:  # softmax_mse
            target = np.atleast_2d(Y).reshape(out.shape)
            loss = float(np.mean((out - target) ** 2))
            d_out = 2.0 * (out - target) / out.size
            delta = _softmax_backward(out, d_out)
        d_in = self.backprop_from_delta(acts, delta, accumulate=True)
        return loss, self._gw, self._gb, d_in

    def backprop_from_delta(self, acts, delta, accumulate: bool = False):
        """Propagate an output-layer (pre-head for softmax) delta back to
        the inputs; optionally accumulate parameter gradients."""
        if accumulate:
            self._gw = [None] * len(self.weights)
            self._gb = [None] * len(self.biases)
        for i in reversed(range(len(self.weights))):
            if accumulate:
                self._gw[i] = acts[i].T @ delta
                self._gb[i] = delta.sum(axis=0)
            delta = delta @ self.weights[i].T
            if i > 0:
                delta = delta * (acts[i] > 0.0)
        return delta

    def input_gradient(self, X, d_out):
        """Gradient of sum(output * d_out) with respect to X.

        For softmax heads d_out is taken with respect to the softmax output.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out, acts = self.forward(X)
        delta = _softmax_backward(out, d_out) \
            if self.head in ("softmax", "softmax_mse") else np.asarray(d_out)
        return self.backprop_from_delta(acts, delta, accumulate=False)

    # -- training -------------------------------------------------------
    def fit(self, X, Y, config: TrainConfig) -> float:
        """Seeded mini-batch SGD with momentum; returns the final loss."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.asarray(Y)
        n = X.shape[0]
        if n < 1:
            raise ValueError("need at least one sample")
        rng = np.random.default_rng(config.seed)
        vel_w = [np.zeros_like(W) for W in self.weights]
        vel_b = [np.zeros_like(b) for b in self.biases]
        loss = self.loss(X, Y)
        for _ in range(config.epochs):
            order = rng.permutation(n)
            for start in range(0, n, config.batch_size):
                idx = order[start:start + config.batch_size]
                loss, gw, gb, _ = self.loss_and_grads(X[idx], Y[idx])
                if not np.isfinite(loss):
                    raise NumericalFailure(
                        f"non-finite training loss {loss} "
                        f"(lr={config.learning_rate}, layers={self.layer_sizes})")
                for i in range(len(self.weights)):
                    vel_w[i] = MOMENTUM * vel_w[i] - config.learning_rate * gw[i]
                    vel_b[i] = MOMENTUM * vel_b[i] - config.learning_rate * gb[i]
                    self.weights[i] += vel_w[i]
                    self.biases[i] += vel_b[i]
        final = self.loss(X, Y)
        if not np.isfinite(final):
            raise NumericalFailure("non-finite final loss")
        return final

    # -- (de)serialization ----------------------------------------------
    def get_params(self) -> dict:
        return {"layer_sizes": self.layer_sizes, "head": self.head,
                "seed": self.seed}

    def to_dict(self) -> dict:
        return {"kind": "mlp", **self.get_params(),
                "weights": [W.tolist() for W in self.weights],
                "biases": [b.tolist() for b in self.biases]}

    @classmethod
    def from_dict(cls, d: dict) -> "Mlp":
        m = cls(d["layer_sizes"], head=d["head"], seed=d.get("seed", 0))
        m.weights = [np.array(W) for W in d["weights"]]
        m.biases = [np.array(b) for b in d["biases"]]
        return m

    def copy(self) -> "Mlp":
        return Mlp.from_dict(self.to_dict())


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _softmax_backward(p, d_out):
    d_out = np.asarray(d_out, dtype=float)
    dot = (d_out * p).sum(axis=1, keepdims=True)
    return p * (d_out - dot)


def flatten_params(model: Mlp) -> np.ndarray:
    return np.concatenate([W.ravel() for W in model.weights]
                          + [b.ravel() for b in model.biases])


def set_flat_params(model: Mlp, flat: np.ndarray) -> None:
    i = 0
    for W in model.weights:
        W[...] = flat[i:i + W.size].reshape(W.shape)
        i += W.size
    for b in model.biases:
        b[...] = flat[i:i + b.size].reshape(b.shape)
        i += b.size


def numerical_gradient(model: Mlp, X, Y, eps: float = 1e-6) -> np.ndarray:
    """Central finite differences of the loss over all parameters."""
    flat = flatten_params(model).copy()
    grad = np.zeros_like(flat)
    for j in range(flat.size):
        for sign, slot in ((1.0, 0), (-1.0, 1)):
            p = flat.copy()
            p[j] += sign * eps
            set_flat_params(model, p)
            if slot == 0:
                up = model.loss(X, Y)
            else:
                down = model.loss(X, Y)
        grad[j] = (up - down) / (2.0 * eps)
    set_flat_params(model, flat)
    return grad


def gradient_check(model: Mlp, X, Y, eps: float = 1e-6) -> float:
    """Max relative error of analytic vs central-difference gradients.

    Coordinates where a rectifier kink sits inside the probe interval make
    the finite difference meaningless; they are detected by disagreement
    between two probe widths and excluded.
    """
    _, gw, gb, _ = model.loss_and_grads(X, Y)
    analytic = np.concatenate([g.ravel() for g in gw]
                              + [g.ravel() for g in gb])
    fd_a = numerical_gradient(model, X, Y, eps)
    fd_b = numerical_gradient(model, X, Y, eps / 4.0)
    denom = np.maximum(np.abs(fd_a), 1e-6)
    stable = np.abs(fd_a - fd_b) / denom < 1e-5
    rel = np.abs(analytic - fd_a) / denom
    return float(rel[stable].max())
