"""Three-layer perceptron (two hidden layers + logistic output) trained by
mini-batch backpropagation on binary cross-entropy.

The forward pass is
    o = sigmoid(W_out^T f(W_2^T f(W_1^T x + b_1) + b_2) + b_out)
with a configurable smooth hidden nonlinearity f (tanh default; relu and
logistic selectable). Dropout is inverted (scaled at train time), L2 decay
applies to weights only, and early stopping watches validation loss with
configurable patience. Weights initialize from N(0, init_scale^2), seeded.

`loss_and_grads` is the pure training objective used both by the trainer
and by finite-difference gradient verification.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DomainError, StateError
from .base import (
    ProbabilisticModel,
    check_fit_inputs,
    check_predict_inputs,
    log_loss,
    register_model,
    sigmoid,
)

ACTIVATIONS = {
    "tanh": (np.tanh, lambda z, a: 1.0 - a * a),
    "relu": (lambda z: np.maximum(z, 0.0), lambda z, a: (z > 0).astype(np.float64)),
    "logistic": (sigmoid, lambda z, a: a * (1.0 - a)),
}


@dataclass
class MlpParams:
    """Weights/biases of the 3-layer network; shapes chain input->h1->h2->1."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    W_out: np.ndarray
    b_out: np.ndarray
    activation: str = "tanh"

    def weight_arrays(self):
        return [self.W1, self.b1, self.W2, self.b2, self.W_out, self.b_out]

    def copy(self) -> "MlpParams":
        return MlpParams(*(a.copy() for a in self.weight_arrays()), self.activation)

    def check_shapes(self, n_in: int) -> None:
        ok = (
            self.W1.shape[0] == n_in
            and self.W1.shape[1] == self.b1.shape[0] == self.W2.shape[0]
            and self.W2.shape[1] == self.b2.shape[0] == self.W_out.shape[0]
            and self.W_out.shape[1] == self.b_out.shape[0] == 1
        )
        if not ok:
            raise DomainError(
                f"mlp shape chain broken for input dim {n_in}: "
                f"{[a.shape for a in self.weight_arrays()]}"
            )


def init_params(n_in, hidden, rng, init_scale=0.1, activation="tanh") -> MlpParams:
    h1, h2 = hidden
    return MlpParams(
        W1=rng.normal(0.0, init_scale, (n_in, h1)),
        b1=np.zeros(h1),
        W2=rng.normal(0.0, init_scale, (h1, h2)),
        b2=np.zeros(h2),
        W_out=rng.normal(0.0, init_scale, (h2, 1)),
        b_out=np.zeros(1),
        activation=activation,
    )


def _forward(params: MlpParams, X, drop_masks=None):
    act, _ = ACTIVATIONS[params.activation]
    z1 = X @ params.W1 + params.b1
    a1 = act(z1)
    if drop_masks is not None:
        a1 = a1 * drop_masks[0]
    z2 = a1 @ params.W2 + params.b2
    a2 = act(z2)
    if drop_masks is not None:
        a2 = a2 * drop_masks[1]
    z3 = a2 @ params.W_out + params.b_out
    return z1, a1, z2, a2, z3


def mlp_forward(params: MlpParams, X) -> np.ndarray:
    """Positive-class probability for rows of X (no dropout)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    params.check_shapes(X.shape[1])
    z3 = _forward(params, X)[4]
    return sigmoid(z3[:, 0])


def _bce_from_logits(z, y):
    # mean over rows of softplus(z) - y*z, computed stably
    return float(np.mean(np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))))


def loss_and_grads(params: MlpParams, X, y, l2=0.0, drop_masks=None):
    """Mean BCE (+ 0.5*l2*sum of squared weights) and its parameter gradients."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1, 1)
    n = X.shape[0]
    act, dact = ACTIVATIONS[params.activation]
    m1 = drop_masks[0] if drop_masks is not None else None
    m2 = drop_masks[1] if drop_masks is not None else None
    z1 = X @ params.W1 + params.b1
    a1 = act(z1)
    a1d = a1 * m1 if m1 is not None else a1
    z2 = a1d @ params.W2 + params.b2
    a2 = act(z2)
    a2d = a2 * m2 if m2 is not None else a2
    z3 = a2d @ params.W_out + params.b_out
    loss = _bce_from_logits(z3, y)
    loss += 0.5 * l2 * sum(
        float(np.sum(W * W)) for W in (params.W1, params.W2, params.W_out)
    )
    dz3 = (sigmoid(z3) - y) / n
    dW_out = a2d.T @ dz3 + l2 * params.W_out
    db_out = dz3.sum(axis=0)
    da2 = dz3 @ params.W_out.T
    if m2 is not None:
        da2 = da2 * m2
    dz2 = da2 * dact(z2, a2)
    dW2 = a1d.T @ dz2 + l2 * params.W2
    db2 = dz2.sum(axis=0)
    da1 = dz2 @ params.W2.T
    if m1 is not None:
        da1 = da1 * m1
    dz1 = da1 * dact(z1, a1)
    dW1 = X.T @ dz1 + l2 * params.W1
    db1 = dz1.sum(axis=0)
    return loss, [dW1, db1, dW2, db2, dW_out, db_out]


@register_model
class MlpModel(ProbabilisticModel):
    model_type = "mlp"
    SCHEMA = {
        "hidden": lambda v: tuple(int(x) for x in str(v).replace(" ", "").split(",")),
        "activation": str,
        "learning_rate": float,
        "optimizer": str,
        "l2": float,
        "dropout": float,
        "epochs": int,
        "batch_size": int,
        "patience": int,
        "init_scale": float,
    }
    DEFAULTS = {
        "hidden": (16, 8),
        "activation": "tanh",
        "learning_rate": 0.01,
        "optimizer": "adam",
        "l2": 1e-4,
        "dropout": 0.0,
        "epochs": 300,
        "batch_size": 32,
        "patience": 20,
        "init_scale": 0.1,
    }

    def __init__(self, hyperparameters=None, seed=0):
        super().__init__(hyperparameters, seed)
        hp = self.hyperparameters
        if len(hp["hidden"]) != 2 or any(w <= 0 for w in hp["hidden"]):
            raise ConfigError(f"hidden must be two positive widths, got {hp['hidden']}")
        if hp["activation"] not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {hp['activation']!r}")
        if hp["optimizer"] not in ("sgd", "adam"):
            raise ConfigError(f"unknown optimizer {hp['optimizer']!r}")
        if not (0.0 <= hp["dropout"] < 1.0):
            raise ConfigError("dropout must be in [0, 1)")

    def fit(self, X, y, X_val=None, y_val=None):
        X, y = check_fit_inputs(X, y)
        hp = self.hyperparameters
        self._mean = X.mean(axis=0)
        std = X.std(axis=0)
        std[std == 0.0] = 1.0
        self._std = std
        Xs = (X - self._mean) / self._std
        n = Xs.shape[0]
        rng = np.random.default_rng(self.seed)
        params = init_params(
            Xs.shape[1], hp["hidden"], rng, hp["init_scale"], hp["activation"]
        )
        if X_val is not None and len(X_val):
            Xv = (np.asarray(X_val, dtype=np.float64) - self._mean) / self._std
            yv = np.asarray(y_val, dtype=np.float64)
        else:
            Xv = yv = None

        opt_m = [np.zeros_like(a) for a in params.weight_arrays()]
        opt_v = [np.zeros_like(a) for a in params.weight_arrays()]
        step = 0
        best_loss = np.inf
        best_params = params.copy()
        best_epoch = 0
        stale = 0
        batch = max(1, hp["batch_size"])
        drop = hp["dropout"]
        for epoch in range(hp["epochs"]):
            perm = rng.permutation(n)
            for start in range(0, n, batch):
                rows = perm[start : start + batch]
                Xb, yb = Xs[rows], y[rows]
                masks = None
                if drop > 0.0:
                    masks = [
                        (rng.random((len(rows), w)) >= drop) / (1.0 - drop)
                        for w in hp["hidden"]
                    ]
                loss, grads = loss_and_grads(params, Xb, yb, hp["l2"], masks)
                if not np.isfinite(loss):
                    raise StateError(
                        f"mlp training diverged at epoch {epoch}: loss={loss}"
                    )
                step += 1
                arrays = params.weight_arrays()
                if hp["optimizer"] == "adam":
                    b1, b2, eps = 0.9, 0.999, 1e-8
                    for a, gr, m, v in zip(arrays, grads, opt_m, opt_v):
                        m *= b1
                        m += (1 - b1) * gr
                        v *= b2
                        v += (1 - b2) * gr * gr
                        mhat = m / (1 - b1**step)
                        vhat = v / (1 - b2**step)
                        a -= hp["learning_rate"] * mhat / (np.sqrt(vhat) + eps)
                else:
                    for a, gr in zip(arrays, grads):
                        a -= hp["learning_rate"] * gr
            if Xv is not None:
                val_loss = log_loss(yv, mlp_forward(params, Xv))
                if val_loss < best_loss:
                    best_loss = val_loss
                    best_params = params.copy()
                    best_epoch = epoch
                    stale = 0
                else:
                    stale += 1
                    if stale > hp["patience"]:
                        break
        self._params = best_params if Xv is not None else params
        self._best_epoch = best_epoch if Xv is not None else hp["epochs"] - 1
        self.fitted = True
        return self

    def predict_proba(self, X):
        self._require_fitted()
        X = check_predict_inputs(X, self._mean.shape[0])
        Xs = (X - self._mean) / self._std
        return mlp_forward(self._params, Xs)

    def state_blob(self):
        p = self._params
        return {
            "mean": self._mean.tolist(),
            "std": self._std.tolist(),
            "activation": p.activation,
            "W1": p.W1.tolist(),
            "b1": p.b1.tolist(),
            "W2": p.W2.tolist(),
            "b2": p.b2.tolist(),
            "W_out": p.W_out.tolist(),
            "b_out": p.b_out.tolist(),
            "best_epoch": self._best_epoch,
        }

    def load_state_blob(self, blob):
        self._mean = np.asarray(blob["mean"], dtype=np.float64)
        self._std = np.asarray(blob["std"], dtype=np.float64)
        self._params = MlpParams(
            W1=np.asarray(blob["W1"], dtype=np.float64),
            b1=np.asarray(blob["b1"], dtype=np.float64),
            W2=np.asarray(blob["W2"], dtype=np.float64),
            b2=np.asarray(blob["b2"], dtype=np.float64),
            W_out=np.asarray(blob["W_out"], dtype=np.float64),
            b_out=np.asarray(blob["b_out"], dtype=np.float64),
            activation=blob["activation"],
        )
        self._best_epoch = int(blob.get("best_epoch", -1))
