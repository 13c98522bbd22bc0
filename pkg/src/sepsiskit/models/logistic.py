"""L2-regularized logistic regression fitted by full-batch gradient descent.

Features are standardized internally (train mean/std); the convergence
test is the infinity norm of the gradient against `tol`. Hitting max_iter
without converging warns with the final gradient norm and returns the
model anyway.
"""

from __future__ import annotations

import warnings

import numpy as np

from .base import (
    ProbabilisticModel,
    check_fit_inputs,
    check_predict_inputs,
    register_model,
    sigmoid,
)


@register_model
class LogisticModel(ProbabilisticModel):
    model_type = "logistic"
    SCHEMA = {"learning_rate": float, "max_iter": int, "tol": float, "l2": float}
    DEFAULTS = {"learning_rate": 0.2, "max_iter": 5000, "tol": 1e-6, "l2": 1e-4}

    def fit(self, X, y, X_val=None, y_val=None):
        X, y = check_fit_inputs(X, y)
        hp = self.hyperparameters
        self._mean = X.mean(axis=0)
        std = X.std(axis=0)
        std[std == 0.0] = 1.0
        self._std = std
        Xs = (X - self._mean) / self._std
        n, d = Xs.shape
        w = np.zeros(d)
        b = 0.0
        lr, l2 = hp["learning_rate"], hp["l2"]
        grad_norm = np.inf
        for _ in range(hp["max_iter"]):
            p = sigmoid(Xs @ w + b)
            resid = p - y
            grad_w = Xs.T @ resid / n + l2 * w
            grad_b = float(resid.mean())
            grad_norm = max(float(np.abs(grad_w).max()), abs(grad_b))
            if grad_norm < hp["tol"]:
                break
            w -= lr * grad_w
            b -= lr * grad_b
        else:
            warnings.warn(
                f"logistic fit did not converge: |grad|_inf={grad_norm:.3e} "
                f"after {hp['max_iter']} iterations",
                RuntimeWarning,
            )
        self._w = w
        self._b = b
        self.fitted = True
        return self

    def predict_proba(self, X):
        self._require_fitted()
        X = check_predict_inputs(X, self._w.shape[0])
        Xs = (X - self._mean) / self._std
        return sigmoid(Xs @ self._w + self._b)

    def state_blob(self):
        return {
            "weights": self._w.tolist(),
            "bias": self._b,
            "mean": self._mean.tolist(),
            "std": self._std.tolist(),
        }

    def load_state_blob(self, blob):
        self._w = np.asarray(blob["weights"], dtype=np.float64)
        self._b = float(blob["bias"])
        self._mean = np.asarray(blob["mean"], dtype=np.float64)
        self._std = np.asarray(blob["std"], dtype=np.float64)
