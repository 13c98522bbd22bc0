"""Gradient-boosted trees on logistic loss.

Each round fits a second-order regression tree to (grad, hess) of the
current raw scores, shrunk by the learning rate; the final score is
logistic(base + sum of tree outputs). Optional row subsampling draws
without replacement per round from the master seed. With subsampling off
the training log-loss is non-increasing round over round.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from .base import (
    ProbabilisticModel,
    check_fit_inputs,
    check_predict_inputs,
    register_model,
    sigmoid,
)
from .tree import TreeArrays, grow_gradient_tree


@register_model
class BoostedModel(ProbabilisticModel):
    model_type = "boosted"
    SCHEMA = {
        "n_rounds": int,
        "learning_rate": float,
        "max_depth": int,
        "reg_lambda": float,
        "gamma": float,
        "subsample": float,
        "min_samples_leaf": int,
        "min_child_weight": float,
    }
    DEFAULTS = {
        "n_rounds": 200,
        "learning_rate": 0.1,
        "max_depth": 3,
        "reg_lambda": 1.0,
        "gamma": 0.0,
        "subsample": 1.0,
        "min_samples_leaf": 1,
        "min_child_weight": 1e-3,
    }

    def __init__(self, hyperparameters=None, seed=0):
        super().__init__(hyperparameters, seed)
        hp = self.hyperparameters
        if hp["n_rounds"] <= 0:
            raise ConfigError(f"n_rounds must be positive, got {hp['n_rounds']}")
        if hp["max_depth"] is None or hp["max_depth"] <= 0:
            raise ConfigError("max_depth must be a positive integer")
        if not (0.0 < hp["subsample"] <= 1.0):
            raise ConfigError(f"subsample must be in (0, 1], got {hp['subsample']}")
        if not (0.0 < hp["learning_rate"] <= 1.0):
            raise ConfigError("learning_rate must be in (0, 1]")

    def fit(self, X, y, X_val=None, y_val=None):
        X, y = check_fit_inputs(X, y)
        hp = self.hyperparameters
        self._n_features = X.shape[1]
        n = X.shape[0]
        prior = float(np.clip(y.mean(), 1e-6, 1.0 - 1e-6))
        self._base = float(np.log(prior / (1.0 - prior)))
        raw = np.full(n, self._base)
        yf = y.astype(np.float64)
        rng = np.random.default_rng(np.random.SeedSequence(self.seed))
        self._trees = []
        m = max(1, int(round(hp["subsample"] * n)))
        for _ in range(hp["n_rounds"]):
            p = sigmoid(raw)
            g = p - yf
            h = p * (1.0 - p)
            if hp["subsample"] < 1.0:
                rows = np.sort(rng.choice(n, size=m, replace=False))
                Xr, gr, hr = X[rows], g[rows], h[rows]
            else:
                Xr, gr, hr = X, g, h
            tree = grow_gradient_tree(
                Xr,
                gr,
                hr,
                reg_lambda=hp["reg_lambda"],
                gamma=hp["gamma"],
                max_depth=hp["max_depth"],
                min_samples_leaf=hp["min_samples_leaf"],
                min_child_weight=hp["min_child_weight"],
            )
            self._trees.append(tree)
            raw += hp["learning_rate"] * tree.predict(X)
        self.fitted = True
        return self

    def decision_raw(self, X):
        """Raw additive score before the logistic link."""
        self._require_fitted()
        X = check_predict_inputs(X, self._n_features)
        raw = np.full(X.shape[0], self._base)
        for tree in self._trees:
            raw += self.hyperparameters["learning_rate"] * tree.predict(X)
        return raw

    def predict_proba(self, X):
        return sigmoid(self.decision_raw(X))

    def state_blob(self):
        return {
            "n_features": self._n_features,
            "base": self._base,
            "trees": [t.to_blob() for t in self._trees],
        }

    def load_state_blob(self, blob):
        self._n_features = int(blob["n_features"])
        self._base = float(blob["base"])
        self._trees = [TreeArrays.from_blob(b) for b in blob["trees"]]
