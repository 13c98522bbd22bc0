"""Random forest: bagged Gini CART trees with per-node feature subsets.

Per-tree seeds derive from the master seed (SeedSequence spawn), so trees
can in principle be grown in parallel and still reproduce the sequential
fit exactly. Probability is the mean of per-tree leaf class-1 frequencies.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from .base import (
    ProbabilisticModel,
    check_fit_inputs,
    check_predict_inputs,
    register_model,
)
from .tree import TreeArrays, grow_classification_tree


def _resolve_max_features(max_features, n_features: int):
    if max_features in (None, "none"):
        return None
    if max_features == "sqrt":
        return max(1, int(np.sqrt(n_features)))
    if max_features == "log2":
        return max(1, int(np.log2(n_features)))
    m = int(max_features)
    if m <= 0:
        raise ConfigError(f"max_features must be positive, got {m}")
    return min(m, n_features)


@register_model
class ForestModel(ProbabilisticModel):
    model_type = "forest"
    SCHEMA = {
        "n_trees": int,
        "max_depth": int,
        "min_samples_leaf": int,
        "max_features": str,
        "bootstrap": lambda v: bool(int(v)) if isinstance(v, str) else bool(v),
    }
    DEFAULTS = {
        "n_trees": 100,
        "max_depth": None,  # None = grow to purity
        "min_samples_leaf": 1,
        "max_features": "sqrt",
        "bootstrap": True,
    }

    def __init__(self, hyperparameters=None, seed=0):
        super().__init__(hyperparameters, seed)
        hp = self.hyperparameters
        if hp["n_trees"] <= 0:
            raise ConfigError(f"n_trees must be positive, got {hp['n_trees']}")
        if hp["max_depth"] is not None and hp["max_depth"] <= 0:
            raise ConfigError(f"max_depth must be positive, got {hp['max_depth']}")
        if hp["min_samples_leaf"] <= 0:
            raise ConfigError("min_samples_leaf must be positive")

    def fit(self, X, y, X_val=None, y_val=None):
        X, y = check_fit_inputs(X, y)
        hp = self.hyperparameters
        self._n_features = X.shape[1]
        mtry = _resolve_max_features(hp["max_features"], X.shape[1])
        seeds = np.random.SeedSequence(self.seed).spawn(hp["n_trees"])
        self._trees = []
        n = X.shape[0]
        for tree_seed in seeds:
            rng = np.random.default_rng(tree_seed)
            if hp["bootstrap"]:
                rows = rng.integers(0, n, size=n)
                Xb, yb = X[rows], y[rows]
            else:
                Xb, yb = X, y
            self._trees.append(
                grow_classification_tree(
                    Xb,
                    yb,
                    rng,
                    max_depth=hp["max_depth"],
                    min_samples_leaf=hp["min_samples_leaf"],
                    max_features=mtry,
                )
            )
        self.fitted = True
        return self

    def predict_proba(self, X):
        self._require_fitted()
        X = check_predict_inputs(X, self._n_features)
        acc = np.zeros(X.shape[0])
        for tree in self._trees:
            acc += tree.predict(X)
        return acc / len(self._trees)

    def state_blob(self):
        return {
            "n_features": self._n_features,
            "trees": [t.to_blob() for t in self._trees],
        }

    def load_state_blob(self, blob):
        self._n_features = int(blob["n_features"])
        self._trees = [TreeArrays.from_blob(b) for b in blob["trees"]]
