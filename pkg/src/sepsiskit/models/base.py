"""Shared probabilistic-model contract and flat-file persistence.

Every classifier fits on (X_train, y_train) with optional validation rows
and emits positive-class probabilities in [0, 1]. Fitting is deterministic
given the seed; fitted models are immutable and safe to score concurrently.

Persistence is a versioned, self-describing JSON file; floats round-trip
exactly (json uses repr), so a loaded model reproduces its predictions
bit for bit.
"""

from __future__ import annotations

import json

import numpy as np

from ..errors import ConfigError, DomainError, StateError

PERSIST_FORMAT = "sepsiskit-model"
PERSIST_VERSION = 1


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def log_loss(y, p, eps=1e-12):
    p = np.clip(p, eps, 1.0 - eps)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))


def check_fit_inputs(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DomainError(f"shape mismatch: X {X.shape}, y {y.shape}")
    if not np.isfinite(X).all():
        raise DomainError("non-finite feature values")
    if not np.isin(y, (0, 1)).all():
        raise DomainError("labels must be 0/1")
    if y.min() == y.max():
        raise DomainError("need at least one row of each class")
    return X, y


def check_predict_inputs(X, n_features):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != n_features:
        raise DomainError(f"expected {n_features} features, got {X.shape[1]}")
    if not np.isfinite(X).all():
        raise DomainError("non-finite feature values")
    return X


def coerce_hyperparameters(schema: dict, defaults: dict, given: dict | None) -> dict:
    """Validate a hyperparameter mapping against a per-model schema.

    Unknown keys are rejected; values are cast to the schema's type
    (None passes through for optional ints like unlimited depth).
    """
    out = dict(defaults)
    for key, value in (given or {}).items():
        if key not in schema:
            raise ConfigError(f"unknown hyperparameter {key!r}")
        caster = schema[key]
        if value is None:
            out[key] = None
            continue
        try:
            out[key] = caster(value)
        except (TypeError, ValueError):
            raise ConfigError(f"bad value for {key!r}: {value!r}") from None
    return out


class ProbabilisticModel:
    """fit / predict_proba contract shared by all classifiers."""

    model_type = ""
    SCHEMA: dict = {}
    DEFAULTS: dict = {}

    def __init__(self, hyperparameters: dict | None = None, seed: int = 0):
        self.hyperparameters = coerce_hyperparameters(
            self.SCHEMA, self.DEFAULTS, hyperparameters
        )
        self.seed = int(seed)
        self.fitted = False

    def fit(self, X, y, X_val=None, y_val=None):
        raise NotImplementedError

    def predict_proba(self, X):
        raise NotImplementedError

    def _require_fitted(self):
        if not self.fitted:
            raise StateError(f"{self.model_type} model is not fitted")

    # persistence hooks
    def state_blob(self) -> dict:
        raise NotImplementedError

    def load_state_blob(self, blob: dict) -> None:
        raise NotImplementedError


MODEL_REGISTRY: dict = {}


def register_model(cls):
    MODEL_REGISTRY[cls.model_type] = cls
    return cls


def save_model(model: ProbabilisticModel, path) -> None:
    model._require_fitted()
    doc = {
        "format": PERSIST_FORMAT,
        "version": PERSIST_VERSION,
        "model": model.model_type,
        "hyperparameters": model.hyperparameters,
        "seed": model.seed,
        "state": model.state_blob(),
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_model(path) -> ProbabilisticModel:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != PERSIST_FORMAT:
        raise DomainError(f"not a model file: {path}")
    if doc.get("version") != PERSIST_VERSION:
        raise DomainError(f"unsupported model file version {doc.get('version')}")
    cls = MODEL_REGISTRY.get(doc.get("model"))
    if cls is None:
        raise DomainError(f"unknown model type {doc.get('model')!r}")
    model = cls(doc["hyperparameters"], seed=doc["seed"])
    model.load_state_blob(doc["state"])
    model.fitted = True
    return model
