"""Combining the three strongest base models (forest, boosted trees, MLP).

Three combiners:
  * plain probability averaging,
  * weighted averaging with weights grid-searched on the validation split,
  * a stacked meta-MLP fed a 6-dim probe vector (the (1-p, p) pair from
    each base model in a fixed, persisted order).

The meta-MLP trains on cross-fitted base probabilities by default
(K-fold within the train split) so it never sees in-sample base outputs;
`meta_inputs` can also be `train` (in-sample) or `val`.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from .errors import ConfigError, DomainError, StateError
from .features import LabeledDataset
from .models import MODEL_REGISTRY, MlpModel, load_model, save_model

BASE_ORDER = ("forest", "boosted", "mlp")

ENSEMBLE_FORMAT = "sepsiskit-ensemble"
ENSEMBLE_VERSION = 1

META_DEFAULTS = {"hidden": (8, 4), "epochs": 400, "patience": 30}


def ordering_checksum(order) -> str:
    return hashlib.sha256(",".join(order).encode("utf-8")).hexdigest()


def average_proba(probs) -> float:
    """Arithmetic mean of the three base probabilities."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.shape[-1] != 3:
        raise DomainError(f"expected 3 probabilities, got shape {probs.shape}")
    if (probs < 0).any() or (probs > 1).any():
        raise DomainError("probabilities must lie in [0, 1]")
    return probs.mean(axis=-1)


def make_probe(base_models: dict, X, order=BASE_ORDER) -> np.ndarray:
    """(n, 6) probe matrix: (1-p, p) per base model in the given order."""
    cols = []
    for name in order:
        model = base_models.get(name)
        if model is None or not getattr(model, "fitted", False):
            raise StateError(f"base model {name!r} is not fitted")
        p = model.predict_proba(X)
        cols.append(1.0 - p)
        cols.append(p)
    return np.column_stack(cols)


class AverageEnsemble:
    """Probability-averaging combiner over fitted base models."""

    def __init__(self, base_models: dict, order=BASE_ORDER):
        self.base_models = base_models
        self.order = tuple(order)

    def predict_proba(self, X):
        probs = np.column_stack(
            [self.base_models[m].predict_proba(X) for m in self.order]
        )
        return average_proba(probs)


class WeightedEnsemble:
    """Convex-weighted averaging; weights fitted on the validation split
    by grid search over the simplex at step 0.05 (ties keep the first)."""

    def __init__(self, base_models: dict, order=BASE_ORDER, step=0.05):
        self.base_models = base_models
        self.order = tuple(order)
        self.step = step
        self.weights = None

    def fit_weights(self, X_val, y_val):
        from .evaluation import auc

        probs = np.column_stack(
            [self.base_models[m].predict_proba(X_val) for m in self.order]
        )
        ticks = int(round(1.0 / self.step))
        best = (-1.0, None)
        for i in range(ticks + 1):
            for j in range(ticks + 1 - i):
                w = np.array([i, j, ticks - i - j], dtype=np.float64) / ticks
                score = auc(probs @ w, y_val)
                if score > best[0]:
                    best = (score, w)
        self.weights = best[1]
        return self

    def predict_proba(self, X):
        if self.weights is None:
            raise StateError("weighted ensemble has no fitted weights")
        probs = np.column_stack(
            [self.base_models[m].predict_proba(X) for m in self.order]
        )
        return probs @ self.weights


class StackedEnsemble:
    """Base models + meta-MLP over the 6-dim probe vector."""

    def __init__(
        self,
        base_hyperparameters: dict | None = None,
        meta_hyperparameters: dict | None = None,
        seed: int = 0,
        k_folds: int = 5,
        meta_inputs: str = "cross_fit",
        order=BASE_ORDER,
    ):
        if meta_inputs not in ("cross_fit", "train", "val"):
            raise ConfigError(f"unknown meta_inputs {meta_inputs!r}")
        if k_folds < 2:
            raise ConfigError("k_folds must be >= 2")
        self.base_hyperparameters = base_hyperparameters or {}
        self.meta_hyperparameters = {**META_DEFAULTS, **(meta_hyperparameters or {})}
        self.seed = int(seed)
        self.k_folds = int(k_folds)
        self.meta_inputs = meta_inputs
        self.order = tuple(order)
        self.base_models: dict = {}
        self.meta: MlpModel | None = None
        self.fitted = False

    def _seeds(self):
        ss = np.random.SeedSequence(self.seed)
        n_base = len(self.order)
        children = ss.spawn(2 + n_base + n_base * self.k_folds)
        folds_seed, meta_seed = children[0], children[1]
        final_seeds = {m: children[2 + i] for i, m in enumerate(self.order)}
        fold_seeds = {
            (m, k): children[2 + n_base + i * self.k_folds + k]
            for i, m in enumerate(self.order)
            for k in range(self.k_folds)
        }
        return folds_seed, meta_seed, final_seeds, fold_seeds

    def _new_base(self, name, seed_seq):
        cls = MODEL_REGISTRY[name]
        seed = int(np.random.default_rng(seed_seq).integers(0, 2**31 - 1))
        return cls(self.base_hyperparameters.get(name), seed=seed)

    def fit(self, dataset: LabeledDataset):
        X_tr, y_tr = dataset.part("train")
        X_val, y_val = dataset.part("val")
        if not len(X_tr):
            raise DomainError("dataset has no train split")
        folds_seed, meta_seed, final_seeds, fold_seeds = self._seeds()

        # final base models on the full train split
        for name in self.order:
            model = self._new_base(name, final_seeds[name])
            model.fit(X_tr, y_tr, X_val if len(X_val) else None, y_val)
            self.base_models[name] = model

        probe_val = (
            make_probe(self.base_models, X_val, self.order) if len(X_val) else None
        )

        if self.meta_inputs == "cross_fit":
            n = len(X_tr)
            perm = np.random.default_rng(folds_seed).permutation(n)
            fold_of = np.empty(n, dtype=np.int64)
            fold_of[perm] = np.arange(n) % self.k_folds
            probe_tr = np.empty((n, 2 * len(self.order)))
            for k in range(self.k_folds):
                hold = fold_of == k
                rest = ~hold
                if len(np.unique(y_tr[rest])) < 2:
                    raise DomainError(f"cross-fit fold {k} lost a class")
                fold_bases = {}
                for name in self.order:
                    m = self._new_base(name, fold_seeds[(name, k)])
                    m.fit(X_tr[rest], y_tr[rest], X_val if len(X_val) else None, y_val)
                    fold_bases[name] = m
                probe_tr[hold] = make_probe(fold_bases, X_tr[hold], self.order)
            meta_X, meta_y = probe_tr, y_tr
        elif self.meta_inputs == "train":
            meta_X = make_probe(self.base_models, X_tr, self.order)
            meta_y = y_tr
        else:  # val
            if probe_val is None:
                raise DomainError("meta_inputs='val' requires a validation split")
            meta_X, meta_y = probe_val, y_val

        meta_seed_int = int(np.random.default_rng(meta_seed).integers(0, 2**31 - 1))
        self.meta = MlpModel(self.meta_hyperparameters, seed=meta_seed_int)
        self.meta.fit(
            meta_X,
            meta_y,
            probe_val if probe_val is not None else None,
            y_val if probe_val is not None else None,
        )
        self.fitted = True
        return self

    def predict_proba(self, X):
        if not self.fitted:
            raise StateError("stacked ensemble is not fitted")
        return self.meta.predict_proba(make_probe(self.base_models, X, self.order))


def save_ensemble(ensemble: StackedEnsemble, directory) -> None:
    if not ensemble.fitted:
        raise StateError("cannot save an unfitted ensemble")
    os.makedirs(directory, exist_ok=True)
    files = {}
    for name in ensemble.order:
        fname = f"base_{name}.json"
        save_model(ensemble.base_models[name], os.path.join(directory, fname))
        files[name] = fname
    save_model(ensemble.meta, os.path.join(directory, "meta.json"))
    manifest = {
        "format": ENSEMBLE_FORMAT,
        "version": ENSEMBLE_VERSION,
        "base_order": list(ensemble.order),
        "ordering_checksum": ordering_checksum(ensemble.order),
        "files": files,
        "meta_file": "meta.json",
        "seed": ensemble.seed,
        "k_folds": ensemble.k_folds,
        "meta_inputs": ensemble.meta_inputs,
    }
    with open(os.path.join(directory, "manifest.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_ensemble(directory) -> StackedEnsemble:
    with open(os.path.join(directory, "manifest.json"), "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("format") != ENSEMBLE_FORMAT:
        raise DomainError(f"not an ensemble directory: {directory}")
    order = tuple(manifest["base_order"])
    if ordering_checksum(order) != manifest.get("ordering_checksum"):
        raise DomainError("ensemble ordering checksum mismatch; refusing to load")
    ens = StackedEnsemble(
        seed=manifest["seed"],
        k_folds=manifest["k_folds"],
        meta_inputs=manifest["meta_inputs"],
        order=order,
    )
    for name in order:
        ens.base_models[name] = load_model(
            os.path.join(directory, manifest["files"][name])
        )
    ens.meta = load_model(os.path.join(directory, manifest["meta_file"]))
    ens.fitted = True
    return ens
