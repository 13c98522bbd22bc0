"""Classifier implementations behind one probabilistic-model contract."""

from ..features import LabeledDataset
from .base import (
    MODEL_REGISTRY,
    ProbabilisticModel,
    load_model,
    log_loss,
    save_model,
    sigmoid,
)
from .boosting import BoostedModel
from .forest import ForestModel
from .logistic import LogisticModel
from .mlp import MlpModel, MlpParams, init_params, loss_and_grads, mlp_forward

BASE_MODEL_TYPES = ("logistic", "forest", "boosted", "mlp")


def fit_on_dataset(
    model_type: str, dataset: LabeledDataset, hyperparameters=None, seed=0
) -> ProbabilisticModel:
    """Fit one base model on a split dataset (train rows; val rows where used)."""
    cls = MODEL_REGISTRY[model_type]
    X_train, y_train = dataset.part("train")
    X_val, y_val = dataset.part("val")
    model = cls(hyperparameters, seed=seed)
    model.fit(X_train, y_train, X_val if len(X_val) else None, y_val)
    return model


def train_logistic(dataset, hyperparameters=None, seed=0):
    return fit_on_dataset("logistic", dataset, hyperparameters, seed)


def train_forest(dataset, hyperparameters=None, seed=0):
    return fit_on_dataset("forest", dataset, hyperparameters, seed)


def train_boosted(dataset, hyperparameters=None, seed=0):
    return fit_on_dataset("boosted", dataset, hyperparameters, seed)


def train_mlp(dataset, hyperparameters=None, seed=0):
    return fit_on_dataset("mlp", dataset, hyperparameters, seed)


__all__ = [
    "MODEL_REGISTRY",
    "BASE_MODEL_TYPES",
    "ProbabilisticModel",
    "LogisticModel",
    "ForestModel",
    "BoostedModel",
    "MlpModel",
    "MlpParams",
    "init_params",
    "loss_and_grads",
    "mlp_forward",
    "fit_on_dataset",
    "train_logistic",
    "train_forest",
    "train_boosted",
    "train_mlp",
    "save_model",
    "load_model",
    "sigmoid",
    "log_loss",
]
