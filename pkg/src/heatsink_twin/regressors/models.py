"""Uniform train/predict front end for the five compared configurations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidInputError, ShapeError
from .data import Dataset, NormalizationParams, normalize_apply, normalize_fit
from .knn import KnnModel, predict_knn, train_knn
from .mlp import MlpModel, predict_mlp, train_mlp
from .multi import MultiOutputModel, predict_multi, train_multi
from .tree import TreeModel, predict_tree, train_tree

MODEL_KINDS = ("tree", "knn", "svr-direct", "svr-chained", "mlp")

MODEL_LABELS = {
    "tree": "Decision Tree Regressor",
    "knn": "k-NN Regressor",
    "svr-direct": "SVR (Direct Multi-output)",
    "svr-chained": "SVR (Chained Multi-output)",
    "mlp": "Neural Network (MLP)",
}

DEFAULT_HYPERPARAMETERS = {
    "tree": {"max_depth": 5, "min_leaf": 2},
    "knn": {"k": 5},
    "svr-direct": {"C": 1.0, "epsilon": 0.1, "gamma": None, "tol": 1e-8},
    "svr-chained": {"C": 1.0, "epsilon": 0.1, "gamma": None, "tol": 1e-8},
    "mlp": {"epochs": 500, "batch_size": 32, "lr": 1e-3},
}


@dataclass(frozen=True, eq=False)
class TrainedModel:
    kind: str
    normalization: NormalizationParams
    model: TreeModel | KnnModel | MultiOutputModel | MlpModel
    feature_names: tuple
    target_names: tuple
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0


def hyperparameters_for(kind: str, overrides: dict | None = None) -> dict:
    if kind not in MODEL_KINDS:
        raise InvalidInputError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    params = dict(DEFAULT_HYPERPARAMETERS[kind])
    for key, value in (overrides or {}).items():
        if key not in params:
            raise InvalidInputError(f"{kind} has no hyperparameter {key!r}")
        params[key] = value
    return params


def fit_model(dataset: Dataset, kind: str, seed: int = 0, overrides: dict | None = None,
              jobs: int = 1) -> TrainedModel:
    """Fit normalization on ``dataset`` and train one configuration on it."""
    params = hyperparameters_for(kind, overrides)
    norm = normalize_fit(dataset.X)
    X = normalize_apply(norm, dataset.X)
    Y = dataset.Y
    if kind == "tree":
        inner = train_tree(X, Y, **params)
    elif kind == "knn":
        inner = train_knn(X, Y, **params)
    elif kind == "mlp":
        inner = train_mlp(X, Y, seed=seed, **params)
    else:
        strategy = kind.split("-")[1]
        inner = train_multi(X, Y, base="svr", strategy=strategy, jobs=jobs, **params)
    return TrainedModel(kind, norm, inner, dataset.feature_names, dataset.target_names,
                        params, seed)


def predict(model: TrainedModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != len(model.feature_names):
        raise ShapeError(f"model expects {len(model.feature_names)} features, got {X.shape[1]}")
    Xn = normalize_apply(model.normalization, X)
    inner = model.model
    if isinstance(inner, TreeModel):
        return predict_tree(inner, Xn)
    if isinstance(inner, KnnModel):
        return predict_knn(inner, Xn)
    if isinstance(inner, MlpModel):
        return predict_mlp(inner, Xn)
    return predict_multi(inner, Xn)
