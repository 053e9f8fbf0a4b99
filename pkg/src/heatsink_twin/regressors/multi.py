"""Direct and chained multi-output wrappers around single-target learners."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError
from .data import NormalizationParams, normalize_apply, normalize_fit
from .knn import predict_knn, train_knn
from .svr import predict_svr, train_svr
from .tree import predict_tree, train_tree

STRATEGIES = ("direct", "chained")

_TRAIN = {
    "svr": lambda X, y, p: train_svr(X, y, **p),
    "tree": lambda X, y, p: train_tree(X, y, **p),
    "knn": lambda X, y, p: train_knn(X, y, **p),
}
_PREDICT = {
    "svr": lambda m, X: predict_svr(m, X),
    "tree": lambda m, X: predict_tree(m, X)[:, 0],
    "knn": lambda m, X: predict_knn(m, X)[:, 0],
}


@dataclass(frozen=True, eq=False)
class MultiOutputModel:
    """One base model per target.

    For the chained strategy, model j sees the inputs plus targets 0..j-1,
    the latter min-max scaled with ``chain_scaling`` (fit on the training
    targets) so they live on the same [0, 1] footing as the inputs.
    """

    strategy: str
    base: str
    models: tuple
    chain_scaling: NormalizationParams | None = None

    @property
    def n_targets(self):
        return len(self.models)


def _fit_one(base, X, y, params):
    return _TRAIN[base](X, y, params)


def train_multi(X, Y, base: str = "svr", strategy: str = "direct", jobs: int = 1,
                **params) -> MultiOutputModel:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if strategy not in STRATEGIES:
        raise InvalidInputError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    if base not in _TRAIN:
        raise InvalidInputError(f"unknown base model {base!r}")
    m = Y.shape[1]
    if m < 1:
        raise InvalidInputError("need at least one target")
    if strategy == "direct":
        if jobs > 1 and m > 1:
            from concurrent.futures import ProcessPoolExecutor
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                models = list(pool.map(_fit_one, [base] * m, [X] * m,
                                       [Y[:, j] for j in range(m)], [params] * m))
        else:
            models = [_fit_one(base, X, Y[:, j], params) for j in range(m)]
        return MultiOutputModel(strategy, base, tuple(models))

    scaling = normalize_fit(Y)
    Ys = normalize_apply(scaling, Y)
    models = []
    for j in range(m):
        Xj = np.hstack([X, Ys[:, :j]])
        models.append(_fit_one(base, Xj, Y[:, j], params))
    return MultiOutputModel(strategy, base, tuple(models), scaling)


def predict_multi(model: MultiOutputModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    predict = _PREDICT[model.base]
    out = np.empty((len(X), model.n_targets))
    if model.strategy == "direct":
        for j, sub in enumerate(model.models):
            out[:, j] = predict(sub, X)
        return out
    scaling = model.chain_scaling
    for j, sub in enumerate(model.models):
        head = NormalizationParams(scaling.minimum[:j], scaling.maximum[:j])
        scaled = normalize_apply(head, out[:, :j]) if j else np.zeros((len(X), 0))
        out[:, j] = predict(sub, np.hstack([X, scaled]))
    return out


def input_width(model: MultiOutputModel, j: int, n_features: int) -> int:
    """Number of input columns seen by the j-th (0-based) target model."""
    return n_features + (j if model.strategy == "chained" else 0)
