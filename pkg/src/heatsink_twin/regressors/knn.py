"""Brute-force Euclidean k-nearest-neighbour regression."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError


@dataclass(frozen=True, eq=False)
class KnnModel:
    X: np.ndarray
    Y: np.ndarray
    k: int = 5


def train_knn(X, Y, k: int = 5) -> KnnModel:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if k < 1 or k > len(X):
        raise InvalidInputError(f"k={k} needs 1 <= k <= n_train={len(X)}")
    return KnnModel(X.copy(), Y.copy(), int(k))


def neighbours(model: KnnModel, x) -> np.ndarray:
    """Indices of the k nearest training rows, nearest first, ties to lower index."""
    dist = np.sqrt(np.sum((model.X - x) ** 2, axis=1))
    return np.argsort(dist, kind="stable")[:model.k]


def predict_knn(model: KnnModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.array([model.Y[neighbours(model, x)].mean(axis=0) for x in X])
