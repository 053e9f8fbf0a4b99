"""Datasets, min-max normalization and feature correlation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError, ShapeError


@dataclass(frozen=True, eq=False)
class Dataset:
    X: np.ndarray
    Y: np.ndarray
    feature_names: tuple
    target_names: tuple

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        Y = np.asarray(self.Y, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "target_names", tuple(self.target_names))
        if len(X) < 1 or len(X) != len(Y):
            raise ShapeError(f"X has {len(X)} rows, Y has {len(Y)}")
        if X.shape[1] != len(self.feature_names) or Y.shape[1] != len(self.target_names):
            raise ShapeError("name count does not match column count")
        names = self.feature_names + self.target_names
        if len(set(names)) != len(names):
            raise InvalidInputError(f"column names must be unique: {names}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise InvalidInputError("dataset has non-finite entries")

    def __len__(self):
        return len(self.X)

    @property
    def n_features(self):
        return self.X.shape[1]

    @property
    def n_targets(self):
        return self.Y.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.X[idx], self.Y[idx], self.feature_names, self.target_names)


@dataclass(frozen=True, eq=False)
class NormalizationParams:
    minimum: np.ndarray
    maximum: np.ndarray

    @property
    def span(self):
        return self.maximum - self.minimum


def normalize_fit(X) -> NormalizationParams:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if len(X) == 0:
        raise InvalidInputError("cannot fit normalization on zero rows")
    return NormalizationParams(X.min(axis=0), X.max(axis=0))


def normalize_apply(params: NormalizationParams, X) -> np.ndarray:
    """(x - min) / (max - min); a constant training column maps to 0."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != len(params.minimum):
        raise ShapeError(f"expected {len(params.minimum)} features, got {X.shape[1]}")
    span = params.span
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (X - params.minimum) / safe, 0.0)


def denormalize(params: NormalizationParams, Xn) -> np.ndarray:
    Xn = np.atleast_2d(np.asarray(Xn, dtype=float))
    if Xn.shape[1] != len(params.minimum):
        raise ShapeError(f"expected {len(params.minimum)} features, got {Xn.shape[1]}")
    return Xn * params.span + params.minimum


def pearson_correlation(X, y):
    """Pearson r of every column of X against y.

    Returns ``(r, constant)``; columns with zero variance (in X or y) report
    r = 0 and are flagged in ``constant``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if len(X) < 2 or len(y) != len(X):
        raise InvalidInputError("need at least 2 paired samples")
    xc = X - X.mean(axis=0)
    yc = y - y.mean()
    sx = np.sqrt(np.sum(xc ** 2, axis=0))
    sy = np.sqrt(np.sum(yc ** 2))
    constant = (sx == 0) | (sy == 0)
    denom = np.where(constant, 1.0, sx * sy)
    r = np.where(constant, 0.0, (xc.T @ yc) / denom)
    return np.clip(r, -1.0, 1.0), constant
