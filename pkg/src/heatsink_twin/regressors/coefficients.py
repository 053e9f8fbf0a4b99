"""Regression from operating parameters to POD coefficients (full-field surrogate)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError
from ..pod import PodBasis, project, reconstruct
from .data import Dataset
from .models import TrainedModel, fit_model, predict


@dataclass(frozen=True, eq=False)
class FieldSurrogate:
    regressor: TrainedModel
    basis: PodBasis

    def coefficients(self, X) -> np.ndarray:
        return predict(self.regressor, X)

    def field(self, X) -> np.ndarray:
        """Predicted fields, one column per row of X (n_dof x n)."""
        return reconstruct(self.basis, self.coefficients(X).T)


def coefficient_dataset(X, fields, basis: PodBasis, feature_names) -> Dataset:
    """Targets a_1..a_k = project(basis, u) for every training field (columns of ``fields``)."""
    coeffs = project(basis, np.asarray(fields, dtype=float)).T
    names = tuple(f"a{i + 1}" for i in range(basis.k))
    return Dataset(np.asarray(X, dtype=float), coeffs, tuple(feature_names), names)


def train_coefficient_regressor(dataset: Dataset, basis: PodBasis, kind: str = "mlp",
                                seed: int = 0, overrides: dict | None = None) -> FieldSurrogate:
    if dataset.n_targets != basis.k:
        raise InvalidInputError(
            f"coefficient dataset has {dataset.n_targets} targets, basis has k={basis.k}")
    return FieldSurrogate(fit_model(dataset, kind, seed=seed, overrides=overrides), basis)
