"""Evaluation protocol: hold-out split, repeated k-fold CV, MAE, reports."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, ShapeError
from .regressors import MODEL_KINDS, MODEL_LABELS, Dataset, fit_model, predict

REFERENCE_SPEEDUP = 100.0  # published solver/ROM wall-time factor, reported beside measurements


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    folds: int = 10
    repeats: int = 3
    seed: int = 42

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise InvalidInputError("train_fraction must lie in (0, 1)")
        if self.folds < 2 or self.repeats < 1:
            raise InvalidInputError("need folds >= 2 and repeats >= 1")


def split_indices(n: int, fraction: float = 0.8, seed: int = 42):
    if n < 5:
        raise InvalidInputError(f"need at least 5 samples to split, got {n}")
    if not 0.0 < fraction < 1.0:
        raise InvalidInputError("fraction must lie in (0, 1)")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = math.ceil(fraction * n)
    if n_train >= n:
        raise InvalidInputError(f"split of {n} samples leaves no test rows")
    return perm[:n_train], perm[n_train:]


def split_train_test(dataset: Dataset, fraction: float = 0.8, seed: int = 42):
    train, test = split_indices(len(dataset), fraction, seed)
    return dataset.subset(train), dataset.subset(test)


def repeated_kfold(n: int, folds: int = 10, repeats: int = 3, seed: int = 42):
    """(train_idx, val_idx) pairs; each repeat uses its own seed-derived permutation.

    Fold sizes differ by at most one (the first n % folds folds are larger).
    """
    if folds < 2 or repeats < 1:
        raise InvalidInputError("need folds >= 2 and repeats >= 1")
    if folds > n:
        raise InvalidInputError(f"{folds} folds need at least {folds} samples, got {n}")
    pairs = []
    for child in np.random.SeedSequence(seed).spawn(repeats):
        perm = np.random.default_rng(child).permutation(n)
        parts = np.array_split(perm, folds)
        for k, val in enumerate(parts):
            train = np.concatenate([p for i, p in enumerate(parts) if i != k])
            pairs.append((train, val))
    return pairs


def mae(Y_true, Y_pred):
    """(aggregate over all n*m absolute errors, per-target vector)."""
    Y_true = np.asarray(Y_true, dtype=float)
    Y_pred = np.asarray(Y_pred, dtype=float)
    if Y_true.shape != Y_pred.shape:
        raise ShapeError(f"shape mismatch {Y_true.shape} vs {Y_pred.shape}")
    if Y_true.ndim == 1:
        Y_true, Y_pred = Y_true[:, None], Y_pred[:, None]
    err = np.abs(Y_true - Y_pred)
    return float(err.mean()), err.mean(axis=0)


@dataclass
class ModelResult:
    kind: str
    label: str
    test_mae: float | None = None
    test_mae_per_target: list | None = None
    cv_mae_mean: float | None = None
    cv_mae_std: float | None = None
    cv_scores: list = field(default_factory=list)
    predicted: list = field(default_factory=list)
    original: list = field(default_factory=list)
    error: str | None = None


@dataclass
class MetricsReport:
    target_names: list
    feature_names: list
    n_train: int
    n_test: int
    split: dict
    baseline_mae: float
    baseline_mae_per_target: list
    models: list

    def result(self, kind: str) -> ModelResult:
        for r in self.models:
            if r.kind == kind:
                return r
        raise KeyError(kind)

    def to_dict(self) -> dict:
        return {
            "target_names": list(self.target_names),
            "feature_names": list(self.feature_names),
            "n_train": self.n_train,
            "n_test": self.n_test,
            "split": dict(self.split),
            "baseline_mae": self.baseline_mae,
            "baseline_mae_per_target": list(self.baseline_mae_per_target),
            "models": [vars(r).copy() for r in self.models],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MetricsReport":
        models = [ModelResult(**m) for m in doc["models"]]
        fields = {k: doc[k] for k in ("target_names", "feature_names", "n_train", "n_test",
                                      "split", "baseline_mae", "baseline_mae_per_target")}
        return cls(models=models, **fields)


def _cv_scores(train: Dataset, kind, split: SplitSpec, overrides, seed):
    scores = []
    for tr, va in repeated_kfold(len(train), split.folds, split.repeats, split.seed):
        model = fit_model(train.subset(tr), kind, seed=seed, overrides=overrides)
        scores.append(mae(train.Y[va], predict(model, train.X[va]))[0])
    return scores


def evaluate_all(dataset: Dataset, kinds=MODEL_KINDS, split: SplitSpec = SplitSpec(),
                 table_samples: int = 3, overrides: dict | None = None,
                 cross_validate: bool = True, progress=None) -> MetricsReport:
    """Train every configuration on the hold-out split and score it.

    Normalization is refit inside every training call, so it only ever sees
    the partition the model is trained on.  A failing configuration is
    recorded with its error message and the others still run.
    """
    overrides = overrides or {}
    train, test = split_train_test(dataset, split.train_fraction, split.seed)
    if not 0 <= table_samples <= len(test):
        raise InvalidInputError(f"table_samples must lie in [0, {len(test)}]")
    base_pred = np.tile(train.Y.mean(axis=0), (len(test), 1))
    base_agg, base_per = mae(test.Y, base_pred)

    results = []
    for kind in kinds:
        result = ModelResult(kind=kind, label=MODEL_LABELS.get(kind, kind))
        started = time.perf_counter()
        try:
            model = fit_model(train, kind, seed=split.seed, overrides=overrides.get(kind))
            pred = predict(model, test.X)
            agg, per = mae(test.Y, pred)
            result.test_mae, result.test_mae_per_target = agg, per.tolist()
            result.predicted = pred[:table_samples].tolist()
            result.original = test.Y[:table_samples].tolist()
            if cross_validate:
                scores = _cv_scores(train, kind, split, overrides.get(kind), split.seed)
                result.cv_scores = scores
                result.cv_mae_mean = float(np.mean(scores))
                result.cv_mae_std = float(np.std(scores, ddof=1)) if len(scores) > 1 else 0.0
        except Exception as exc:  # per-model failures are part of the report
            result.error = f"{type(exc).__name__}: {exc}"
        if progress is not None:
            progress(f"{kind}: done in {time.perf_counter() - started:.1f} s"
                     + (f" ({result.error})" if result.error else ""))
        results.append(result)

    return MetricsReport(
        target_names=list(dataset.target_names), feature_names=list(dataset.feature_names),
        n_train=len(train), n_test=len(test),
        split={"train_fraction": split.train_fraction, "folds": split.folds,
               "repeats": split.repeats, "seed": split.seed},
        baseline_mae=base_agg, baseline_mae_per_target=base_per.tolist(), models=results)


def render_mae_table(report: MetricsReport) -> str:
    rows = [("Model", "MAE (test)", "CV MAE (mean +/- sd)")]
    for r in report.models:
        if r.error:
            rows.append((r.label, "failed", r.error))
            continue
        cv = "-" if r.cv_mae_mean is None else f"{r.cv_mae_mean:.3f} +/- {r.cv_mae_std:.3f}"
        rows.append((r.label, f"{r.test_mae:.3f}", cv))
    rows.append(("Constant-mean baseline", f"{report.baseline_mae:.3f}", "-"))
    return _format(rows)


def render_prediction_table(report: MetricsReport, kind: str = "svr-chained") -> str:
    r = report.result(kind)
    header = ("", *report.target_names)
    rows = [header, ("Predicted",) + ("",) * len(report.target_names)]
    rows += [(f"Sample {i + 1}", *(f"{v:.2f}" for v in row)) for i, row in enumerate(r.predicted)]
    rows.append(("Original",) + ("",) * len(report.target_names))
    rows += [(f"Sample {i + 1}", *(f"{v:.2f}" for v in row)) for i, row in enumerate(r.original)]
    return f"Predicted vs. original values for {r.label}\n" + _format(rows)


def _format(rows) -> str:
    widths = [max(len(str(row[c])) for row in rows) for c in range(len(rows[0]))]
    lines = []
    for i, row in enumerate(rows):
        cells = [str(v).ljust(w) if c == 0 else str(v).rjust(w)
                 for c, (v, w) in enumerate(zip(row, widths))]
        lines.append("  ".join(cells).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def speedup_check(rom_predict, solve, queries, repeats: int = 1) -> dict:
    """Wall-time ratio solver / ROM over the same query list.

    ``rom_predict(q)`` and ``solve(q)`` each map one query to a field.
    """
    queries = list(queries)
    if not queries:
        raise InvalidInputError("need at least one query")

    def clock(fn):
        best = math.inf
        for _ in range(repeats):
            start = time.perf_counter()
            for q in queries:
                fn(q)
            best = min(best, time.perf_counter() - start)
        return best

    solver_time = clock(solve)
    rom_time = clock(rom_predict)
    return {
        "n_queries": len(queries),
        "solver_seconds_per_query": solver_time / len(queries),
        "rom_seconds_per_query": rom_time / len(queries),
        "ratio": solver_time / rom_time,
        "reference_ratio": REFERENCE_SPEEDUP,
    }
