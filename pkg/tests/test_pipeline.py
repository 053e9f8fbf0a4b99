import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from heatsink_twin.errors import InvalidInputError, ShapeError
from heatsink_twin.pipeline import (REFERENCE_SPEEDUP, MetricsReport, SplitSpec, evaluate_all, mae,
                                    render_mae_table, render_prediction_table, repeated_kfold,
                                    speedup_check, split_indices, split_train_test)
from heatsink_twin.regressors import Dataset, fit_model
from heatsink_twin.store import report_to_doc
from reference_values import (COMPARISON_LABELS, PUBLISHED_AGGREGATE_MAE, PUBLISHED_ORIGINAL,
                              PUBLISHED_PER_TARGET_MAE, PUBLISHED_PREDICTED)

FAST = {"mlp": {"epochs": 30}}


def test_split_sizes_and_disjointness():
    train, test = split_indices(1000, 0.8, seed=42)
    assert (len(train), len(test)) == (800, 200)
    assert sorted(np.concatenate([train, test])) == list(range(1000))
    again = split_indices(1000, 0.8, seed=42)
    assert np.array_equal(train, again[0])


@given(st.integers(5, 500), st.floats(0.05, 0.95))
def test_split_rounds_train_size_up(n, fraction):
    try:
        train, test = split_indices(n, fraction, seed=1)
    except InvalidInputError:
        assert np.ceil(fraction * n) >= n
        return
    assert len(train) == int(np.ceil(fraction * n)) and len(test) == n - len(train)


def test_split_rejects_tiny_sets():
    with pytest.raises(InvalidInputError):
        split_indices(4)
    with pytest.raises(InvalidInputError):
        split_indices(100, 1.0)


def test_repeated_kfold_structure():
    pairs = repeated_kfold(800, 10, 3, seed=42)
    assert len(pairs) == 30
    for r in range(3):
        vals = [pairs[10 * r + k][1] for k in range(10)]
        assert all(len(v) == 80 for v in vals)
        assert sorted(np.concatenate(vals)) == list(range(800))
        for train, val in pairs[10 * r:10 * r + 10]:
            assert not set(train) & set(val)
            assert len(train) + len(val) == 800
    first = [frozenset(pairs[k][1]) for k in range(10)]
    second = [frozenset(pairs[10 + k][1]) for k in range(10)]
    assert set(first) != set(second)


@given(st.integers(2, 12), st.integers(12, 90))
def test_fold_sizes_differ_by_at_most_one(folds, n):
    sizes = [len(v) for _, v in repeated_kfold(n, folds, 1, seed=0)]
    assert max(sizes) - min(sizes) <= 1 and sum(sizes) == n


def test_mae_published_samples_fixture():
    agg, per = mae(PUBLISHED_ORIGINAL, PUBLISHED_PREDICTED)
    np.testing.assert_allclose(per, PUBLISHED_PER_TARGET_MAE, atol=0.005)
    assert abs(agg - PUBLISHED_AGGREGATE_MAE) <= 0.01
    assert agg == pytest.approx(np.mean(per))


@given(st.integers(0, 10_000))
def test_mae_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    A, B = rng.random((20, 3)), rng.random((20, 3))
    perm = rng.permutation(20)
    assert mae(A, B)[0] == pytest.approx(mae(A[perm], B[perm])[0], rel=1e-14)


def test_mae_shape_mismatch():
    with pytest.raises(ShapeError):
        mae(np.zeros((3, 2)), np.zeros((3, 3)))


def test_normalization_uses_training_partition_only(small_dataset):
    train, _ = split_train_test(small_dataset, 0.8, seed=3)
    model = fit_model(train, "knn")
    np.testing.assert_array_equal(model.normalization.minimum, train.X.min(axis=0))
    np.testing.assert_array_equal(model.normalization.maximum, train.X.max(axis=0))
    # wildly perturb the test rows; the trained normalization must not move
    _, test_idx = split_indices(len(small_dataset), 0.8, seed=3)
    X = small_dataset.X.copy()
    X[test_idx] *= 1000.0
    perturbed = Dataset(X, small_dataset.Y, small_dataset.feature_names,
                        small_dataset.target_names)
    train2, _ = split_train_test(perturbed, 0.8, seed=3)
    model2 = fit_model(train2, "knn")
    np.testing.assert_array_equal(model.normalization.minimum, model2.normalization.minimum)
    np.testing.assert_array_equal(model.normalization.maximum, model2.normalization.maximum)


def test_evaluate_all_report(small_dataset):
    split = SplitSpec(folds=3, repeats=2, seed=5)
    report = evaluate_all(small_dataset, split=split, overrides=FAST)
    assert [r.label for r in report.models] == list(COMPARISON_LABELS)
    assert (report.n_train, report.n_test) == (48, 12)
    for r in report.models:
        assert r.error is None
        assert len(r.cv_scores) == 6
        assert len(r.predicted) == len(r.original) == 3
        assert r.test_mae == pytest.approx(np.mean(r.test_mae_per_target))
    table = render_mae_table(report)
    assert all(label in table for label in COMPARISON_LABELS)
    assert "Constant-mean baseline" in table
    preds = render_prediction_table(report)
    assert "Predicted" in preds and "Original" in preds and "Sample 3" in preds


def test_evaluate_all_is_deterministic(small_dataset):
    split = SplitSpec(folds=3, repeats=1, seed=8)
    a = evaluate_all(small_dataset, split=split, overrides=FAST)
    b = evaluate_all(small_dataset, split=split, overrides=FAST)
    assert json.dumps(report_to_doc(a)) == json.dumps(report_to_doc(b))


def test_failing_model_is_recorded(small_dataset):
    report = evaluate_all(small_dataset, kinds=("knn", "tree"),
                          split=SplitSpec(folds=3, repeats=1),
                          overrides={"knn": {"k": 10_000}})
    assert "InvalidInputError" in report.result("knn").error
    assert report.result("tree").error is None
    assert "failed" in render_mae_table(report)


def test_report_dict_round_trip(small_dataset):
    report = evaluate_all(small_dataset, kinds=("knn",), split=SplitSpec(folds=3, repeats=1))
    again = MetricsReport.from_dict(json.loads(json.dumps(report.to_dict())))
    assert again.to_dict() == report.to_dict()


def test_split_spec_validation():
    with pytest.raises(InvalidInputError):
        SplitSpec(train_fraction=1.2)
    with pytest.raises(InvalidInputError):
        SplitSpec(folds=1)


def test_speedup_check():
    out = speedup_check(lambda q: q, lambda q: sum(range(20_000)), range(5))
    assert out["ratio"] > 1 and out["reference_ratio"] == REFERENCE_SPEEDUP == 100.0
    with pytest.raises(InvalidInputError):
        speedup_check(lambda q: q, lambda q: q, [])
