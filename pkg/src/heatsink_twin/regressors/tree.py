"""Multi-target CART regression tree."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError

LEAF = -1


@dataclass(frozen=True, eq=False)
class TreeModel:
    """Flat node arrays; ``feature[i] == -1`` marks a leaf.

    Samples with ``x[feature] <= threshold`` go left.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # n_nodes x m, original target units
    max_depth: int = 5
    min_leaf: int = 2

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature == LEAF))

    def depth(self) -> int:
        def walk(i):
            if self.feature[i] == LEAF:
                return 0
            return 1 + max(walk(self.left[i]), walk(self.right[i]))
        return walk(0)


def best_split(X, Z, min_leaf):
    """Lowest summed within-child SSE over features and midpoints.

    Returns (feature, threshold, sse) or None when no admissible split
    exists.  Ties keep the first candidate in (feature, position) order.
    """
    n, d = X.shape
    best = None
    for f in range(d):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        zs = Z[order]
        csum = np.cumsum(zs, axis=0)[:-1]
        csq = np.cumsum(zs ** 2, axis=0)[:-1]
        tot, tot_sq = zs.sum(axis=0), (zs ** 2).sum(axis=0)
        nl = np.arange(1, n)[:, None]
        nr = n - nl
        sse = (csq - csum ** 2 / nl).sum(axis=1) + \
              ((tot_sq - csq) - (tot - csum) ** 2 / nr).sum(axis=1)
        ok = (xs[:-1] < xs[1:]) & (nl[:, 0] >= min_leaf) & (nr[:, 0] >= min_leaf)
        if not ok.any():
            continue
        sse = np.where(ok, sse, np.inf)
        i = int(np.argmin(sse))
        if best is None or sse[i] < best[2]:
            thr = 0.5 * (xs[i] + xs[i + 1])
            if thr >= xs[i + 1]:
                thr = xs[i]
            best = (f, float(thr), float(sse[i]))
    return best


def train_tree(X, Y, max_depth: int = 5, min_leaf: int = 2) -> TreeModel:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if len(X) == 0:
        raise InvalidInputError("cannot train a tree on an empty dataset")
    # impurity on standardized targets so Kelvin-scale columns do not dominate
    scale = Y.std(axis=0)
    Z = (Y - Y.mean(axis=0)) / np.where(scale > 0, scale, 1.0)

    feature, threshold, left, right, value = [], [], [], [], []

    def grow(idx, depth):
        node = len(feature)
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(Y[idx].mean(axis=0))
        z = Z[idx]
        sse = float(np.sum((z - z.mean(axis=0)) ** 2))
        if depth >= max_depth or len(idx) < 2 * min_leaf or sse <= 1e-12 * len(idx):
            return node
        split = best_split(X[idx], z, min_leaf)
        if split is None or split[2] >= sse * (1 - 1e-12):
            return node
        f, thr, _ = split
        go_left = X[idx, f] <= thr
        feature[node], threshold[node] = f, thr
        left[node] = grow(idx[go_left], depth + 1)
        right[node] = grow(idx[~go_left], depth + 1)
        return node

    grow(np.arange(len(X)), 0)
    return TreeModel(np.array(feature), np.array(threshold), np.array(left),
                     np.array(right), np.array(value), max_depth, min_leaf)


def leaf_index(model: TreeModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    node = np.zeros(len(X), dtype=np.int64)
    for _ in range(model.max_depth + 1):
        f = model.feature[node]
        inner = f != LEAF
        rows = np.flatnonzero(inner)
        if not len(rows):
            break
        go_left = X[rows, f[rows]] <= model.threshold[node[rows]]
        node[rows] = np.where(go_left, model.left[node[rows]], model.right[node[rows]])
    return node


def predict_tree(model: TreeModel, X) -> np.ndarray:
    return model.value[leaf_index(model, X)]
