#!/usr/bin/env python
# coding: utf-8
"""Least-squares gradient boosting over greedy regression trees.

The ensemble starts from the mean runtime and adds one depth-limited tree
per round, each fit to the residuals of the ensemble so far and scaled by the
learning rate. Trees split on the variance reduction of the residuals; ties
go to the lowest feature index, then the lowest threshold. Nothing is
sampled, so identical inputs give identical trees.
"""

# native
from dataclasses import dataclass
from typing import Optional, Tuple

# lib
import numpy as np

# pkg
from . import FittedModel, as_matrix, register
from ..dataset import TrainingSet, encode
from ..errors import EmptyTrainingSet

GAIN_TOLERANCE = 1e-12


@dataclass(frozen=True)
class GbmParams:
    """Boosting hyperparameters."""

    n_rounds: int = 100
    learning_rate: float = 0.1
    max_depth: int = 3
    min_leaf: int = 1


@dataclass(frozen=True)
class Node:
    """Regression tree node; leaves have no children."""

    value: float = 0.0
    feature: int = -1
    threshold: float = 0.0
    left: Optional["Node"] = None
    right: Optional["Node"] = None

    @property
    def isleaf(self) -> bool:
        """Return True if this node has no children."""
        return self.left is None


def best_split(
    values: np.ndarray, target: np.ndarray, min_leaf: int
) -> Optional[Tuple[float, int, float]]:
    """Return `(gain, feature, threshold)` of the best split, if any.

    Gain is the reduction of the summed squared error around the mean.
    Rows with `x <= threshold` go left.

    >>> best_split(np.array([[0.0], [1.0]]), np.array([0.0, 10.0]), 1)
    (50.0, 0, 0.5)
    """
    n = len(target)
    if n < 2 * min_leaf:
        return None

    centered = target - target.mean()
    parent = float(np.sum(centered ** 2))
    tol = GAIN_TOLERANCE * max(parent, 1.0)
    best = None
    left_n = np.arange(1, n, dtype=float)
    right_n = n - left_n
    for feature in range(values.shape[1]):
        order = np.argsort(values[:, feature], kind="stable")
        xs = values[order, feature]
        rs = centered[order]

        csum = np.cumsum(rs)[:-1]
        csq = np.cumsum(rs ** 2)[:-1]
        total, total_sq = float(rs.sum()), float(np.sum(rs ** 2))
        left_sse = csq - csum ** 2 / left_n
        right_sse = (total_sq - csq) - (total - csum) ** 2 / right_n
        gain = parent - left_sse - right_sse

        valid = (xs[:-1] < xs[1:]) & (left_n >= min_leaf) & (right_n >= min_leaf)
        if not valid.any():
            continue

        gain = np.where(valid, gain, -np.inf)
        top = float(gain.max())
        pos = int(np.flatnonzero(gain >= top - tol)[0])
        if top > tol and (best is None or top > best[0] + tol):
            threshold = float((xs[pos] + xs[pos + 1]) / 2.0)
            if not threshold < xs[pos + 1]:
                threshold = float(xs[pos])  # adjacent floats round up to the right value
            best = (float(gain[pos]), feature, threshold)
    return best


def grow(values: np.ndarray, target: np.ndarray, depth: int, params: GbmParams) -> Node:
    """Return a regression tree fit to `target`."""
    value = float(np.mean(target))
    if depth >= params.max_depth:
        return Node(value)

    split = best_split(values, target, params.min_leaf)
    if split is None:
        return Node(value)

    _, feature, threshold = split
    mask = values[:, feature] <= threshold
    return Node(
        value,
        feature,
        threshold,
        grow(values[mask], target[mask], depth + 1, params),
        grow(values[~mask], target[~mask], depth + 1, params),
    )


def tree_predict(node: Node, values: np.ndarray) -> np.ndarray:
    """Return the tree's leaf values for every row."""
    out = np.empty(len(values))
    stack = [(node, np.arange(len(values)))]
    while stack:
        node, rows = stack.pop()
        if node.isleaf:
            out[rows] = node.value
            continue
        mask = values[rows, node.feature] <= node.threshold
        stack.append((node.left, rows[mask]))
        stack.append((node.right, rows[~mask]))
    return out


@dataclass(frozen=True)
class GradientBoosting:
    """Boosted ensemble `init + learning_rate * sum(trees)`."""

    init: float
    learning_rate: float
    trees: Tuple[Node, ...] = ()

    def predict_values(self, values: np.ndarray) -> np.ndarray:
        """Return predictions for raw feature values."""
        values = np.asarray(values, dtype=float)
        out = np.full(len(values), self.init)
        for tree in self.trees:
            out = out + self.learning_rate * tree_predict(tree, values)
        return out

    def predict(self, X) -> np.ndarray:
        """Return predictions for a feature matrix."""
        return self.predict_values(X.values)


def boost(values: np.ndarray, y: np.ndarray, params: GbmParams = GbmParams()) -> GradientBoosting:
    """Return a boosted ensemble fit to `y`."""
    values = np.asarray(values, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(y) == 0:
        raise EmptyTrainingSet("gradient boosting needs at least one record")

    init = float(np.mean(y))
    current = np.full(len(y), init)
    trees = []
    for _ in range(params.n_rounds):
        tree = grow(values, y - current, 0, params)
        if tree.isleaf and tree.value == 0.0:
            break  # residuals are exactly zero
        trees.append(tree)
        current = current + params.learning_rate * tree_predict(tree, values)
    return GradientBoosting(init, params.learning_rate, tuple(trees))


def fit_gbm(X, y, hyper: GbmParams = GbmParams()) -> FittedModel:
    """Return a gradient boosting model over every column of `X`.

    >>> model = fit_gbm([[0.0], [1.0]], [1.0, 10.0], GbmParams(1, 1.0, 1, 1))
    >>> model.predict([[0.0], [1.0]]).tolist()
    [1.0, 10.0]
    """
    X = as_matrix(X)
    return FittedModel("GBM", boost(X.values, y, hyper), X.fingerprint)


@register("GBM")
def gbm(ts: TrainingSet) -> FittedModel:
    """Gradient boosting over the scale-out and every context feature."""
    encoder, X, y = encode(ts)
    return FittedModel("GBM", boost(X.values, y), encoder.fingerprint, encoder)
