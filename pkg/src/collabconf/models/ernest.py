#!/usr/bin/env python
# coding: utf-8
"""Ernest-style parametric scale-out model.

Runtime is a non-negative combination of the terms
`[1, size / scale_out, log(scale_out), scale_out]`: a fixed cost, parallel
work, tree-shaped aggregation, and per-node overhead. The model knows nothing
about context features other than the dataset size.
"""

# native
from dataclasses import dataclass
from typing import Optional, Tuple
import logging

# lib
import numpy as np

# pkg
from . import FittedModel, register
from ..dataset import FeatureMatrix, TrainingSet, encode
from ..errors import EmptyTrainingSet

log = logging.getLogger(__name__)

TERMS = ("fixed", "size/scale_out", "log(scale_out)", "scale_out")


def ernest_features(sizes, scale_outs) -> np.ndarray:
    """Return the Ernest design matrix.

    >>> ernest_features([8.0], [2.0]).tolist()
    [[1.0, 4.0, 0.6931471805599453, 2.0]]
    """
    sizes = np.asarray(sizes, dtype=float)
    scale_outs = np.asarray(scale_outs, dtype=float)
    return np.column_stack(
        [np.ones_like(sizes), sizes / scale_outs, np.log(scale_outs), scale_outs]
    )


def nnls(
    A: np.ndarray, b: np.ndarray, max_iter: Optional[int] = None, tol: Optional[float] = None
) -> Tuple[np.ndarray, float]:
    """Return `(x, residual norm)` minimizing `||Ax - b||` subject to `x >= 0`.

    Lawson-Hanson active set method: grow the passive set by the most
    positive gradient entry, solve unconstrained least squares on it, and
    step back toward feasibility whenever a passive entry turns non-positive.

    >>> x, r = nnls(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([2.0, -1.0]))
    >>> x.tolist(), r
    ([2.0, 0.0], 1.0)
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    _, n = A.shape
    max_iter = max_iter or 30 * max(n, 1)
    if tol is None:
        tol = 10 * max(A.shape) * np.finfo(float).eps * max(np.abs(A).sum(axis=0).max(initial=0), 1.0)

    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    w = A.T @ (b - A @ x)
    iterations = 0
    while (~passive).any() and (w[~passive] > tol).any():
        j = int(np.argmax(np.where(passive, -np.inf, w)))
        passive[j] = True

        while True:
            iterations += 1
            if iterations > max_iter:
                log.warning("nnls stopped after %d iterations", max_iter)
                return x, float(np.linalg.norm(A @ x - b))

            z = np.zeros(n)
            z[passive] = np.linalg.lstsq(A[:, passive], b, rcond=None)[0]
            if (z[passive] > 0).all():
                x = z
                break

            blocked = passive & (z <= 0)
            step = x[blocked] - z[blocked]
            ratios = np.where(step > 0, x[blocked] / np.where(step > 0, step, 1.0), 0.0)
            alpha = float(ratios.min())
            x = x + alpha * (z - x)
            passive &= x > tol
            x[~passive] = 0.0
            if not passive.any():
                break

        w = A.T @ (b - A @ x)
    return x, float(np.linalg.norm(A @ x - b))


@dataclass(frozen=True)
class ErnestRegressor:
    """Non-negative coefficients for the Ernest terms."""

    theta: np.ndarray

    def runtime(self, sizes, scale_outs) -> np.ndarray:
        """Return predicted runtimes for raw sizes and scale-outs."""
        return ernest_features(sizes, scale_outs) @ self.theta

    def predict(self, X: FeatureMatrix) -> np.ndarray:
        """Return predictions for a feature matrix."""
        return self.runtime(X.size, X.scale_out)


def fit_ernest(sizes, scale_outs, runtimes) -> FittedModel:
    """Return an Ernest model fit by non-negative least squares.

    Columns are scaled to unit norm before solving; scaling does not change
    the feasible set, so the result is the same constrained optimum.

    >>> model = fit_ernest([10.0, 10.0, 20.0], [1, 2, 2], [30.0, 20.0, 30.0])
    >>> [round(float(t), 6) for t in model.regressor.theta]
    [10.0, 2.0, 0.0, 0.0]
    """
    A = ernest_features(sizes, scale_outs)
    b = np.asarray(runtimes, dtype=float)
    if len(b) == 0:
        raise EmptyTrainingSet("Ernest needs at least one record")

    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0] = 1.0
    x, _ = nnls(A / norms, b)
    return FittedModel("ERNEST", ErnestRegressor(x / norms))


@register("ERNEST")
def ernest(ts: TrainingSet) -> FittedModel:
    """Ernest over the dataset size and scale-out."""
    encoder, X, y = encode(ts)
    model = fit_ernest(X.size, X.scale_out, y)
    return FittedModel("ERNEST", model.regressor, encoder.fingerprint, encoder)
