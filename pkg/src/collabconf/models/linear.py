#!/usr/bin/env python
# coding: utf-8
"""Ordinary least squares with intercept."""

# native
from dataclasses import dataclass

# lib
import numpy as np

# pkg
from . import FittedModel, as_matrix
from ..errors import EmptyTrainingSet


@dataclass(frozen=True)
class LinearRegressor:
    """Linear function `values @ coef + intercept`."""

    coef: np.ndarray
    intercept: float

    def predict_values(self, values: np.ndarray) -> np.ndarray:
        """Return predictions for raw feature values."""
        return np.asarray(values, dtype=float) @ self.coef + self.intercept

    def predict(self, X) -> np.ndarray:
        """Return predictions for a feature matrix."""
        return self.predict_values(X.values)


def solve_linear(values: np.ndarray, y: np.ndarray) -> LinearRegressor:
    """Return the least-squares fit of `y` on `values` with an intercept.

    The slope is the minimum-norm solution over centered data, so singular
    systems (including a single row) fall back to the mean of `y`.

    >>> reg = solve_linear(np.array([[5.0]]), np.array([100.0]))
    >>> float(reg.predict_values(np.array([[42.0]]))[0])
    100.0
    """
    values = np.asarray(values, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(y) == 0:
        raise EmptyTrainingSet("linear regression needs at least one record")

    mean_y = float(np.mean(y))
    if values.shape[1] == 0:
        return LinearRegressor(np.zeros(0), mean_y)

    mean_x = values.mean(axis=0)
    coef, *_ = np.linalg.lstsq(values - mean_x, y - mean_y, rcond=None)
    return LinearRegressor(coef, mean_y - float(mean_x @ coef))


def fit_linear(X, y) -> FittedModel:
    """Return an ordinary least-squares model over every column of `X`.

    >>> model = fit_linear([[1.0], [2.0], [3.0]], [2.0, 4.0, 6.0])
    >>> round(float(model.predict([[4.0]])[0]), 9)
    8.0
    """
    X = as_matrix(X)
    if len(X) == 0:
        raise EmptyTrainingSet("linear regression needs at least one record")
    return FittedModel("LINEAR", solve_linear(X.values, y), X.fingerprint)
