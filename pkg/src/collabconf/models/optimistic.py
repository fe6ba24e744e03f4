#!/usr/bin/env python
# coding: utf-8
"""Optimistic models: runtime as inputs behavior times scale-out speedup.

The optimistic approach assumes the scale-out and the job's inputs influence
the runtime independently. A model is the product of two submodels:

- the **speedup model** (SSM) maps a scale-out to a runtime factor that is
  exactly 1 at scale-out 1
- the **inputs behavior model** (IBM) maps the context features to the
  runtime at scale-out 1

Training:
  1. group records that agree on every feature except the scale-out
  2. give every group with two or more scale-outs its own runtime scale,
     fit jointly with one shared speedup curve, and pool the rescaled pairs
     into the SSM fit
  3. project every record to scale-out 1 with `runtime / factor(scale_out)`
  4. fit the IBM on the context features against the projected runtimes

Groups with a single scale-out do not train the SSM but are still
projected. The cubic SSM is a polynomial in `1 / scale_out`, so Amdahl-style
curves `a + b / s` are represented exactly.
"""

# native
from dataclasses import dataclass
from typing import Any, Callable, Dict, Hashable, List, Optional, Sequence, Tuple
import warnings

# lib
import numpy as np

# pkg
from . import FittedModel, register
from .boosting import GbmParams, boost
from .linear import solve_linear
from ..dataset import FeatureMatrix, TrainingSet, encode
from ..errors import DegenerateSpeedupCurve, EmptyTrainingSet, InsufficientScaleOutVariation

IBM_LINEAR = "linear"
IBM_GBM = "gbm"
SSM_POLY3 = "poly3"
SSM_GBM = "gbm"

FACTOR_FLOOR = 1e-6
"""Smallest speedup factor; keeps projected runtimes finite."""

ALIGN_ROUNDS = 200
ALIGN_TOLERANCE = 1e-12

Curve = Callable[[np.ndarray, np.ndarray], np.ndarray]


def level_means(scale_outs: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Return, for every row, the mean of `values` at that row's scale-out.

    >>> level_means(np.array([2.0, 4.0, 2.0]), np.array([1.0, 5.0, 3.0])).tolist()
    [2.0, 5.0, 2.0]
    """
    _, at, counts = np.unique(scale_outs, return_inverse=True, return_counts=True)
    return (np.bincount(at, weights=values) / counts)[at]


def inverse_poly(scale_outs, values) -> np.ndarray:
    """Return least-squares coefficients of a polynomial in `1 / scale_out`.

    The degree is 3, or one less than the number of distinct scale-outs.
    """
    u = 1.0 / np.asarray(scale_outs, dtype=float)
    degree = min(3, len(np.unique(u)) - 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # rank warnings on sparse scale-outs
        return np.polyfit(u, values, degree)


def inverse_poly_values(scale_outs: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Return the fitted inverse polynomial at every row."""
    return np.polyval(inverse_poly(scale_outs, values), 1.0 / scale_outs)


def scale_out_groups(
    scale_outs: np.ndarray, groups: Sequence[Hashable]
) -> Tuple[np.ndarray, np.ndarray]:
    """Return the rows of groups with two or more scale-outs and their group numbers."""
    members: Dict[Hashable, List[int]] = {}
    for idx, key in enumerate(groups):
        members.setdefault(key, []).append(idx)

    varied = [rows for rows in members.values() if len(np.unique(scale_outs[rows])) >= 2]
    if not varied:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    member = np.repeat(np.arange(len(varied)), [len(rows) for rows in varied])
    return np.concatenate(varied).astype(int), member


def group_scales(
    scale_outs: np.ndarray,
    runtimes: np.ndarray,
    member: np.ndarray,
    curve: Curve = level_means,
    rounds: int = ALIGN_ROUNDS,
) -> np.ndarray:
    """Return one runtime scale per group so that all groups share one curve.

    Alternates between fitting `curve` to the rescaled runtimes and solving
    each group's scale by least squares against that curve. Scales start at
    the group's mean runtime at its smallest scale-out; the first group's
    scale stays fixed.
    """
    n_groups = int(member.max()) + 1
    smallest = np.full(n_groups, np.inf)
    np.minimum.at(smallest, member, scale_outs)
    first = (scale_outs == smallest[member]).astype(float)
    scales = np.bincount(member, weights=runtimes * first) / np.bincount(member, weights=first)

    for _ in range(rounds):
        fitted = curve(scale_outs, runtimes / scales[member])
        num = np.bincount(member, weights=runtimes * fitted, minlength=n_groups)
        den = np.bincount(member, weights=fitted ** 2, minlength=n_groups)
        with np.errstate(divide="ignore", invalid="ignore"):
            update = num / den
        update = np.where(np.isfinite(update) & (update > 0), update, scales)
        update = update * (scales[0] / update[0])

        change = float(np.max(np.abs(update / scales - 1.0)))
        scales = update
        if change <= ALIGN_TOLERANCE:
            break
    return scales


def speedup_pairs(
    scale_outs: Sequence[float],
    runtimes: Sequence[float],
    groups: Optional[Sequence[Hashable]] = None,
    curve: Curve = level_means,
) -> Tuple[np.ndarray, np.ndarray]:
    """Return pooled `(scale_out, rescaled runtime)` pairs.

    Every group is divided by its own runtime scale (see `group_scales`),
    so groups first observed at different scale-outs agree on one curve.
    Groups with a single distinct scale-out are skipped.

    >>> s, r = speedup_pairs([1, 2, 4], [8.0, 4.0, 2.0])
    >>> r.tolist()
    [1.0, 0.5, 0.25]
    >>> s, r = speedup_pairs([2, 4, 4, 8], [6.0, 4.0, 8.0, 6.0], ["a", "a", "b", "b"])
    >>> [round(v, 6) for v in r.tolist()]
    [1.0, 0.666667, 0.666667, 0.5]
    """
    scale_outs = np.asarray(scale_outs, dtype=float)
    runtimes = np.asarray(runtimes, dtype=float)
    if groups is None:
        groups = [()] * len(scale_outs)

    rows, member = scale_out_groups(scale_outs, groups)
    if not len(rows):
        return np.zeros(0), np.zeros(0)

    s, r = scale_outs[rows], runtimes[rows]
    scales = group_scales(s, r, member, curve)
    return s, r / scales[member]


@dataclass(frozen=True)
class PolySpeedup:
    """Polynomial in `1 / scale_out` divided by its value at scale-out 1."""

    coefs: np.ndarray
    reference: float

    def factor(self, scale_outs) -> np.ndarray:
        """Return the runtime factor at each scale-out."""
        u = 1.0 / np.asarray(scale_outs, dtype=float)
        return np.maximum(np.polyval(self.coefs, u) / self.reference, FACTOR_FLOOR)


@dataclass(frozen=True)
class BoostedSpeedup:
    """Boosted speedup curve divided by its value at scale-out 1."""

    ensemble: Any
    reference: float

    def factor(self, scale_outs) -> np.ndarray:
        """Return the runtime factor at each scale-out."""
        s = np.asarray(scale_outs, dtype=float).reshape(-1, 1)
        return np.maximum(self.ensemble.predict_values(s) / self.reference, FACTOR_FLOOR)


@dataclass(frozen=True)
class FlatSpeedup:
    """Speedup curve of a job with no observed scale-out variation."""

    def factor(self, scale_outs) -> np.ndarray:
        """Return 1 for every scale-out."""
        return np.ones(np.shape(np.asarray(scale_outs, dtype=float)))


def fit_poly3_ssm(scale_outs, runtimes, groups=None) -> PolySpeedup:
    """Return a cubic speedup model (lower degree with fewer scale-outs).

    >>> ssm = fit_poly3_ssm([1, 2, 4, 8], [800.0, 400.0, 200.0, 100.0])
    >>> round(float(ssm.factor([2])[0]), 6)
    0.5
    """
    s, r = speedup_pairs(scale_outs, runtimes, groups, inverse_poly_values)
    if not len(s):
        raise InsufficientScaleOutVariation(
            "the speedup model needs two records that differ only in scale-out"
        )

    coefs = inverse_poly(s, r)
    reference = float(np.polyval(coefs, 1.0))
    if not np.isfinite(reference) or reference <= 0:
        raise DegenerateSpeedupCurve(f"speedup curve is {reference} at scale-out 1")
    return PolySpeedup(coefs, reference)


def fit_gbm_ssm(scale_outs, runtimes, groups=None, params: GbmParams = GbmParams()):
    """Return a boosted speedup model (flat when no group varies in scale-out)."""
    s, r = speedup_pairs(scale_outs, runtimes, groups)
    if not len(s):
        return FlatSpeedup()

    ensemble = boost(s.reshape(-1, 1), r, params)
    reference = float(ensemble.predict_values(np.array([[1.0]]))[0])
    if not np.isfinite(reference) or reference <= 0:
        raise DegenerateSpeedupCurve(f"speedup curve is {reference} at scale-out 1")
    return BoostedSpeedup(ensemble, reference)


@dataclass(frozen=True)
class OptimisticDecomposition:
    """Inputs behavior model times speedup model."""

    ibm: Any
    ssm: Any
    ibm_kind: str = IBM_LINEAR
    ssm_kind: str = SSM_POLY3

    def ssm_factor(self, scale_outs) -> np.ndarray:
        """Return the speedup factor (1 at scale-out 1)."""
        return self.ssm.factor(scale_outs)

    def predict(self, X: FeatureMatrix) -> np.ndarray:
        """Return `ibm(context) * ssm_factor(scale_out)` for every row."""
        return self.ibm.predict_values(X.context) * self.ssm_factor(X.scale_out)


def decompose(
    X: FeatureMatrix, y, ibm_kind: str = IBM_LINEAR, ssm_kind: str = SSM_POLY3
) -> OptimisticDecomposition:
    """Return an optimistic model fit to an encoded matrix."""
    y = np.asarray(y, dtype=float)
    if len(y) == 0:
        raise EmptyTrainingSet("optimistic models need at least one record")

    groups = [tuple(row) for row in X.context]
    if ssm_kind == SSM_POLY3:
        ssm = fit_poly3_ssm(X.scale_out, y, groups)
    elif ssm_kind == SSM_GBM:
        ssm = fit_gbm_ssm(X.scale_out, y, groups)
    else:
        raise ValueError(f"unknown speedup model: {ssm_kind!r}")

    projected = y / ssm.factor(X.scale_out)
    if ibm_kind == IBM_LINEAR:
        ibm = solve_linear(X.context, projected)
    elif ibm_kind == IBM_GBM:
        ibm = boost(X.context, projected)
    else:
        raise ValueError(f"unknown inputs behavior model: {ibm_kind!r}")
    return OptimisticDecomposition(ibm, ssm, ibm_kind, ssm_kind)


def fit_optimistic(
    ts: TrainingSet, ibm_kind: str = IBM_LINEAR, ssm_kind: str = SSM_POLY3
) -> OptimisticDecomposition:
    """Return an optimistic model trained on `ts` (BOM by default)."""
    if not len(ts):
        raise EmptyTrainingSet("optimistic models need at least one record")
    _, X, y = encode(ts)
    return decompose(X, y, ibm_kind, ssm_kind)


@register("BOM")
def bom(ts: TrainingSet) -> FittedModel:
    """Basic optimistic model: linear inputs model, cubic speedup model."""
    encoder, X, y = encode(ts)
    model = decompose(X, y, IBM_LINEAR, SSM_POLY3)
    return FittedModel("BOM", model, encoder.fingerprint, encoder)


@register("OGB")
def ogb(ts: TrainingSet) -> FittedModel:
    """Optimistic gradient boosting: boosted inputs and speedup models."""
    encoder, X, y = encode(ts)
    model = decompose(X, y, IBM_GBM, SSM_GBM)
    return FittedModel("OGB", model, encoder.fingerprint, encoder)
