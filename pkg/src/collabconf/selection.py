#!/usr/bin/env python
# coding: utf-8
"""Cross-validated model selection.

Every candidate model is evaluated by leave-one-out cross-validation on the
current training data; the candidate with the lowest mean absolute
percentage error (MAPE) becomes the runtime predictor. Its signed errors
`actual - predicted` feed the configurator's deadline margin, so a positive
error means the model underestimated the runtime.

Large datasets cap the number of splits (a seeded subsample of held-out
records) or the time spent. A split whose model cannot be trained (e.g. the
cubic speedup model without scale-out variation) predicts the mean training
runtime instead of aborting the evaluation.
"""

# native
from dataclasses import dataclass, field
from functools import partial
from typing import Iterable, List, Optional, Sequence, Tuple
import logging
import time

# lib
import numpy as np

# pkg
from .dataset import RuntimeRecord, TrainingSet, format_number
from .errors import ModelFitError, TooFewRecords, TooFewSplits
from .models import FittedModel, candidate_order, fit_model, predict_records
from .workers import parallel_map

log = logging.getLogger(__name__)

REPORT_COLUMNS = ("model_id", "n_splits", "mu", "sigma", "mape", "seed")


@dataclass(frozen=True)
class SplitCap:
    """Limits on the number of leave-one-out splits."""

    max_splits: Optional[int] = None
    time_budget_ms: Optional[float] = None
    seed: int = 0


@dataclass(frozen=True)
class CvReport:
    """Cross-validation result of one model."""

    model_id: str
    errors: Tuple[float, ...]
    mape: float
    mu: float
    sigma: float
    seed: int = 0
    fallbacks: int = 0
    held_out: Tuple[int, ...] = field(default=(), compare=False)

    @property
    def n_splits(self) -> int:
        """Return the number of evaluated splits."""
        return len(self.errors)

    @classmethod
    def from_errors(cls, model_id: str, errors, actuals, **kwargs) -> "CvReport":
        """Return a report for signed errors against the actual runtimes.

        >>> report = CvReport.from_errors("GBM", [-10.0, 10.0], [100.0, 100.0])
        >>> report.mu, report.sigma, report.mape
        (0.0, 10.0, 0.1)
        """
        errors = np.asarray(errors, dtype=float)
        actuals = np.asarray(actuals, dtype=float)
        return cls(
            model_id,
            tuple(float(e) for e in errors),
            float(np.mean(np.abs(errors) / actuals)),
            float(np.mean(errors)),
            float(np.std(errors)),
            **kwargs,
        )


def split_indices(n: int, cap: SplitCap = SplitCap()) -> List[int]:
    """Return the held-out record of every split, in ascending order.

    >>> split_indices(4)
    [0, 1, 2, 3]
    >>> len(split_indices(100, SplitCap(max_splits=10)))
    10
    """
    if cap.max_splits is None or n <= cap.max_splits:
        return list(range(n))
    rng = np.random.default_rng(cap.seed)
    return sorted(int(i) for i in rng.choice(n, size=max(cap.max_splits, 1), replace=False))


def mape(actual, predicted) -> float:
    """Return the mean absolute percentage error as a fraction.

    >>> mape([100.0, 200.0], [110.0, 180.0])
    0.1
    """
    actual = np.asarray(actual, dtype=float)
    return float(np.mean(np.abs(actual - np.asarray(predicted, dtype=float)) / actual))


def predict_heldout(
    model_id: str, train: TrainingSet, test: Iterable[RuntimeRecord]
) -> Tuple[np.ndarray, bool]:
    """Return `(predictions, fell_back)` for records outside the training set.

    A model that cannot be trained or that fails to predict returns the mean
    training runtime. Custom models may raise anything; those failures are
    logged as warnings.
    """
    test = list(test)
    try:
        model = fit_model(model_id, train)
        return predict_records(model, test), False
    except (ModelFitError, np.linalg.LinAlgError) as e:
        log.debug("%s fell back to the mean: %s", model_id, e)
    except Exception as e:  # pylint: disable=broad-except
        log.warning("%s failed (%s: %s); using the mean", model_id, type(e).__name__, e)
    return np.full(len(test), float(np.mean(train.runtimes))), True


def holdout_prediction(model_id: str, ts: TrainingSet, held_out: int) -> Tuple[float, bool]:
    """Return `(prediction, fell_back)` for one leave-one-out split."""
    train = ts.subset(i for i in range(len(ts)) if i != held_out)
    predictions, fell_back = predict_heldout(model_id, train, [ts.records[held_out]])
    return float(predictions[0]), fell_back


def cross_validate(
    model_id: str, ts: TrainingSet, cap: SplitCap = SplitCap(), cpus: int = 1
) -> CvReport:
    """Return the leave-one-out cross-validation report of one model.

    With a time budget, splits run in order in this process until the
    budget is spent (at least one split always runs).
    """
    if len(ts) < 2:
        raise TooFewRecords(f"cross-validation needs 2 records, got {len(ts)}")

    indices = split_indices(len(ts), cap)
    if cap.time_budget_ms is None:
        outcomes = parallel_map(
            partial(holdout_prediction, model_id, ts), indices, cpus, desc=f"CV {model_id}"
        )
    else:
        outcomes, start = [], time.perf_counter()
        for idx in indices:
            outcomes.append(holdout_prediction(model_id, ts, idx))
            if (time.perf_counter() - start) * 1000 > cap.time_budget_ms:
                break
        if len(outcomes) < len(indices):
            log.info("%s: time budget allowed %d of %d splits", model_id, len(outcomes), len(indices))
        indices = indices[: len(outcomes)]

    actuals = ts.runtimes[indices]
    predictions = np.array([p for p, _ in outcomes])
    fallbacks = sum(1 for _, fell in outcomes if fell)
    if fallbacks:
        log.warning("%s: %d of %d splits fell back to the mean", model_id, fallbacks, len(indices))
    return CvReport.from_errors(
        model_id,
        actuals - predictions,
        actuals,
        seed=cap.seed,
        fallbacks=fallbacks,
        held_out=tuple(indices),
    )


def compare_models(
    candidates: Iterable[str], ts: TrainingSet, cap: SplitCap = SplitCap(), cpus: int = 1
) -> List[CvReport]:
    """Return cross-validation reports in candidate order."""
    return [cross_validate(m, ts, cap, cpus) for m in candidate_order(candidates)]


def best_report(reports: Sequence[CvReport]) -> CvReport:
    """Return the report with the lowest MAPE (earliest wins ties)."""
    return min(reports, key=lambda r: r.mape)


def select_model(
    candidates: Iterable[str], ts: TrainingSet, cap: SplitCap = SplitCap(), cpus: int = 1
) -> Tuple[str, CvReport]:
    """Return the most accurate candidate and its report."""
    candidates = list(candidates)
    if not candidates:
        raise ValueError("no candidate models")
    report = best_report(compare_models(candidates, ts, cap, cpus))
    return report.model_id, report


def error_quantile_inputs(report: CvReport) -> Tuple[float, float]:
    """Return `(mu, sigma)` of the signed errors (population convention).

    >>> error_quantile_inputs(CvReport.from_errors("GBM", [1, 2, 3, 4], [10] * 4))
    (2.5, 1.118033988749895)
    """
    if report.n_splits < 2:
        raise TooFewSplits(f"{report.model_id} has {report.n_splits} split(s); need 2")
    return report.mu, report.sigma


def report_tsv(reports: Iterable[CvReport]) -> str:
    """Return cross-validation reports as a TSV block."""
    lines = ["\t".join(REPORT_COLUMNS)]
    for r in reports:
        cells = [r.model_id, str(r.n_splits)]
        cells += [format_number(v) for v in (r.mu, r.sigma, r.mape)]
        cells.append(str(r.seed))
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class RuntimePredictor:
    """Selected model refit on all training data."""

    model: FittedModel
    report: CvReport
    reports: Tuple[CvReport, ...] = ()

    @property
    def model_id(self) -> str:
        """Return the id of the selected model."""
        return self.model.model_id

    @property
    def error_stats(self) -> Tuple[float, float]:
        """Return `(mu, sigma)` of the selected model's errors."""
        return error_quantile_inputs(self.report)

    def predict(self, records: Iterable[RuntimeRecord]) -> np.ndarray:
        """Return runtime predictions for `records`."""
        return predict_records(self.model, list(records))


def fit_predictor(
    ts: TrainingSet,
    candidates: Optional[Iterable[str]] = None,
    cap: SplitCap = SplitCap(),
    cpus: int = 1,
) -> RuntimePredictor:
    """Select a model by cross-validation and train it on all of `ts`.

    When the winner cannot be trained on the full data, the next most
    accurate candidate is used.
    """
    reports = compare_models(candidate_order(candidates), ts, cap, cpus)
    ranked = sorted(enumerate(reports), key=lambda pair: (pair[1].mape, pair[0]))
    for _, report in ranked:
        try:
            model = fit_model(report.model_id, ts)
        except Exception as e:  # pylint: disable=broad-except
            log.warning("%s cannot be trained on all records: %s", report.model_id, e)
            continue
        return RuntimePredictor(model, report, tuple(reports))
    raise ModelFitError("no candidate model can be trained on this data")
