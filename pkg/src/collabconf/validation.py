#!/usr/bin/env python
# coding: utf-8
"""Accept or reject runtime data contributed to a shared repository.

A contribution is tested against a held-out quarter of the existing records.
The runtime predictor is selected and trained twice, once without and once
with the contribution, and both are scored on the same held-out records. A
contribution is rejected when it raises the held-out MAPE by more than the
threshold (relative):

    accepted  <=>  candidate_mape <= baseline_mape * (1 + threshold)
"""

# native
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple, Union
import logging

# lib
import numpy as np

# pkg
from . import THRESHOLD
from .dataset import RuntimeRecord, TrainingSet, conformance_problem, format_number
from .errors import DatasetError, SchemaMismatch, TooFewRecords
from .selection import SplitCap, fit_predictor, mape

log = logging.getLogger(__name__)

MIN_EXISTING = 4
HOLDOUT_FRACTION = 0.25
VERDICT_COLUMNS = (
    "accepted",
    "baseline_mape",
    "candidate_mape",
    "threshold",
    "affected_model",
    "seed",
)


@dataclass(frozen=True)
class ContributionVerdict:
    """Outcome of validating one contribution."""

    accepted: bool
    baseline_mape: float
    candidate_mape: float
    threshold: float
    affected_model: str
    seed: int = 0
    baseline_model: str = ""
    test_size: int = 0

    def tsv(self) -> str:
        """Return the verdict as a header plus one TSV row."""
        cells = [
            str(self.accepted).lower(),
            format_number(self.baseline_mape),
            format_number(self.candidate_mape),
            format_number(self.threshold),
            self.affected_model,
            str(self.seed),
        ]
        return "\t".join(VERDICT_COLUMNS) + "\n" + "\t".join(cells) + "\n"


def accepts(baseline_mape: float, candidate_mape: float, threshold: float) -> bool:
    """Return True if the candidate error is within the allowed growth.

    >>> accepts(0.05, 0.054, 0.10), accepts(0.05, 0.056, 0.10)
    (True, False)
    """
    return candidate_mape <= baseline_mape * (1.0 + threshold)


def holdout_size(n: int) -> int:
    """Return the number of records held out of `n`.

    >>> holdout_size(4), holdout_size(10), holdout_size(200)
    (1, 2, 50)
    """
    return max(1, int(round(HOLDOUT_FRACTION * n)))


def holdout_indices(n: int, seed: Union[int, np.random.Generator] = 0) -> Tuple[int, ...]:
    """Return a seeded sample of held-out record indices, ascending."""
    rng = np.random.default_rng(seed)
    return tuple(sorted(int(i) for i in rng.choice(n, size=holdout_size(n), replace=False)))


def validate_contribution(
    existing: TrainingSet,
    contribution: Union[TrainingSet, Iterable[RuntimeRecord]],
    candidates: Optional[Iterable[str]] = None,
    threshold: float = THRESHOLD,
    cap: SplitCap = SplitCap(),
    cpus: int = 1,
) -> ContributionVerdict:
    """Return whether `contribution` keeps predictions on `existing` accurate.

    The held-out records are drawn with `cap.seed` and never include
    contributed records.
    """
    if isinstance(contribution, TrainingSet):
        if contribution.schema != existing.schema:
            raise SchemaMismatch(
                f"contribution is for {contribution.schema.job_name}, "
                f"not {existing.schema.job_name}"
            )
        contribution = contribution.records

    contribution = list(contribution)
    if not contribution:
        raise DatasetError("the contribution has no records")
    for num, record in enumerate(contribution, 1):
        problem = conformance_problem(existing.schema, record)
        if problem:
            raise SchemaMismatch(f"contributed record {num}: {problem}")

    if len(existing) < MIN_EXISTING:
        raise TooFewRecords(
            f"validation needs {MIN_EXISTING} existing records, got {len(existing)}"
        )
    if threshold < 0:
        raise ValueError(f"threshold must be >= 0, got {threshold}")

    test_rows = holdout_indices(len(existing), cap.seed)
    held_out = set(test_rows)
    test = existing.subset(test_rows)
    train = existing.subset(i for i in range(len(existing)) if i not in held_out)
    merged = train.replace(list(train.records) + contribution)

    baseline = fit_predictor(train, candidates, cap, cpus)
    candidate = fit_predictor(merged, candidates, cap, cpus)
    baseline_mape = mape(test.runtimes, baseline.predict(test.records))
    candidate_mape = mape(test.runtimes, candidate.predict(test.records))

    verdict = ContributionVerdict(
        accepts(baseline_mape, candidate_mape, threshold),
        baseline_mape,
        candidate_mape,
        threshold,
        candidate.model_id,
        cap.seed,
        baseline.model_id,
        len(test),
    )
    if not verdict.accepted:
        log.info(
            "rejected %d record(s): held-out MAPE %.4f -> %.4f (%s)",
            len(contribution),
            baseline_mape,
            candidate_mape,
            candidate.model_id,
        )
    return verdict
