#!/usr/bin/env python
# coding: utf-8
"""Prediction-accuracy experiments over runtime data.

Two experiment designs are supported:

ORIGIN
    Compares training on local data (one user's fixed context) against
    training on global data (every context). Each repetition picks a local
    dataset uniformly, holds out a quarter of it as the test set, and trains
    every model once on the rest of that local dataset and once on every
    other record.

AVAILABILITY
    Measures accuracy as training data grows. Each repetition draws `size`
    training records from the global data; all remaining records are the
    test set.

Besides every candidate model, each repetition scores the composed runtime
predictor (model selection plus refit), reported as `C3O`. Repetitions get
their own seeds derived from the master seed, so reports do not depend on
the number of worker processes.
"""

# native
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union
import logging

# lib
import numpy as np
import pandas as pd

# pkg
from . import MAX_SPLITS, SEED
from .dataset import TrainingSet, local_groups
from .errors import ModelFitError, TooFewRecords
from .models import candidate_order
from .selection import SplitCap, fit_predictor, mape, predict_heldout
from .synth import JobProfile, synth_generate
from .validation import holdout_size
from .workers import parallel_map

log = logging.getLogger(__name__)

PREDICTOR = "C3O"
ORIGIN = "origin"
AVAILABILITY = "availability"
LOCAL = "local"
GLOBAL = "global"
DEFAULT_SIZES = tuple(range(3, 31, 3))
DEFAULT_RECORDS = 200

REPORT_COLUMNS = ["job", "experiment", "setting", "model_id", "mape", "repetitions", "seed"]
FLOAT_FORMAT = "%.6f"


@dataclass(frozen=True)
class ExperimentReport:
    """Mean MAPE per setting and model for one job and experiment."""

    job: str
    experiment: str
    models: Tuple[str, ...]
    repetitions: int
    seed: int
    frame: pd.DataFrame = field(compare=False, repr=False, default=None)

    def __post_init__(self):
        if self.frame is None:
            object.__setattr__(
                self, "frame", pd.DataFrame(columns=["setting", "model_id", "mape"])
            )

    def mape(self, setting: Union[str, int], model_id: str) -> float:
        """Return the mean MAPE of one cell."""
        rows = self.frame[
            (self.frame.setting == str(setting)) & (self.frame.model_id == model_id)
        ]
        if rows.empty:
            raise KeyError((setting, model_id))
        return float(rows.mape.iloc[0])

    def table(self) -> pd.DataFrame:
        """Return the report as rows of `REPORT_COLUMNS`."""
        table = self.frame.copy()
        table.insert(0, "experiment", self.experiment)
        table.insert(0, "job", self.job)
        table["repetitions"] = self.repetitions
        table["seed"] = self.seed
        return table[REPORT_COLUMNS]

    def pivot(self) -> pd.DataFrame:
        """Return settings as rows and models as columns (candidate order)."""
        settings = list(dict.fromkeys(self.frame.setting))
        cells = {
            (setting, model_id): value
            for setting, model_id, value in self.frame[["setting", "model_id", "mape"]].itertuples(
                index=False
            )
        }
        return pd.DataFrame(
            [[cells.get((s, m), np.nan) for m in self.models] for s in settings],
            index=pd.Index(settings, name="setting"),
            columns=list(self.models),
        )


def as_training_set(data: Union[TrainingSet, JobProfile], n: int, seed: int) -> TrainingSet:
    """Return `data`, generating `n` records first when it is a profile."""
    if isinstance(data, JobProfile):
        return synth_generate(data, n, seed)
    return data


def score(
    models: Sequence[str], train: TrainingSet, test: TrainingSet, cap: SplitCap
) -> Dict[str, float]:
    """Return the held-out MAPE of every model and of the composed predictor."""
    actual = test.runtimes
    scores = {}
    for model_id in models:
        predictions, _ = predict_heldout(model_id, train, test.records)
        scores[model_id] = mape(actual, predictions)

    try:
        predictor = fit_predictor(train, models, cap)
        scores[PREDICTOR] = mape(actual, predictor.predict(test.records))
    except (ModelFitError, TooFewRecords) as e:
        log.debug("predictor fell back to the mean: %s", e)
        scores[PREDICTOR] = mape(actual, np.full(len(actual), np.mean(train.runtimes)))
    return scores


def origin_repetition(
    ts: TrainingSet,
    groups: List[List[int]],
    models: Sequence[str],
    cap: SplitCap,
    seed: int,
) -> Dict[Tuple[str, str], float]:
    """Return `(scenario, model) -> MAPE` for one local/global split."""
    rng = np.random.default_rng(seed)
    rows = groups[int(rng.integers(len(groups)))]
    picks = rng.choice(len(rows), size=holdout_size(len(rows)), replace=False)
    test_rows = sorted(rows[int(i)] for i in picks)
    held_out = set(test_rows)

    test = ts.subset(test_rows)
    local = ts.subset(i for i in rows if i not in held_out)
    worldwide = ts.subset(i for i in range(len(ts)) if i not in held_out)

    result = {}
    for scenario, train in [(LOCAL, local), (GLOBAL, worldwide)]:
        for model_id, value in score(models, train, test, cap).items():
            result[(scenario, model_id)] = value
    return result


def availability_repetition(
    ts: TrainingSet,
    sizes: Sequence[int],
    models: Sequence[str],
    cap: SplitCap,
    seed: int,
) -> Dict[Tuple[str, str], float]:
    """Return `(training size, model) -> MAPE` for one draw of every size."""
    rng = np.random.default_rng(seed)
    result = {}
    for size in sizes:
        train_rows = set(int(i) for i in rng.choice(len(ts), size=size, replace=False))
        train = ts.subset(sorted(train_rows))
        test = ts.subset(i for i in range(len(ts)) if i not in train_rows)
        for model_id, value in score(models, train, test, cap).items():
            result[(str(size), model_id)] = value
    return result


def summarize(
    outcomes: Iterable[Dict[Tuple[str, str], float]],
    settings: Sequence[str],
    models: Sequence[str],
) -> pd.DataFrame:
    """Return the mean MAPE of every (setting, model) cell in fixed order."""
    frame = pd.DataFrame(
        [(setting, model_id, value) for o in outcomes for (setting, model_id), value in o.items()],
        columns=["setting", "model_id", "mape"],
    )
    rows = []
    for setting in settings:
        for model_id in models:
            cell = frame[(frame.setting == setting) & (frame.model_id == model_id)]
            rows.append((setting, model_id, float(cell.mape.mean())))
    return pd.DataFrame(rows, columns=["setting", "model_id", "mape"])


def repetition_seeds(seed: int, n_splits: int) -> List[int]:
    """Return one independent seed per repetition."""
    children = np.random.SeedSequence(seed).spawn(n_splits)
    return [int(child.generate_state(1)[0]) for child in children]


def experiment_origin(
    data: Union[TrainingSet, JobProfile],
    n_splits: int = 50,
    seed: int = SEED,
    models: Optional[Iterable[str]] = None,
    cap: Optional[SplitCap] = None,
    cpus: int = 1,
    n_records: int = DEFAULT_RECORDS,
) -> ExperimentReport:
    """Return the local-versus-global accuracy report.

    Only local datasets with at least three records can be chosen.
    """
    ts = as_training_set(data, n_records, seed)
    cap = cap or SplitCap(MAX_SPLITS, seed=seed)
    groups = [rows for rows in local_groups(ts) if len(rows) >= 3]
    if not groups:
        raise TooFewRecords("no local dataset has 3 or more records")
    if n_splits < 1:
        raise ValueError(f"n_splits must be >= 1, got {n_splits}")

    models = candidate_order(models)
    run = partial(origin_repetition, ts, groups, models, cap)
    outcomes = parallel_map(run, repetition_seeds(seed, n_splits), cpus, desc="origin")
    frame = summarize(outcomes, [LOCAL, GLOBAL], models + [PREDICTOR])
    return ExperimentReport(
        ts.schema.job_name, ORIGIN, tuple(models + [PREDICTOR]), n_splits, seed, frame
    )


def experiment_availability(
    data: Union[TrainingSet, JobProfile],
    sizes: Sequence[int] = DEFAULT_SIZES,
    n_splits: int = 50,
    seed: int = SEED,
    models: Optional[Iterable[str]] = None,
    cap: Optional[SplitCap] = None,
    cpus: int = 1,
    n_records: int = DEFAULT_RECORDS,
) -> ExperimentReport:
    """Return the accuracy report for growing amounts of training data."""
    ts = as_training_set(data, n_records, seed)
    cap = cap or SplitCap(MAX_SPLITS, seed=seed)
    sizes = sorted(set(int(s) for s in sizes))
    if not sizes or sizes[0] < 2:
        raise ValueError(f"training sizes must be >= 2, got {sizes}")
    if len(ts) <= sizes[-1]:
        raise TooFewRecords(f"{len(ts)} records cannot train on {sizes[-1]} and test on the rest")
    if n_splits < 1:
        raise ValueError(f"n_splits must be >= 1, got {n_splits}")

    models = candidate_order(models)
    run = partial(availability_repetition, ts, sizes, models, cap)
    outcomes = parallel_map(run, repetition_seeds(seed, n_splits), cpus, desc="availability")
    frame = summarize(outcomes, [str(s) for s in sizes], models + [PREDICTOR])
    return ExperimentReport(
        ts.schema.job_name, AVAILABILITY, tuple(models + [PREDICTOR]), n_splits, seed, frame
    )


def report_tsv(reports: Iterable[ExperimentReport]) -> str:
    """Return the reports as one TSV document."""
    tables = [r.table() for r in reports]
    table = pd.concat(tables) if tables else pd.DataFrame(columns=REPORT_COLUMNS)
    return table.to_csv(sep="\t", index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def emit_plot_data(report: ExperimentReport, folder: Union[str, Path]) -> Path:
    """Write `<job>_<experiment>.csv` with one column per model; return its path."""
    folder = Path(folder)
    folder.mkdir(parents=True, exist_ok=True)
    path = folder / f"{report.job}_{report.experiment}.csv"

    x_name = "training_size" if report.experiment == AVAILABILITY else "scenario"
    wide = report.pivot()
    wide.index.name = x_name
    wide.to_csv(path, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path
