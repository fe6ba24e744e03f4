#!/usr/bin/env python
# coding: utf-8
"""Errors raised by collabconf.

Every error carries the process `exit_code` the command-line tool uses when
the error escapes a subcommand:

- `2` input errors (bad files, bad flags, unusable data)
- `3` no scale-out can meet the deadline

Model-fit errors are usually caught by cross-validation, which degrades the
affected split to a mean predictor.
"""

# native
from typing import Optional

EXIT_OK = 0
EXIT_REJECTED = 1
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3


class CollabconfError(Exception):
    """Base class for all collabconf errors."""

    exit_code = EXIT_INPUT


class DatasetError(CollabconfError):
    """Indicates a problem with shared runtime data."""


class MalformedRow(DatasetError):
    """A data row cannot be parsed or violates a record invariant."""

    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class SchemaMismatch(DatasetError):
    """A header or record disagrees with the job schema."""


class SchemaError(DatasetError):
    """A job schema is invalid."""


class EmptyTrainingSet(CollabconfError):
    """A model was asked to fit zero records."""


class SchemaFingerprintMismatch(CollabconfError):
    """A feature matrix was encoded for a different model."""


class UnknownModel(CollabconfError):
    """No model is registered under the requested id."""


class PluginError(CollabconfError):
    """A custom model plug-in cannot be loaded."""


class ModelFitError(CollabconfError):
    """A model cannot be trained on the given data."""


class InsufficientScaleOutVariation(ModelFitError):
    """No group of records shares its context across two scale-outs."""


class DegenerateSpeedupCurve(ModelFitError):
    """A fitted speedup curve is not positive at the reference scale-out."""


class TooFewRecords(CollabconfError):
    """Not enough records to cross-validate or hold out a test set."""


class TooFewSplits(CollabconfError):
    """Not enough cross-validation errors to estimate a distribution."""


class DomainError(CollabconfError):
    """An argument lies outside the domain of a numeric function."""


class CatalogError(CollabconfError):
    """A price catalog file is invalid."""


class ConfigError(CollabconfError):
    """A configuration request or flag is invalid."""


class NoUsableMachineType(CollabconfError):
    """No machine type has any runtime data."""


class NoFeasibleScaleOut(CollabconfError):
    """No scale-out meets the deadline at the requested confidence."""

    exit_code = EXIT_INFEASIBLE

    def __init__(
        self,
        best_scale_out: Optional[int] = None,
        best_runtime_ms: Optional[float] = None,
    ):
        msg = "no scale-out meets the deadline"
        if best_scale_out is not None:
            msg += f"; best achievable: {best_scale_out} nodes at {best_runtime_ms:.0f} ms"
        super().__init__(msg)
        self.best_scale_out = best_scale_out
        self.best_runtime_ms = best_runtime_ms


class WorkerError(CollabconfError):
    """A job failed inside a worker process."""
