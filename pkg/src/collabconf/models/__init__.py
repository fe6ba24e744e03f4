#!/usr/bin/env python
# coding: utf-8
"""Runtime models behind one prediction contract.

Every model is trained from a `TrainingSet` by a fitter registered under a
model id and returns a `FittedModel`. Built-in models are:

- `GBM`: least-squares gradient boosting over all features
- `BOM`: basic optimistic model (linear inputs model, cubic speedup model)
- `OGB`: optimistic gradient boosting (boosted inputs and speedup models)
- `ERNEST`: parametric scale-out model with non-negative coefficients

Maintainers add job-specific models by decorating a fitter with
`@register("MY_MODEL")` in a module listed in a plug-in manifest::

    # models.txt
    MY_MODEL = myjob.runtime_models

Predictions are clamped to at least `MIN_RUNTIME_MS`.
"""

# native
from dataclasses import dataclass
from importlib import import_module
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Union
import logging
import sys

# lib
import numpy as np

# pkg
from ..dataset import Encoder, FeatureMatrix, RuntimeRecord, TrainingSet
from ..errors import EmptyTrainingSet, PluginError, SchemaFingerprintMismatch, UnknownModel

log = logging.getLogger(__name__)

MIN_RUNTIME_MS = 1.0

BUILTIN_ORDER = ["GBM", "BOM", "OGB", "ERNEST"]
"""Fixed candidate order; custom models follow in manifest order."""

MODELS: Dict[str, Callable[[TrainingSet], "FittedModel"]] = {}
PLUGINS: List[str] = []


@dataclass(frozen=True)
class FittedModel:
    """Trained regressor plus the encoding it expects."""

    model_id: str
    regressor: Any
    fingerprint: Optional[str] = None
    encoder: Optional[Encoder] = None

    def encode(self, records: Union[RuntimeRecord, Iterable[RuntimeRecord]]) -> FeatureMatrix:
        """Return `records` encoded the way this model was trained."""
        if self.encoder is None:
            raise SchemaFingerprintMismatch(f"{self.model_id} was trained on raw arrays")
        return self.encoder.encode(records)

    def predict(self, X) -> np.ndarray:
        """Return clamped runtime predictions for `X`."""
        return predict(self, X)


def register(model_id: str) -> Callable:
    """Register a fitter under a model id."""

    def generator(original: Callable) -> Callable:
        original.model_id = model_id
        MODELS[model_id] = original
        return original

    return generator


def as_matrix(X) -> FeatureMatrix:
    """Return `X` as a feature matrix (raw arrays get no fingerprint)."""
    return X if isinstance(X, FeatureMatrix) else FeatureMatrix.of(X)


def predict(model: FittedModel, X) -> np.ndarray:
    """Return runtime predictions in milliseconds, clamped to >= 1 ms.

    >>> from .linear import fit_linear
    >>> model = fit_linear([[0.0], [1.0]], [-10.0, -5.0])
    >>> [round(float(v), 6) for v in predict(model, [[0.0], [3.0]])]
    [1.0, 5.0]
    """
    X = as_matrix(X)
    if X.fingerprint != model.fingerprint:
        raise SchemaFingerprintMismatch(
            f"{model.model_id} expects encoding {model.fingerprint}, got {X.fingerprint}"
        )
    raw = np.asarray(model.regressor.predict(X), dtype=float)
    raw = np.nan_to_num(raw, nan=MIN_RUNTIME_MS, posinf=np.finfo(float).max)
    return np.maximum(raw, MIN_RUNTIME_MS)


def predict_records(model: FittedModel, records) -> np.ndarray:
    """Encode `records` for `model` and predict their runtimes."""
    return predict(model, model.encode(records))


def fit_model(model_id: str, ts: TrainingSet) -> FittedModel:
    """Train the registered model `model_id` on `ts`."""
    if model_id not in MODELS:
        raise UnknownModel(f"no model registered as {model_id!r}")
    if not len(ts):
        raise EmptyTrainingSet(f"cannot fit {model_id} on zero records")
    return MODELS[model_id](ts)


def candidate_order(model_ids: Optional[Iterable[str]] = None) -> List[str]:
    """Return model ids in the fixed tie-breaking order.

    >>> candidate_order(["ERNEST", "GBM"])
    ['GBM', 'ERNEST']
    """
    order = BUILTIN_ORDER + [p for p in PLUGINS if p not in BUILTIN_ORDER]
    if model_ids is None:
        return list(order)

    model_ids = list(dict.fromkeys(model_ids))
    for model_id in model_ids:
        if model_id not in MODELS:
            raise UnknownModel(f"no model registered as {model_id!r}")
    rank = {m: i for i, m in enumerate(order)}
    return sorted(model_ids, key=lambda m: rank.get(m, len(rank)))


def load_plugins(path: Union[str, Path]) -> List[str]:
    """Import the custom models listed in a plug-in manifest.

    Each non-comment line reads `MODEL_ID = python.module`; importing the
    module must register `MODEL_ID`. The manifest's folder is importable.
    """
    path = Path(path)
    if not path.exists():
        raise PluginError(f"plug-in manifest not found: {path}")

    folder = str(path.resolve().parent)
    if folder not in sys.path:
        sys.path.insert(0, folder)

    loaded = []
    for num, line in enumerate(path.read_text(encoding="utf-8").split("\n"), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        model_id, sep, module = [part.strip() for part in line.partition("=")]
        if not sep or not model_id or not module:
            raise PluginError(f"{path}:{num}: expected `MODEL_ID = module`")
        try:
            import_module(module)
        except ImportError as e:
            raise PluginError(f"{path}:{num}: cannot import {module}: {e}") from e
        if model_id not in MODELS:
            raise PluginError(f"{path}:{num}: {module} did not register {model_id}")

        if model_id not in PLUGINS and model_id not in BUILTIN_ORDER:
            PLUGINS.append(model_id)
        loaded.append(model_id)
        log.info("loaded custom model %s from %s", model_id, module)
    return loaded


# NOTE: import built-in models now to avoid circular import
# pylint: disable=wrong-import-position
from . import linear, boosting, optimistic, ernest
from .linear import fit_linear
from .boosting import GbmParams, fit_gbm
from .optimistic import OptimisticDecomposition, fit_optimistic, fit_poly3_ssm
from .ernest import fit_ernest, nnls
