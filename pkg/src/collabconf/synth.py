#!/usr/bin/env python
# coding: utf-8
"""Synthetic runtime data for five common dataflow jobs.

Each `JobProfile` pairs a job schema with a ground-truth runtime function
and a discrete grid of context values. Generated records draw every context
value, the scale-out, and (optionally) the machine type uniformly from the
grid and multiply the ground truth by log-normal noise.

Ground truths (milliseconds on the reference machine, `s` is the scale-out):

    sort      a * size * (1/s + b * log(s))
    grep      a * size / s * (1 + b * hit_ratio)
    sgd       a * size * iterations * batch_fraction / s + c * iterations
    kmeans    a * size * k * iters(convergence) / s
    pagerank  a * (links / s + b * pages * iters(convergence)),
              links = size * iters(convergence)

Context grids are short so that records sharing a context at several
scale-outs exist even in small samples. Scale-out independent terms are small
next to the parallel work.
"""

# native
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple
import math

# lib
import numpy as np

# pkg
from . import SEED
from .dataset import NUMERIC, Feature, JobSchema, RecordList, RuntimeRecord, TrainingSet
from .errors import ConfigError

DEFAULT_NOISE = 0.02
SCALE_OUTS = (2, 4, 6, 8, 10, 12)

MACHINE_SPEED = {
    "m5.xlarge": 1.0,
    "m4.xlarge": 1.15,
    "c5.xlarge": 0.85,
    "r5.xlarge": 1.05,
}
"""Runtime multiplier per machine type (m5.xlarge is the reference)."""


def sort_runtime(s: float, size: float) -> float:
    """Return the sort ground truth."""
    return 72_000.0 * size * (1.0 / s + 0.02 * math.log(s))


def grep_runtime(s: float, size: float, hit_ratio: float) -> float:
    """Return the grep ground truth."""
    return 40_000.0 * size / s * (1.0 + 2.0 * hit_ratio)


def sgd_runtime(s: float, size: float, iterations: float, batch_fraction: float) -> float:
    """Return the logistic-regression SGD ground truth."""
    return 1_800.0 * size * iterations * batch_fraction / s + 20.0 * iterations


def convergence_iterations(convergence: float, per_decade: float) -> float:
    """Return the iterations needed to reach a convergence criterion.

    >>> convergence_iterations(0.001, 5.0)
    15.0
    """
    return per_decade * round(-math.log10(convergence), 9)


def kmeans_runtime(s: float, size: float, k: float, convergence: float) -> float:
    """Return the K-Means ground truth."""
    return 1_500.0 * size * k * convergence_iterations(convergence, 5.0) / s


def pagerank_runtime(s: float, size: float, pages: float, convergence: float) -> float:
    """Return the PageRank ground truth; every iteration visits every link."""
    iterations = convergence_iterations(convergence, 10.0)
    links = size * iterations
    return 200.0 * (links / s + 0.2 * pages * iterations)


@dataclass(frozen=True)
class JobProfile:
    """Synthetic job: schema, context grid, and ground-truth runtime."""

    name: str
    schema: JobSchema
    grid: Tuple[Tuple, ...]
    runtime: Callable[..., float]
    scale_outs: Tuple[int, ...] = SCALE_OUTS
    machine_types: Tuple[str, ...] = ("m5.xlarge",)
    noise: float = DEFAULT_NOISE

    @property
    def arity(self) -> int:
        """Return the number of context features besides the dataset size."""
        return len(self.schema.context_features) - 1

    def ground_truth(self, record: RuntimeRecord) -> float:
        """Return the noise-free runtime of `record`."""
        speed = MACHINE_SPEED.get(record.machine_type, 1.0)
        return speed * self.runtime(float(record.instance_count), *record.context)


def _profile(name, features, grid, runtime) -> JobProfile:
    schema = JobSchema(name, tuple(Feature(n, k) for n, k in features))
    return JobProfile(name, schema, tuple(tuple(values) for values in grid), runtime)


SIZES_GB = (10.0, 12.0, 14.0, 16.0, 18.0, 20.0)

PROFILES: Dict[str, JobProfile] = {
    p.name: p
    for p in [
        _profile("sort", [("data_size", NUMERIC)], [SIZES_GB], sort_runtime),
        _profile(
            "grep",
            [("data_size", NUMERIC), ("hit_ratio", NUMERIC)],
            [SIZES_GB, (0.05, 0.2, 0.5)],
            grep_runtime,
        ),
        _profile(
            "sgd",
            [("data_size", NUMERIC), ("iterations", NUMERIC), ("batch_fraction", NUMERIC)],
            [(10.0, 20.0, 30.0), (50.0, 100.0), (0.5, 1.0)],
            sgd_runtime,
        ),
        _profile(
            "kmeans",
            [("data_size", NUMERIC), ("k", NUMERIC), ("convergence", NUMERIC)],
            [(10.0, 15.0, 20.0), (3.0, 6.0, 9.0), (0.01, 0.001)],
            kmeans_runtime,
        ),
        _profile(
            "pagerank",
            [("data_size", NUMERIC), ("pages", NUMERIC), ("convergence", NUMERIC)],
            [(130.0, 290.0, 440.0), (0.5, 1.0, 2.0), (0.01, 0.001, 0.0001)],
            pagerank_runtime,
        ),
    ]
}


def get_profile(name: str) -> JobProfile:
    """Return the profile named `name`."""
    if name not in PROFILES:
        raise ConfigError(f"unknown job profile {name!r}; choose from {sorted(PROFILES)}")
    return PROFILES[name]


def derive_seed(seed: int, *keys: int) -> int:
    """Return a sub-seed that depends on `seed` and `keys` only.

    >>> derive_seed(7, 1) == derive_seed(7, 1) != derive_seed(7, 2)
    True
    """
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


def synth_generate(
    profile: JobProfile,
    n: int,
    seed: int = SEED,
    noise: Optional[float] = None,
    median_of: int = 1,
    machine_types: Optional[Sequence[str]] = None,
) -> TrainingSet:
    """Return `n` seeded records of a synthetic job.

    The runtime is the ground truth times `exp(N(0, noise))`; with
    `median_of > 1` it is the median of that many noisy draws.
    """
    if n < 1:
        raise ConfigError(f"need at least one record, got {n}")
    if median_of < 1:
        raise ConfigError(f"median_of must be >= 1, got {median_of}")
    noise = profile.noise if noise is None else noise
    if noise < 0:
        raise ConfigError(f"noise must be >= 0, got {noise}")
    machines = tuple(machine_types or profile.machine_types)

    rng = np.random.default_rng(seed)
    records = []
    for _ in range(n):
        machine = machines[int(rng.integers(len(machines)))]
        s = profile.scale_outs[int(rng.integers(len(profile.scale_outs)))]
        context = tuple(float(values[int(rng.integers(len(values)))]) for values in profile.grid)
        factor = float(np.median(np.exp(rng.normal(0.0, noise, size=median_of))))
        truth = profile.ground_truth(RuntimeRecord(machine, s, context, 1.0))
        records.append(RuntimeRecord(machine, s, context, truth * factor))
    return TrainingSet(profile.schema, RecordList(records))
