#!/usr/bin/env python
# coding: utf-8
"""Synthetic runtime data."""

# lib
import numpy as np
import pytest

# pkg
from collabconf.errors import ConfigError
from collabconf.synth import (
    MACHINE_SPEED,
    PROFILES,
    derive_seed,
    get_profile,
    sort_runtime,
    synth_generate,
)


def test_profile_arities():
    """jobs carry zero to two context features besides the size"""
    arities = {name: PROFILES[name].arity for name in ["sort", "grep", "sgd", "kmeans", "pagerank"]}
    assert arities == {"sort": 0, "grep": 1, "sgd": 2, "kmeans": 2, "pagerank": 2}


def test_noise_free_is_ground_truth():
    """without noise every runtime equals the ground truth"""
    for profile in PROFILES.values():
        ts = synth_generate(profile, 1, seed=4, noise=0.0)
        record = ts.records[0]
        assert record.gross_runtime == profile.ground_truth(record)


def test_sort_ground_truth():
    """sort time shrinks with nodes and grows with size"""
    assert sort_runtime(4, 10.0) < sort_runtime(2, 10.0)
    assert sort_runtime(4, 20.0) > sort_runtime(4, 10.0)
    assert sort_runtime(1, 10.0) == 720_000.0


def test_same_seed_same_data():
    """generation is reproducible"""
    profile = get_profile("kmeans")
    assert synth_generate(profile, 30, seed=9) == synth_generate(profile, 30, seed=9)
    assert synth_generate(profile, 30, seed=9) != synth_generate(profile, 30, seed=10)


def test_noise_level():
    """the log-residual spread matches the noise parameter"""
    profile = get_profile("grep")
    ts = synth_generate(profile, 500, seed=1, noise=0.02)
    residuals = [np.log(r.gross_runtime / profile.ground_truth(r)) for r in ts.records]
    assert 0.015 <= np.std(residuals) <= 0.025


def test_median_of_reduces_noise():
    """taking the median of several runs narrows the spread"""
    profile = get_profile("sort")

    def spread(median_of):
        ts = synth_generate(profile, 400, seed=2, noise=0.1, median_of=median_of)
        return np.std([np.log(r.gross_runtime / profile.ground_truth(r)) for r in ts.records])

    assert spread(5) < spread(1)


def test_machine_types():
    """slower machines take longer"""
    profile = get_profile("sort")
    ts = synth_generate(profile, 60, seed=3, noise=0.0, machine_types=["m5.xlarge", "m4.xlarge"])
    assert set(ts.records.machine_type) == {"m5.xlarge", "m4.xlarge"}
    for record in ts.records:
        base = sort_runtime(record.instance_count, *record.context)
        assert record.gross_runtime == pytest.approx(base * MACHINE_SPEED[record.machine_type])


def test_invalid_arguments():
    """bad sizes, noise and names are configuration errors"""
    profile = get_profile("sort")
    with pytest.raises(ConfigError):
        synth_generate(profile, 0)
    with pytest.raises(ConfigError):
        synth_generate(profile, 5, noise=-0.1)
    with pytest.raises(ConfigError):
        get_profile("wordcount")


def test_derive_seed():
    """derived seeds depend on every key"""
    assert derive_seed(1, 2) == derive_seed(1, 2)
    assert derive_seed(1, 2) != derive_seed(2, 1)
