#!/usr/bin/env python
# coding: utf-8
"""Cluster configuration: error margin, scale-out, machine type, cost."""

# native
import math

# lib
import numpy as np
import pytest

# pkg
from collabconf.configurator import (
    ConfigRequest,
    MachineType,
    PriceCatalog,
    bottleneck_flag,
    build_plan,
    choose_machine_type,
    choose_scale_out,
    epsilon_c,
    inv_erf,
    load_catalog,
    parse_catalog,
    parse_scale_outs,
    plan_tsv,
)
from collabconf.errors import (
    CatalogError,
    ConfigError,
    DomainError,
    NoFeasibleScaleOut,
    NoUsableMachineType,
)

SECOND = 1000.0
RUNTIMES = {2: 900 * SECOND, 4: 500 * SECOND, 8: 300 * SECOND}
CATALOG = PriceCatalog(
    (
        MachineType("m5", 0.20, 16.0, "general"),
        MachineType("m4", 0.18, 16.0, "general"),
        MachineType("c5", 0.17, 8.0, "compute"),
    )
)


def erf_series(x):
    """Return erf(x) from its Maclaurin series."""
    total, term, n = 0.0, x, 0
    while abs(term) > 1e-17:
        total += term / (2 * n + 1)
        n += 1
        term *= -x * x / n
    return 2.0 / math.sqrt(math.pi) * total


def test_inv_erf_quantile():
    """the 95% one-sided Gaussian quantile is 1.64485"""
    assert abs(math.sqrt(2) * inv_erf(0.9) - 1.64485) < 1e-4


def test_inv_erf_round_trip():
    """erf(inv_erf(p)) is p against an independent series"""
    for p in [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99]:
        for sign in (1, -1):
            assert abs(erf_series(inv_erf(sign * p)) - sign * p) <= 1e-7


def test_inv_erf_odd():
    """inv_erf is an odd function"""
    for p in (0.05, 0.5, 0.97):
        assert abs(inv_erf(-p) + inv_erf(p)) <= 1e-12


def test_inv_erf_domain():
    """inv_erf is undefined at +-1"""
    for p in (1.0, -1.0, 2.0):
        with pytest.raises(DomainError):
            inv_erf(p)


def test_epsilon_c():
    """the margin is mu plus a multiple of sigma"""
    assert epsilon_c(120.0, 500.0, 0.5) == 120.0
    assert abs(epsilon_c(0.0, 1000.0, 0.95) - 1644.85) < 0.1
    for c in (0.6, 0.9, 0.99):
        assert epsilon_c(50.0, 0.0, c) == 50.0


def test_choose_plain_deadline():
    """without error the smallest scale-out under the deadline wins"""
    assert choose_scale_out(RUNTIMES, 0.0, 0.0, 0.95, 600 * SECOND) == 4


def test_choose_with_error_margin():
    """a wider error distribution needs more nodes"""
    assert choose_scale_out(RUNTIMES, 0.0, 60 * SECOND, 0.95, 600 * SECOND) == 4
    assert choose_scale_out(RUNTIMES, 0.0, 61 * SECOND, 0.95, 600 * SECOND) == 8


def test_choose_infeasible():
    """an impossible deadline reports the best option"""
    with pytest.raises(NoFeasibleScaleOut) as info:
        choose_scale_out(RUNTIMES, 0.0, 0.0, 0.95, 100 * SECOND)
    assert info.value.best_scale_out == 8
    assert info.value.best_runtime_ms == 300 * SECOND
    assert info.value.exit_code == 3


def test_choose_avoids_bottleneck():
    """flagged scale-outs are skipped while others qualify"""
    flags = {4: True}
    assert choose_scale_out(RUNTIMES, 0.0, 0.0, 0.95, 600 * SECOND, flags) == 8


def test_choose_bottleneck_only_option():
    """a flagged scale-out is used when nothing else works"""
    flags = {8: True}
    assert choose_scale_out(RUNTIMES, 0.0, 0.0, 0.95, 400 * SECOND, flags) == 8


def test_confidence_monotone():
    """more confidence never picks fewer nodes"""
    rng = np.random.default_rng(8)
    for _ in range(200):
        scale_outs = sorted(rng.choice(np.arange(1, 33), size=5, replace=False).tolist())
        runtimes = sorted(rng.uniform(100, 10_000, size=5).tolist(), reverse=True)
        predictions = dict(zip(scale_outs, runtimes))
        mu, sigma = rng.uniform(-200, 200), rng.uniform(0, 1000)
        t_max = rng.uniform(100, 12_000)

        chosen = []
        for c in (0.5, 0.8, 0.95, 0.99):
            try:
                chosen.append(choose_scale_out(predictions, mu, sigma, c, t_max))
            except NoFeasibleScaleOut:
                chosen.append(math.inf)
        assert chosen == sorted(chosen)


def test_deadline_coverage():
    """the chosen scale-out meets the deadline about c of the time"""
    rng = np.random.default_rng(21)
    mu, sigma = 2_000.0, 10_000.0
    predictions = {s: 600_000.0 / s for s in range(1, 21)}
    t_max = 100_000.0
    s = choose_scale_out(predictions, mu, sigma, 0.95, t_max)

    actual = predictions[s] + rng.normal(mu, sigma, size=1000)
    assert np.mean(actual <= t_max) >= 0.92


def test_choose_machine_maintainer():
    """the maintainer's recommendation wins"""
    req = ConfigRequest((2, 4), maintainer_machine_type="c5")
    assert choose_machine_type(req, CATALOG, {"m5": 40, "m4": 10, "c5": 100}) == "c5"


def test_choose_machine_general():
    """general-purpose types with most data are preferred"""
    req = ConfigRequest((2, 4))
    assert choose_machine_type(req, CATALOG, {"m5": 40, "m4": 10, "c5": 100}) == "m5"


def test_choose_machine_no_data():
    """some machine type must have data"""
    with pytest.raises(NoUsableMachineType):
        choose_machine_type(ConfigRequest((2,)), CATALOG, {})


def test_bottleneck_flag():
    """combined memory must hold the dataset with headroom"""
    node = MachineType("m5", 0.2, 16.0)
    assert bottleneck_flag(4, node, 50.0, 1.5)
    assert not bottleneck_flag(5, node, 50.0, 1.5)
    assert not any(bottleneck_flag(s, MachineType("t", 1.0, 1.0), 0.13) for s in range(1, 50))
    assert not bottleneck_flag(1, node, 1e6, 0.0)


def test_plan_without_deadline():
    """without a deadline the cheapest row is chosen"""
    req = ConfigRequest((2, 4))
    plan = build_plan(req, CATALOG, "m5", {2: 1800 * SECOND, 4: 1080 * SECOND})
    costs = [round(row.cost, 10) for row in plan.table]
    assert costs == [0.2, 0.24]
    assert plan.chosen_scale_out == 2


def test_plan_with_deadline():
    """the deadline overrides cost"""
    req = ConfigRequest((2, 4), t_max=1200 * SECOND)
    plan = build_plan(req, CATALOG, "m5", {2: 1800 * SECOND, 4: 1080 * SECOND})
    assert plan.chosen_scale_out == 4
    assert plan.cost == pytest.approx(0.24)
    assert [row.meets_deadline for row in plan.table] == [False, True]


def test_plan_price_scaling():
    """scaling prices scales costs and keeps the choice"""
    predictions = {2: 1800 * SECOND, 4: 1080 * SECOND, 8: 700 * SECOND}
    req = ConfigRequest((2, 4, 8), t_max=1200 * SECOND)
    cheap = build_plan(req, CATALOG, "m5", predictions)
    pricey = build_plan(
        req, PriceCatalog((MachineType("m5", 0.60, 16.0, "general"),)), "m5", predictions
    )
    assert cheap.chosen_scale_out == pricey.chosen_scale_out
    for one, three in zip(cheap.table, pricey.table):
        assert three.cost == pytest.approx(3 * one.cost)


def test_plan_tsv():
    """the plan table marks the chosen row"""
    req = ConfigRequest((2, 4), t_max=1200 * SECOND)
    plan = build_plan(req, CATALOG, "m5", {2: 1800 * SECOND, 4: 1080 * SECOND})
    lines = plan_tsv(plan).splitlines()
    assert lines[0] == "s\tt_s_ms\tcost\tmeets_deadline\tbottleneck\tchosen"
    assert lines[1].endswith("\tfalse\tfalse\tfalse")
    assert lines[2].startswith("4\t1080000\t")
    assert lines[2].endswith("\ttrue\tfalse\ttrue")


def test_empty_scale_outs():
    """the scale-out domain cannot be empty"""
    with pytest.raises(ConfigError):
        ConfigRequest(())


def test_bad_confidence():
    """confidence lies strictly between 0 and 1"""
    with pytest.raises(ConfigError):
        ConfigRequest((2,), confidence=1.0)


def test_parse_scale_outs():
    """ranges and lists both work"""
    assert parse_scale_outs("2..12") == tuple(range(2, 13))
    assert parse_scale_outs("4..16,4") == (4, 8, 12, 16)
    assert parse_scale_outs("8,2,4,2") == (2, 4, 8)
    with pytest.raises(ConfigError):
        parse_scale_outs("12..2")


def test_catalog_file():
    """the bundled catalog parses and bad catalogs are rejected"""
    catalog = load_catalog()
    assert catalog["m5.xlarge"].category == "general"
    with pytest.raises(CatalogError):
        parse_catalog("machine_type\tprice_per_hour\tmemory_gb\tcategory\nx\t-1\t8\tgeneral\n")
    with pytest.raises(CatalogError):
        parse_catalog("machine_type\tprice\n")
