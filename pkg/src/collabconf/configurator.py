#!/usr/bin/env python
# coding: utf-8
"""Cluster configuration: machine type, scale-out, and cost.

The machine type is chosen first (maintainer recommendation, else the
general-purpose type with the most runtime data). The scale-out is then the
smallest one whose predicted runtime plus an error margin meets the deadline:

    t_s + epsilon_c <= t_max,  epsilon_c = mu + sqrt(2) * erfinv(2c - 1) * sigma

where `mu` and `sigma` describe the predictor's signed cross-validation
errors (assumed Gaussian) and `c` is the confidence. At `c = 0.95` the
multiplier of `sigma` is about 1.64485.

Scale-outs whose combined memory cannot hold the dataset with some headroom
are flagged as likely bottlenecks and only used when nothing else works.
Cost is `price_per_hour * runtime_hours * scale_out`.
"""

# native
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Tuple, Union
import logging
import math

# pkg
from . import HEADROOM
from .dataset import format_number, parse_number
from .errors import (
    CatalogError,
    ConfigError,
    DomainError,
    NoFeasibleScaleOut,
    NoUsableMachineType,
)

log = logging.getLogger(__name__)

MS_PER_HOUR = 3_600_000.0
DEFAULT_CONFIDENCE = 0.95
CATEGORIES = ("general", "compute", "memory", "storage")
CATALOG_COLUMNS = ("machine_type", "price_per_hour", "memory_gb", "category")
PLAN_COLUMNS = ("s", "t_s_ms", "cost", "meets_deadline", "bottleneck", "chosen")

SQRT_PI = math.sqrt(math.pi)

DEFAULT_CATALOG = """\
machine_type	price_per_hour	memory_gb	category
m5.large	0.096	8	general
m5.xlarge	0.192	16	general
m5.2xlarge	0.384	32	general
m4.xlarge	0.2	16	general
c5.xlarge	0.17	8	compute
c5.2xlarge	0.34	16	compute
r5.xlarge	0.252	32	memory
r5.2xlarge	0.504	64	memory
i3.xlarge	0.312	30.5	storage
"""
"""Static on-demand prices (USD/hour) for common EMR machine types."""


## inverse error function


def inv_erf(p: float) -> float:
    """Return `x` with `erf(x) = p`, accurate to about 1e-12.

    A closed-form approximation seeds Newton's method on `erf(x) - p`.

    >>> inv_erf(0.0)
    0.0
    >>> round(math.sqrt(2) * inv_erf(2 * 0.95 - 1), 5)
    1.64485
    >>> inv_erf(1.0)
    Traceback (most recent call last):
    ...
    collabconf.errors.DomainError: inv_erf is defined on (-1, 1), got 1.0
    """
    if not -1.0 < p < 1.0:
        raise DomainError(f"inv_erf is defined on (-1, 1), got {p}")
    if p == 0.0:
        return 0.0
    if p < 0:
        return -inv_erf(-p)

    # Winitzki's approximation (relative error below 2e-3)
    a = 0.147
    ln = math.log(1.0 - p * p)
    first = 2.0 / (math.pi * a) + ln / 2.0
    x = math.sqrt(math.sqrt(first * first - ln / a) - first)

    for _ in range(50):
        step = (math.erf(x) - p) / (2.0 / SQRT_PI * math.exp(-x * x))
        x -= step
        if abs(step) <= 1e-15 * max(1.0, abs(x)):
            break
    return x


def quantile_factor(confidence: float) -> float:
    """Return the Gaussian one-sided quantile `sqrt(2) * erfinv(2c - 1)`."""
    check_confidence(confidence)
    return math.sqrt(2.0) * inv_erf(2.0 * confidence - 1.0)


def epsilon_c(mu: float, sigma: float, confidence: float = DEFAULT_CONFIDENCE) -> float:
    """Return the error margin not exceeded with probability `confidence`.

    >>> epsilon_c(50.0, 0.0, 0.99)
    50.0
    >>> round(epsilon_c(0.0, 1000.0, 0.95), 1)
    1644.9
    """
    if sigma < 0:
        raise DomainError(f"sigma must be >= 0, got {sigma}")
    return mu + quantile_factor(confidence) * sigma


def check_confidence(confidence: float):
    """Raise unless `0 < confidence < 1`."""
    if not 0.0 < confidence < 1.0:
        raise ConfigError(f"confidence must be in (0, 1), got {confidence}")


## catalog


@dataclass(frozen=True)
class MachineType:
    """Catalog entry of one virtual machine type."""

    name: str
    price_per_hour: float
    memory_gb: float
    category: str = "general"


@dataclass(frozen=True)
class PriceCatalog:
    """Static prices and hardware of available machine types."""

    entries: Tuple[MachineType, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        for entry in self.entries:
            if entry.price_per_hour <= 0:
                raise CatalogError(f"{entry.name}: price must be > 0")
            if entry.memory_gb <= 0:
                raise CatalogError(f"{entry.name}: memory must be > 0")
            if entry.category not in CATEGORIES:
                raise CatalogError(f"{entry.name}: unknown category {entry.category!r}")

    def __contains__(self, name) -> bool:
        return any(e.name == name for e in self.entries)

    def __getitem__(self, name) -> MachineType:
        for entry in self.entries:
            if entry.name == name:
                return entry
        raise CatalogError(f"machine type not in catalog: {name}")

    def __len__(self) -> int:
        return len(self.entries)


def parse_catalog(text: str) -> PriceCatalog:
    """Return the catalog in a TSV document.

    >>> catalog = parse_catalog(DEFAULT_CATALOG)
    >>> catalog["m5.xlarge"].memory_gb
    16.0
    """
    lines = [line.rstrip("\r") for line in text.split("\n") if line.strip()]
    if not lines or tuple(lines[0].split("\t")) != CATALOG_COLUMNS:
        raise CatalogError(f"catalog header must be {list(CATALOG_COLUMNS)}")

    entries = []
    for num, line in enumerate(lines[1:], 2):
        cells = line.split("\t")
        if len(cells) != len(CATALOG_COLUMNS):
            raise CatalogError(f"line {num}: expected {len(CATALOG_COLUMNS)} columns")
        try:
            entries.append(
                MachineType(cells[0], parse_number(cells[1]), parse_number(cells[2]), cells[3])
            )
        except ValueError as e:
            raise CatalogError(f"line {num}: {e}") from None
    return PriceCatalog(tuple(entries))


def load_catalog(path: Optional[Union[str, Path]] = None) -> PriceCatalog:
    """Read a catalog file (the bundled catalog when `path` is None)."""
    if path is None:
        return parse_catalog(DEFAULT_CATALOG)
    return parse_catalog(Path(path).read_text(encoding="utf-8"))


## request and plan


@dataclass(frozen=True)
class ConfigRequest:
    """What the user asks the configurator for."""

    scale_outs: Tuple[int, ...]
    t_max: Optional[float] = None
    confidence: float = DEFAULT_CONFIDENCE
    dataset_size_gb: float = 0.0
    maintainer_machine_type: Optional[str] = None
    headroom: float = HEADROOM

    def __post_init__(self):
        object.__setattr__(self, "scale_outs", tuple(sorted(set(self.scale_outs))))
        check_confidence(self.confidence)
        if not self.scale_outs:
            raise ConfigError("the scale-out domain is empty")
        if any(s < 1 for s in self.scale_outs):
            raise ConfigError("scale-outs must be >= 1")
        if self.t_max is not None and self.t_max <= 0:
            raise ConfigError(f"t_max must be > 0, got {self.t_max}")
        if self.dataset_size_gb < 0:
            raise ConfigError("dataset size must be >= 0")


@dataclass(frozen=True)
class PlanRow:
    """Predicted runtime and cost of one scale-out."""

    s: int
    runtime_ms: float
    cost: float
    meets_deadline: bool
    bottleneck: bool


@dataclass(frozen=True)
class ClusterPlan:
    """Chosen cluster configuration and the full runtime/cost table."""

    machine_type: str
    chosen_scale_out: int
    predicted_runtime: float
    epsilon_c: float
    cost: float
    table: Tuple[PlanRow, ...] = ()
    warnings: Tuple[str, ...] = field(default=(), compare=False)

    @property
    def chosen(self) -> PlanRow:
        """Return the chosen row."""
        return next(row for row in self.table if row.s == self.chosen_scale_out)


def cost_of(price_per_hour: float, runtime_ms: float, scale_out: int) -> float:
    """Return the cost of running `scale_out` nodes for `runtime_ms`.

    >>> round(cost_of(0.20, 1_800_000, 2), 10)
    0.2
    """
    return price_per_hour * (runtime_ms / MS_PER_HOUR) * scale_out


def bottleneck_flag(
    s: int, machine: MachineType, dataset_size_gb: float, headroom: float = HEADROOM
) -> bool:
    """Return True if `s` nodes cannot hold the dataset with headroom.

    >>> bottleneck_flag(4, MachineType("m5.xlarge", 0.192, 16), 50.0)
    True
    """
    return s * machine.memory_gb < headroom * dataset_size_gb


def choose_scale_out(
    predictions: Mapping[int, float],
    mu: float,
    sigma: float,
    confidence: float,
    t_max: float,
    flags: Optional[Mapping[int, bool]] = None,
) -> int:
    """Return the smallest scale-out that meets the deadline with confidence.

    Flagged scale-outs are used only when no unflagged one qualifies.

    >>> choose_scale_out({2: 900.0, 4: 500.0, 8: 300.0}, 0.0, 0.0, 0.95, 600.0)
    4
    """
    if not predictions:
        raise ConfigError("no runtime predictions")
    flags = flags or {}
    margin = epsilon_c(mu, sigma, confidence)
    feasible = [s for s in sorted(predictions) if predictions[s] + margin <= t_max]
    if not feasible:
        best = min(sorted(predictions), key=lambda s: predictions[s])
        raise NoFeasibleScaleOut(best, predictions[best] + margin)

    clear = [s for s in feasible if not flags.get(s, False)]
    if clear:
        return clear[0]
    log.warning("only bottleneck-flagged scale-outs meet the deadline; using %d", feasible[0])
    return feasible[0]


def choose_machine_type(
    req: ConfigRequest, catalog: PriceCatalog, available_data: Mapping[str, int]
) -> str:
    """Return the machine type to configure.

    The maintainer's recommendation wins; otherwise the general-purpose type
    with the most runtime records, otherwise the type with the most records.
    Ties go to the name that sorts first.
    """
    if req.maintainer_machine_type:
        return req.maintainer_machine_type

    counts = {m: n for m, n in available_data.items() if n > 0}
    if not counts:
        raise NoUsableMachineType("no machine type has runtime data")

    general = [m for m in counts if m in catalog and catalog[m].category == "general"]
    pool = general or list(counts)
    return sorted(pool, key=lambda m: (-counts[m], m))[0]


def build_plan(
    req: ConfigRequest,
    catalog: PriceCatalog,
    machine_type: str,
    predictions: Mapping[int, float],
    mu: float = 0.0,
    sigma: float = 0.0,
) -> ClusterPlan:
    """Return the cluster plan for predicted runtimes on `machine_type`.

    With a deadline the scale-out follows `choose_scale_out`; without one it
    is the cheapest unflagged scale-out (ties to the smaller one).
    """
    missing = [s for s in req.scale_outs if s not in predictions]
    if missing:
        raise ConfigError(f"no runtime prediction for scale-outs {missing}")

    machine = catalog[machine_type]
    margin = epsilon_c(mu, sigma, req.confidence)
    rows = []
    for s in req.scale_outs:
        runtime = float(predictions[s])
        meets = req.t_max is None or runtime + margin <= req.t_max
        rows.append(
            PlanRow(
                s,
                runtime,
                cost_of(machine.price_per_hour, runtime, s),
                meets,
                bottleneck_flag(s, machine, req.dataset_size_gb, req.headroom),
            )
        )

    notes = []
    flags = {row.s: row.bottleneck for row in rows}
    if req.t_max is not None:
        chosen = choose_scale_out(
            {row.s: row.runtime_ms for row in rows}, mu, sigma, req.confidence, req.t_max, flags
        )
    else:
        pool = [row for row in rows if not row.bottleneck] or rows
        chosen = min(pool, key=lambda row: (row.cost, row.s)).s
    if flags[chosen]:
        notes.append(f"scale-out {chosen} may hit a memory bottleneck")

    row = next(r for r in rows if r.s == chosen)
    return ClusterPlan(machine_type, chosen, row.runtime_ms, margin, row.cost, tuple(rows), tuple(notes))


## rendering


def plan_tsv(plan: ClusterPlan) -> str:
    """Return the plan table as TSV."""
    lines = ["\t".join(PLAN_COLUMNS)]
    for row in plan.table:
        cells = [
            str(row.s),
            format_number(row.runtime_ms),
            format_number(row.cost),
            str(row.meets_deadline).lower(),
            str(row.bottleneck).lower(),
            str(row.s == plan.chosen_scale_out).lower(),
        ]
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def plan_table(plan: ClusterPlan, currency: str = "$") -> str:
    """Return the plan as a human-readable table."""
    lines = [
        f"machine type: {plan.machine_type}",
        f"error margin: {plan.epsilon_c:,.0f} ms",
        "",
        f"{'nodes':>5}  {'runtime':>12}  {'cost':>10}  {'deadline':>8}  {'memory':>8}",
    ]
    for row in plan.table:
        mark = "  chosen" if row.s == plan.chosen_scale_out else ""
        lines.append(
            f"{row.s:>5}  {format_duration(row.runtime_ms):>12}  "
            f"{currency}{row.cost:>9.4f}  {'ok' if row.meets_deadline else 'late':>8}  "
            f"{'low' if row.bottleneck else 'ok':>8}{mark}"
        )
    lines += [f"warning: {note}" for note in plan.warnings]
    return "\n".join(lines) + "\n"


def format_duration(ms: float) -> str:
    """Return a duration as `h:mm:ss`.

    >>> format_duration(3_723_000)
    '1:02:03'
    """
    seconds = int(round(ms / 1000.0))
    return f"{seconds // 3600}:{seconds // 60 % 60:02d}:{seconds % 60:02d}"


def parse_scale_outs(expr: str) -> Tuple[int, ...]:
    """Return the scale-outs in an `a..b[,step]` expression or a list.

    >>> parse_scale_outs("2..12,2")
    (2, 4, 6, 8, 10, 12)
    >>> parse_scale_outs("2,4,8")
    (2, 4, 8)
    """
    expr = (expr or "").strip()
    try:
        if ".." in expr:
            bounds, _, step = expr.partition(",")
            low, high = [int(part) for part in bounds.split("..", 1)]
            step_size = int(step) if step else 1
            if step_size < 1 or low > high:
                raise ValueError(expr)
            values = tuple(range(low, high + 1, step_size))
        else:
            values = tuple(sorted({int(part) for part in expr.split(",") if part.strip()}))
    except ValueError:
        raise ConfigError(f"invalid scale-out expression: {expr!r}") from None

    if not values or values[0] < 1:
        raise ConfigError(f"invalid scale-out expression: {expr!r}")
    return values
