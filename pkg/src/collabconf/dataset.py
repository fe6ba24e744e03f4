#!/usr/bin/env python
# coding: utf-8
"""Shared runtime data: schemas, records, TSV files, and encoding.

This module defines:
    - `JobSchema`, the declared layout of a job's shared runtime dataset
    - `RuntimeRecord` and `TrainingSet`, the parsed historical executions
    - the TSV wire format (`parse_tsv`, `serialize_tsv`, `append_record`)
    - the schema file format (`parse_schema`, `serialize_schema`)
    - local/global scenario construction (`local_partitions`)
    - `Encoder`, which turns records into the numeric `FeatureMatrix` that
      every model sees

TSV FORMAT
    UTF-8, tab separated, `\\n` line ends, one header row. Columns are
    `machine_type`, `instance_count`, the job's context features in schema
    order, and `gross_runtime` (milliseconds) last.

SCHEMA FORMAT
    One `key = value` pair per line; `#` starts a comment. `job_name` names
    the job and every `context` line adds a feature as `name:kind` where kind
    is `numeric` or `categorical`. Order of `context` lines is column order.

DATASET SIZE
    The first context feature, when numeric, is the dataset/problem size.
    It stays variable inside a local dataset and is what Ernest scales by.
"""

# native
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, TextIO, Tuple, Union
import hashlib
import math
import operator
import re

# lib
import numpy as np

# pkg
from .errors import DatasetError, MalformedRow, SchemaError, SchemaMismatch

NUMERIC = "numeric"
CATEGORICAL = "categorical"
KINDS = (NUMERIC, CATEGORICAL)

MACHINE_TYPE = "machine_type"
INSTANCE_COUNT = "instance_count"
GROSS_RUNTIME = "gross_runtime"
BASE_COLUMNS = (MACHINE_TYPE, INSTANCE_COUNT, GROSS_RUNTIME)

ROLE_SCALE_OUT = "scale_out"
ROLE_NUMERIC = "numeric"
ROLE_ONEHOT = "onehot"

RE_IDENTIFIER = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\-]*$")
RE_ROW_BREAK = re.compile(r"[\t\r\n]")

Value = Union[float, str]


def format_number(value: float) -> str:
    """Return the shortest text that parses back to exactly `value`.

    >>> format_number(128000.0)
    '128000'
    >>> format_number(0.25)
    '0.25'
    >>> format_number(2e20)
    '2e+20'
    """
    if float(value).is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(float(value))


def parse_number(text: str) -> float:
    """Return a finite real parsed from `text`.

    >>> parse_number("2e10")
    20000000000.0
    >>> parse_number("nan")
    Traceback (most recent call last):
    ...
    ValueError: not a finite number: 'nan'
    """
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"not a finite number: {text!r}")
    return value


@dataclass(frozen=True)
class Feature:
    """Job-specific context feature."""

    name: str
    kind: str = NUMERIC


@dataclass(frozen=True)
class JobSchema:
    """Declared feature layout of a job's shared runtime dataset.

    >>> schema = JobSchema("grep", (Feature("data_size"), Feature("keyword", CATEGORICAL)))
    >>> schema.columns
    ('machine_type', 'instance_count', 'data_size', 'keyword', 'gross_runtime')
    >>> schema.size_feature
    'data_size'
    >>> JobSchema("bad", (Feature("gross_runtime"),))
    Traceback (most recent call last):
    ...
    collabconf.errors.SchemaError: context feature clashes with base column: 'gross_runtime'
    """

    job_name: str
    context_features: Tuple[Feature, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "context_features", tuple(self.context_features))
        if not RE_IDENTIFIER.match(self.job_name or ""):
            raise SchemaError(f"invalid job name: {self.job_name!r}")

        seen = set()
        for feature in self.context_features:
            if not RE_IDENTIFIER.match(feature.name):
                raise SchemaError(f"invalid feature name: {feature.name!r}")
            if feature.name in BASE_COLUMNS:
                raise SchemaError(
                    f"context feature clashes with base column: {feature.name!r}"
                )
            if feature.name in seen:
                raise SchemaError(f"duplicate context feature: {feature.name!r}")
            if feature.kind not in KINDS:
                raise SchemaError(f"unknown kind {feature.kind!r} for {feature.name!r}")
            seen.add(feature.name)

    @property
    def names(self) -> Tuple[str, ...]:
        """Return the context feature names in column order."""
        return tuple(f.name for f in self.context_features)

    @property
    def columns(self) -> Tuple[str, ...]:
        """Return the TSV header columns."""
        return (MACHINE_TYPE, INSTANCE_COUNT) + self.names + (GROSS_RUNTIME,)

    @property
    def size_feature(self) -> Optional[str]:
        """Return the dataset size feature (first context feature, if numeric)."""
        if self.context_features and self.context_features[0].kind == NUMERIC:
            return self.context_features[0].name
        return None

    @property
    def fingerprint(self) -> str:
        """Return a short digest identifying this layout."""
        return hashlib.sha1(serialize_schema(self).encode("utf-8")).hexdigest()[:12]


@dataclass(frozen=True)
class RuntimeRecord:
    """One historical execution of a job."""

    machine_type: str
    instance_count: int
    context: Tuple[Value, ...] = ()
    gross_runtime: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "context", tuple(self.context))
        if not self.machine_type or RE_ROW_BREAK.search(self.machine_type):
            raise DatasetError(f"invalid machine type: {self.machine_type!r}")
        if isinstance(self.instance_count, bool) or int(self.instance_count) != self.instance_count:
            raise DatasetError(f"instance_count must be an integer: {self.instance_count!r}")
        if self.instance_count < 1:
            raise DatasetError(f"instance_count must be >= 1: {self.instance_count}")
        if not math.isfinite(self.gross_runtime) or self.gross_runtime <= 0:
            raise DatasetError(f"gross_runtime must be > 0: {self.gross_runtime}")

    def get(self, schema: JobSchema, name: str) -> Value:
        """Return the value of a context feature by name."""
        return self.context[schema.names.index(name)]


class RecordList(tuple):
    """Like `tuple` except that properties come from the contents.

    >>> records = RecordList([RuntimeRecord("m5.xlarge", 2), RuntimeRecord("c5.xlarge", 4)])
    >>> records.instance_count == (2, 4)
    True
    >>> records.attr(["machine_type"], first=True)
    'm5.xlarge'
    """

    def __getitem__(self, key) -> Union[Any, "RecordList"]:
        """Return an item or a sub-list."""
        val = tuple.__getitem__(self, key)
        return RecordList(val) if isinstance(key, slice) else val

    def __getattr__(self, name) -> "RecordList":
        """Return this attribute of every contained record."""
        if name.startswith("__"):
            raise AttributeError(name)
        return self.attr(name, first=False)

    def attr(self, attrs, first=False) -> Union[Any, "RecordList"]:
        """Return attribute values of the contained records.

        Args:
            attrs (str or list[str]): attributes to extract
            first (bool): get first value or None if there are none (default: False)
        """
        if isinstance(attrs, str):
            attrs = [attrs]

        key = operator.attrgetter(*attrs)
        if first:  # short-circuit
            return key(self[0]) if self else None
        return RecordList([key(item) for item in self])


@dataclass(frozen=True)
class TrainingSet:
    """Immutable collection of records that conform to one schema."""

    schema: JobSchema
    records: RecordList = field(default_factory=RecordList)

    def __post_init__(self):
        records = RecordList(self.records)
        for num, record in enumerate(records, 1):
            problem = conformance_problem(self.schema, record)
            if problem:
                raise SchemaMismatch(f"record {num}: {problem}")
        object.__setattr__(self, "records", records)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def replace(self, records: Iterable[RuntimeRecord]) -> "TrainingSet":
        """Return a training set with the same schema and other records."""
        return TrainingSet(self.schema, RecordList(records))

    def subset(self, indices: Iterable[int]) -> "TrainingSet":
        """Return the records at `indices`, in that order."""
        return self.replace(self.records[i] for i in indices)

    @property
    def runtimes(self) -> np.ndarray:
        """Return the runtimes in milliseconds."""
        return np.array(self.records.gross_runtime, dtype=float)

    def machine_counts(self) -> Dict[str, int]:
        """Return the number of records per machine type."""
        return dict(Counter(self.records.machine_type))


def conformance_problem(schema: JobSchema, record: RuntimeRecord) -> str:
    """Return why `record` does not conform to `schema` (empty if it does)."""
    if len(record.context) != len(schema.context_features):
        return (
            f"expected {len(schema.context_features)} context values, "
            f"got {len(record.context)}"
        )
    for feature, value in zip(schema.context_features, record.context):
        if feature.kind == NUMERIC:
            if isinstance(value, str) or not math.isfinite(value):
                return f"{feature.name} must be a finite number: {value!r}"
        elif not isinstance(value, str) or not value or RE_ROW_BREAK.search(value):
            return f"{feature.name} must be a non-empty label: {value!r}"
    return ""


## schema file


def parse_schema(text: Union[str, TextIO]) -> JobSchema:
    """Return the job schema described by a key-value document.

    >>> schema = parse_schema('''
    ... # K-Means runtime data
    ... job_name = kmeans
    ... context = data_size:numeric
    ... context = k:numeric
    ... ''')
    >>> schema.names
    ('data_size', 'k')
    """
    if hasattr(text, "read"):
        text = text.read()

    job_name, features = "", []
    for num, line in enumerate(text.split("\n"), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SchemaError(f"line {num}: expected `key = value`")

        key, value = [part.strip() for part in line.split("=", 1)]
        if key == "job_name":
            job_name = value
        elif key == "context":
            name, _, kind = value.partition(":")
            features.append(Feature(name.strip(), kind.strip() or NUMERIC))
        else:
            raise SchemaError(f"line {num}: unknown key {key!r}")

    if not job_name:
        raise SchemaError("missing job_name")
    return JobSchema(job_name, tuple(features))


def serialize_schema(schema: JobSchema) -> str:
    """Return the key-value document for `schema`."""
    lines = [f"job_name = {schema.job_name}"]
    lines += [f"context = {f.name}:{f.kind}" for f in schema.context_features]
    return "\n".join(lines) + "\n"


def load_schema(path: Union[str, Path]) -> JobSchema:
    """Read a schema file."""
    return parse_schema(Path(path).read_text(encoding="utf-8"))


## TSV


def parse_row(schema: JobSchema, cells: List[str], line: int) -> RuntimeRecord:
    """Return the record in one split data row."""
    if len(cells) != len(schema.columns):
        raise MalformedRow(line, f"expected {len(schema.columns)} columns, got {len(cells)}")

    try:
        count = int(cells[1])
    except ValueError:
        raise MalformedRow(line, f"instance_count is not an integer: {cells[1]!r}") from None

    context = []
    for feature, cell in zip(schema.context_features, cells[2:-1]):
        if feature.kind == CATEGORICAL:
            if not cell:
                raise MalformedRow(line, f"missing value for {feature.name}")
            context.append(cell)
            continue
        try:
            context.append(parse_number(cell))
        except ValueError:
            raise MalformedRow(line, f"{feature.name} is not a number: {cell!r}") from None

    try:
        runtime = parse_number(cells[-1])
        return RuntimeRecord(cells[0], count, tuple(context), runtime)
    except ValueError:
        raise MalformedRow(line, f"gross_runtime is not a number: {cells[-1]!r}") from None
    except DatasetError as e:
        raise MalformedRow(line, str(e)) from None


def parse_tsv(text: Union[str, TextIO], schema: JobSchema) -> TrainingSet:
    """Return the training set in a TSV document.

    Errors name the line number in the file (the header is line 1).

    >>> schema = JobSchema("sort", (Feature("data_size"),))
    >>> ts = parse_tsv("machine_type\\tinstance_count\\tdata_size\\tgross_runtime\\n"
    ...                "m5.xlarge\\t4\\t2e10\\t128000\\n", schema)
    >>> ts.records.gross_runtime
    (128000.0,)
    """
    if hasattr(text, "read"):
        text = text.read()

    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()  # trailing newline
    lines = [line.rstrip("\r") for line in lines]
    if not lines:
        raise SchemaMismatch("missing header row")

    header = tuple(lines[0].split("\t"))
    if header != schema.columns:
        raise SchemaMismatch(
            f"header {list(header)} does not match schema {list(schema.columns)}"
        )

    records = [
        parse_row(schema, line.split("\t"), num)
        for num, line in enumerate(lines[1:], 2)
    ]
    return TrainingSet(schema, RecordList(records))


def serialize_row(record: RuntimeRecord) -> str:
    """Return one TSV data row (without line end)."""
    cells = [record.machine_type, str(int(record.instance_count))]
    cells += [v if isinstance(v, str) else format_number(v) for v in record.context]
    cells.append(format_number(record.gross_runtime))
    return "\t".join(cells)


def serialize_tsv(ts: TrainingSet) -> str:
    """Return the TSV document for a training set."""
    lines = ["\t".join(ts.schema.columns)]
    lines += [serialize_row(record) for record in ts.records]
    return "\n".join(lines) + "\n"


def load_tsv(path: Union[str, Path], schema: JobSchema) -> TrainingSet:
    """Read a TSV file."""
    return parse_tsv(Path(path).read_text(encoding="utf-8"), schema)


def append_record(path: Union[str, Path], schema: JobSchema, record: RuntimeRecord) -> str:
    """Append a conforming record to a TSV file; return the row written.

    A missing or empty file gets a header first.
    """
    problem = conformance_problem(schema, record)
    if problem:
        raise SchemaMismatch(problem)

    path = Path(path)
    existing = path.read_text(encoding="utf-8") if path.exists() else ""
    prefix = ""
    if not existing:
        prefix = "\t".join(schema.columns) + "\n"
    else:
        header = tuple(existing.split("\n", 1)[0].rstrip("\r").split("\t"))
        if header != schema.columns:
            raise SchemaMismatch(f"header of {path} does not match schema")
        if not existing.endswith("\n"):
            prefix = "\n"

    row = serialize_row(record)
    with path.open("a", encoding="utf-8", newline="") as stream:
        stream.write(f"{prefix}{row}\n")
    return row


## scenarios


def filter_machine_type(ts: TrainingSet, machine_type: str) -> TrainingSet:
    """Return the records executed on `machine_type`, order preserved."""
    return ts.replace(r for r in ts.records if r.machine_type == machine_type)


def local_key(schema: JobSchema, record: RuntimeRecord) -> Tuple[Value, ...]:
    """Return the context that stays fixed within a local dataset."""
    skip = 1 if schema.size_feature else 0
    return record.context[skip:]


def local_groups(ts: TrainingSet) -> List[List[int]]:
    """Return the record indices of every local dataset.

    >>> schema = JobSchema("grep", (Feature("data_size"), Feature("hits")))
    >>> ts = TrainingSet(schema, [RuntimeRecord("m5.xlarge", s, (10.0, h), 1.0)
    ...                           for s, h in [(2, 0.1), (4, 0.5), (8, 0.1)]])
    >>> local_groups(ts)
    [[0, 2], [1]]
    """
    groups: Dict[Tuple[Value, ...], List[int]] = {}
    for idx, record in enumerate(ts.records):
        groups.setdefault(local_key(ts.schema, record), []).append(idx)
    return list(groups.values())


def local_partitions(ts: TrainingSet) -> List[TrainingSet]:
    """Group records into emulated single-user ("local") datasets.

    Records share a group when all their context values agree except the
    dataset size; scale-out always varies. Groups are in order of first
    appearance.
    """
    return [ts.subset(rows) for rows in local_groups(ts)]


## encoding


@dataclass(frozen=True)
class FeatureMatrix:
    """Numeric view of records: one row per record, one role per column."""

    values: np.ndarray
    roles: Tuple[str, ...]
    names: Tuple[str, ...] = ()
    fingerprint: Optional[str] = None
    size_column: Optional[int] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if values.shape[1] != len(self.roles):
            raise ValueError(f"{values.shape[1]} columns but {len(self.roles)} roles")
        if not np.all(np.isfinite(values)):
            raise ValueError("feature matrix contains non-finite values")
        object.__setattr__(self, "values", values)
        if not self.names:
            object.__setattr__(self, "names", tuple(f"x{i}" for i in range(len(self.roles))))

    def __len__(self) -> int:
        return self.values.shape[0]

    @classmethod
    def of(cls, values, scale_out: Optional[int] = None) -> "FeatureMatrix":
        """Return an unfingerprinted matrix of raw numeric columns.

        >>> FeatureMatrix.of([1, 2, 3]).values.shape
        (3, 1)
        """
        values = np.asarray(values, dtype=float)
        width = 1 if values.ndim == 1 else values.shape[1]
        roles = [ROLE_NUMERIC] * width
        if scale_out is not None:
            roles[scale_out] = ROLE_SCALE_OUT
        return cls(values, tuple(roles))

    @property
    def scale_out(self) -> np.ndarray:
        """Return the scale-out column."""
        return self.values[:, self.roles.index(ROLE_SCALE_OUT)]

    @property
    def context(self) -> np.ndarray:
        """Return every column except the scale-out."""
        keep = [i for i, role in enumerate(self.roles) if role != ROLE_SCALE_OUT]
        return self.values[:, keep]

    @property
    def size(self) -> np.ndarray:
        """Return the dataset size column (ones when the job has none)."""
        if self.size_column is None:
            return np.ones(len(self))
        return self.values[:, self.size_column]

    def take(self, rows) -> "FeatureMatrix":
        """Return a matrix with only the given rows."""
        return FeatureMatrix(
            self.values[rows], self.roles, self.names, self.fingerprint, self.size_column
        )


@dataclass(frozen=True)
class Encoder:
    """Numeric encoding learned from a training set.

    Columns are the scale-out, then each context feature in schema order:
    numeric features as one column, categorical features as one-hot blocks
    over the levels seen in training (unseen levels encode as all zeros).
    """

    schema: JobSchema
    levels: Tuple[Tuple[str, ...], ...] = ()

    @classmethod
    def fit(cls, ts: TrainingSet) -> "Encoder":
        """Return an encoder for the categorical levels in `ts`."""
        levels = []
        for idx, feature in enumerate(ts.schema.context_features):
            seen = () if feature.kind == NUMERIC else sorted({r.context[idx] for r in ts.records})
            levels.append(tuple(seen))
        return cls(ts.schema, tuple(levels))

    @property
    def fingerprint(self) -> str:
        """Return a digest of the schema and levels."""
        text = self.schema.fingerprint + repr(self.levels)
        return hashlib.sha1(text.encode("utf-8")).hexdigest()[:12]

    @property
    def names(self) -> Tuple[str, ...]:
        """Return the column names."""
        names = [INSTANCE_COUNT]
        for feature, levels in zip(self.schema.context_features, self.levels):
            if feature.kind == NUMERIC:
                names.append(feature.name)
            else:
                names += [f"{feature.name}={level}" for level in levels]
        return tuple(names)

    @property
    def roles(self) -> Tuple[str, ...]:
        """Return the column roles."""
        roles = [ROLE_SCALE_OUT]
        for feature, levels in zip(self.schema.context_features, self.levels):
            roles += [ROLE_NUMERIC] if feature.kind == NUMERIC else [ROLE_ONEHOT] * len(levels)
        return tuple(roles)

    def row(self, record: RuntimeRecord) -> List[float]:
        """Return the encoded values of one record."""
        row = [float(record.instance_count)]
        for feature, levels, value in zip(
            self.schema.context_features, self.levels, record.context
        ):
            if feature.kind == NUMERIC:
                row.append(float(value))
            else:
                row += [1.0 if value == level else 0.0 for level in levels]
        return row

    def encode(self, records: Union[RuntimeRecord, Iterable[RuntimeRecord]]) -> FeatureMatrix:
        """Return the feature matrix of `records`."""
        if isinstance(records, RuntimeRecord):
            records = [records]
        width = len(self.roles)
        values = np.array([self.row(r) for r in records], dtype=float).reshape(-1, width)
        size_column = 1 if self.schema.size_feature else None
        return FeatureMatrix(values, self.roles, self.names, self.fingerprint, size_column)


def encode(ts: TrainingSet) -> Tuple[Encoder, FeatureMatrix, np.ndarray]:
    """Return the encoder, feature matrix, and runtimes of a training set."""
    encoder = Encoder.fit(ts)
    return encoder, encoder.encode(ts.records), ts.runtimes
