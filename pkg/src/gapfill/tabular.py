"""Columnar dataset model: CSV ingestion, missingness profiling, deletion ops.

Cells are either present (a finite float for numeric columns, a string for
nominal ones) or missing, stored as ``None``. Tables are treated as immutable
after construction; every operation returns a new table.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InsufficientDataError, ParseError, SchemaError

DEFAULT_MISSING_TOKENS = frozenset({"", "NA", "?"})


class ColumnKind(str, Enum):
    NUMERIC = "numeric"
    NOMINAL = "nominal"


def _as_kind(value) -> ColumnKind:
    if isinstance(value, ColumnKind):
        return value
    try:
        return ColumnKind(str(value).lower())
    except ValueError:
        raise SchemaError(f"unknown column kind {value!r}") from None


def _parse_numeric(token: str) -> float | None:
    """Parse a CSV token as a finite real number, or None if it is not one."""
    text = token.strip()
    if not text or "_" in text:
        return None
    try:
        value = float(text)
    except ValueError:
        return None
    if not math.isfinite(value):
        return None
    return value


@dataclass(frozen=True)
class Column:
    """One named column; ``values[i] is None`` marks a missing cell."""

    name: str
    kind: ColumnKind
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "kind", _as_kind(self.kind))
        object.__setattr__(self, "values", tuple(self.values))
        if self.kind is ColumnKind.NUMERIC:
            for i, v in enumerate(self.values):
                if v is None:
                    continue
                if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                    raise SchemaError(
                        f"column {self.name!r}: numeric cell at row {i} is {v!r}, "
                        "present numeric values must be finite reals"
                    )
        else:
            for i, v in enumerate(self.values):
                if v is not None and not isinstance(v, str):
                    raise SchemaError(
                        f"column {self.name!r}: nominal cell at row {i} is {v!r}, expected str"
                    )

    def __len__(self) -> int:
        return len(self.values)

    @property
    def n_observed(self) -> int:
        return sum(1 for v in self.values if v is not None)

    @property
    def n_missing(self) -> int:
        return len(self.values) - self.n_observed

    def observed_indices(self) -> list[int]:
        return [i for i, v in enumerate(self.values) if v is not None]

    def missing_indices(self) -> list[int]:
        return [i for i, v in enumerate(self.values) if v is None]

    def observed_values(self) -> list:
        return [v for v in self.values if v is not None]

    def replace_cells(self, updates: Mapping[int, object]) -> "Column":
        """New column with the given row -> value updates applied."""
        values = list(self.values)
        for i, v in updates.items():
            values[i] = v
        return Column(self.name, self.kind, values)


@dataclass(frozen=True)
class Table:
    """Ordered collection of equal-length, uniquely named columns."""

    columns: tuple[Column, ...]

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise SchemaError(f"duplicate column names: {dupes}")
        lengths = {len(c) for c in self.columns}
        if len(lengths) > 1:
            raise SchemaError(f"columns have unequal lengths: {sorted(lengths)}")

    @property
    def n_rows(self) -> int:
        return len(self.columns[0]) if self.columns else 0

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise SchemaError(f"no such column: {name!r}")

    def has_column(self, name: str) -> bool:
        return any(c.name == name for c in self.columns)

    def with_column(self, new: Column) -> "Table":
        """New table with the same-named column swapped out."""
        if not self.has_column(new.name):
            raise SchemaError(f"no such column: {new.name!r}")
        return Table(tuple(new if c.name == new.name else c for c in self.columns))

    def row(self, index: int) -> tuple:
        return tuple(c.values[index] for c in self.columns)

    def select_rows(self, indices: Sequence[int]) -> "Table":
        return Table(
            tuple(
                Column(c.name, c.kind, [c.values[i] for i in indices])
                for c in self.columns
            )
        )

    def to_json_dict(self) -> dict:
        return {
            "n_rows": self.n_rows,
            "columns": [
                {"name": c.name, "kind": c.kind.value, "values": list(c.values)}
                for c in self.columns
            ],
        }

    @classmethod
    def from_json_dict(cls, payload: Mapping) -> "Table":
        return cls(
            tuple(
                Column(spec["name"], spec["kind"], spec["values"])
                for spec in payload["columns"]
            )
        )


@dataclass(frozen=True)
class IndexPartition:
    """Respondent / nonrespondent row split for one target column."""

    respondents: frozenset[int]
    nonrespondents: frozenset[int]
    target_column: str

    def respondent_list(self) -> list[int]:
        return sorted(self.respondents)

    def nonrespondent_list(self) -> list[int]:
        return sorted(self.nonrespondents)


@dataclass(frozen=True)
class ColumnProfile:
    name: str
    kind: ColumnKind
    n_rows: int
    n_observed: int
    missing_rate: float
    mean: float | None = None
    variance: float | None = None
    mode: str | None = None
    mode_tied: bool = False
    category_counts: tuple[tuple[str, int], ...] = field(default_factory=tuple)

    @property
    def n_missing(self) -> int:
        return self.n_rows - self.n_observed

    def to_json_dict(self) -> dict:
        out = {
            "name": self.name,
            "kind": self.kind.value,
            "n_rows": self.n_rows,
            "n_observed": self.n_observed,
            "n_missing": self.n_missing,
            "missing_rate": self.missing_rate,
        }
        if self.kind is ColumnKind.NUMERIC:
            out["mean"] = self.mean
            out["variance"] = self.variance
        else:
            out["mode"] = self.mode
            out["mode_tied"] = self.mode_tied
            out["category_counts"] = {k: v for k, v in self.category_counts}
        return out


@dataclass(frozen=True)
class PairwiseStats:
    n_pairs: int
    covariance: float
    correlation: float | None


def parse_csv(
    text: str | bytes,
    *,
    missing_tokens: Iterable[str] | None = None,
    has_header: bool = True,
    kind_overrides: Mapping[str, str | ColumnKind] | None = None,
) -> Table:
    """Parse RFC-4180 CSV text into a Table.

    Cells exactly matching one of ``missing_tokens`` become missing. A column
    is inferred numeric iff every present cell parses as a finite real number;
    ``kind_overrides`` forces a kind per column name. Columns with no present
    cells default to nominal.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    tokens = DEFAULT_MISSING_TOKENS if missing_tokens is None else frozenset(missing_tokens)
    overrides = {k: _as_kind(v) for k, v in (kind_overrides or {}).items()}

    rows = list(csv.reader(io.StringIO(text)))
    # a blank line is a single empty field, not a zero-field row
    rows = [r if r else [""] for r in rows]
    if not rows:
        raise ParseError("empty input")

    if has_header:
        header = [h.strip() for h in rows[0]]
        body = rows[1:]
        first_data_row = 2
    else:
        header = [f"c{i + 1}" for i in range(len(rows[0]))]
        body = rows
        first_data_row = 1

    if len(set(header)) != len(header):
        dupes = sorted({h for h in header if header.count(h) > 1})
        raise SchemaError(f"duplicate header names: {dupes}")
    unknown = sorted(set(overrides) - set(header))
    if unknown:
        raise SchemaError(f"kind override for unknown columns: {unknown}")

    n_cols = len(header)
    for offset, row in enumerate(body):
        if len(row) != n_cols:
            raise ParseError(f"ragged row {first_data_row + offset}")

    raw_cols: list[list[str | None]] = [[] for _ in range(n_cols)]
    for row in body:
        for j, cell in enumerate(row):
            raw_cols[j].append(None if cell in tokens else cell)

    columns = []
    for name, raw in zip(header, raw_cols):
        parsed = [None if v is None else _parse_numeric(v) for v in raw]
        bad_rows = [i for i, (v, p) in enumerate(zip(raw, parsed)) if v is not None and p is None]
        any_present = any(v is not None for v in raw)
        inferred = ColumnKind.NUMERIC if any_present and not bad_rows else ColumnKind.NOMINAL
        kind = overrides.get(name, inferred)
        if kind is ColumnKind.NUMERIC:
            if bad_rows:
                i = bad_rows[0]
                raise ParseError(
                    f"column {name!r} forced numeric but row {first_data_row + i} "
                    f"holds non-numeric value {raw[i]!r}"
                )
            columns.append(Column(name, kind, parsed))
        else:
            columns.append(Column(name, kind, raw))
    return Table(tuple(columns))


def format_cell(value, kind: ColumnKind) -> str:
    if value is None:
        return ""
    if kind is ColumnKind.NUMERIC:
        if float(value).is_integer():
            return str(int(value))
        return repr(float(value))
    return str(value)


def write_csv(table: Table) -> str:
    """Serialize a table back to CSV; missing cells become empty fields."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.column_names)
    for i in range(table.n_rows):
        writer.writerow([format_cell(c.values[i], c.kind) for c in table.columns])
    return buf.getvalue()


def profile(table: Table) -> list[ColumnProfile]:
    """One deterministic profile per column, over present cells only."""
    if not table.columns:
        raise SchemaError("cannot profile a table with no columns")
    profiles = []
    n = table.n_rows
    for col in table.columns:
        observed = col.observed_values()
        n_obs = len(observed)
        missing_rate = (n - n_obs) / n if n else 0.0
        if col.kind is ColumnKind.NUMERIC:
            arr = np.asarray(observed, dtype=float)
            mean = float(arr.mean()) if n_obs else None
            variance = float(arr.var(ddof=1)) if n_obs >= 2 else None
            profiles.append(
                ColumnProfile(col.name, col.kind, n, n_obs, missing_rate, mean=mean, variance=variance)
            )
        else:
            counts: dict[str, int] = {}
            for v in observed:
                counts[v] = counts.get(v, 0) + 1
            if counts:
                best = max(counts.values())
                tied = sorted(k for k, c in counts.items() if c == best)
                mode, mode_tied = tied[0], len(tied) > 1
            else:
                mode, mode_tied = None, False
            profiles.append(
                ColumnProfile(
                    col.name, col.kind, n, n_obs, missing_rate,
                    mode=mode, mode_tied=mode_tied,
                    category_counts=tuple(sorted(counts.items())),
                )
            )
    return profiles


def profiles_to_json(profiles: Sequence[ColumnProfile], *, indent: int | None = None) -> str:
    doc = {"columns": [p.to_json_dict() for p in profiles]}
    return json.dumps(doc, indent=indent, sort_keys=True)


def partition(table: Table, target: str) -> IndexPartition:
    """Split row indices by the target column's missingness mask."""
    col = table.column(target)
    respondents = frozenset(col.observed_indices())
    nonrespondents = frozenset(col.missing_indices())
    return IndexPartition(respondents, nonrespondents, target)


def delete_listwise(table: Table) -> Table:
    """Complete-case analysis: keep only rows with no missing cell."""
    keep = [
        i for i in range(table.n_rows)
        if all(c.values[i] is not None for c in table.columns)
    ]
    return table.select_rows(keep)


def delete_pairwise_stats(table: Table, col_a: str, col_b: str) -> PairwiseStats:
    """Covariance/correlation over rows where both columns are present."""
    a, b = table.column(col_a), table.column(col_b)
    for c in (a, b):
        if c.kind is not ColumnKind.NUMERIC:
            raise SchemaError(f"pairwise statistics need numeric columns, {c.name!r} is nominal")
    pairs = [
        (a.values[i], b.values[i])
        for i in range(table.n_rows)
        if a.values[i] is not None and b.values[i] is not None
    ]
    if len(pairs) < 2:
        raise InsufficientDataError(
            f"pairwise stats for ({col_a!r}, {col_b!r}) need >= 2 complete pairs, got {len(pairs)}"
        )
    xs = np.asarray([p[0] for p in pairs], dtype=float)
    ys = np.asarray([p[1] for p in pairs], dtype=float)
    cov = float(np.cov(xs, ys, ddof=1)[0, 1])
    sx, sy = float(xs.std(ddof=1)), float(ys.std(ddof=1))
    correlation = cov / (sx * sy) if sx > 0 and sy > 0 else None
    return PairwiseStats(len(pairs), cov, correlation)
