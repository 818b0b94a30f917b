"""Mean and mode substitution."""

from __future__ import annotations

import numpy as np

from ..errors import NoDonorError, SchemaError
from ..tabular import ColumnKind, Table, partition
from .config import Method, StrategyConfig
from .ledger import DonorLedger, ImputationResult, ImputedValue, build_result


def observed_mean(table: Table, column: str) -> float:
    col = table.column(column)
    if col.kind is not ColumnKind.NUMERIC:
        raise SchemaError(f"mean substitution needs a numeric column, {column!r} is nominal")
    observed = col.observed_values()
    if not observed:
        raise NoDonorError(f"column {column!r} has no observed values")
    return float(np.mean(observed))


def observed_mode(table: Table, column: str) -> str:
    """Most frequent observed category, lexicographic tie-break."""
    col = table.column(column)
    if col.kind is not ColumnKind.NOMINAL:
        raise SchemaError(f"mode substitution needs a nominal column, {column!r} is numeric")
    counts: dict[str, int] = {}
    for v in col.observed_values():
        counts[v] = counts.get(v, 0) + 1
    if not counts:
        raise NoDonorError(f"column {column!r} has no observed values")
    best = max(counts.values())
    return sorted(k for k, c in counts.items() if c == best)[0]


def impute_mean(table: Table, target: str, config: StrategyConfig | None = None) -> ImputationResult:
    config = config or StrategyConfig(Method.MEAN)
    fill = observed_mean(table, target)
    part = partition(table, target)
    updates = {j: fill for j in part.nonrespondent_list()}
    log = [
        ImputedValue(j, target, fill, (), method=config.label)
        for j in part.nonrespondent_list()
    ]
    return build_result(table, target, updates, DonorLedger(target), log, config)


def impute_mode(table: Table, target: str, config: StrategyConfig | None = None) -> ImputationResult:
    config = config or StrategyConfig(Method.MODE)
    fill = observed_mode(table, target)
    part = partition(table, target)
    updates = {j: fill for j in part.nonrespondent_list()}
    log = [
        ImputedValue(j, target, fill, (), method=config.label)
        for j in part.nonrespondent_list()
    ]
    return build_result(table, target, updates, DonorLedger(target), log, config)
