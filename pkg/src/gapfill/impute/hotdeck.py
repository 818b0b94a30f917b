"""Random hot deck and cold deck donor imputation.

Donor draws use numpy's seeded PCG64 generator, so a (table, seed) pair maps
to the same donors on every platform.
"""

from __future__ import annotations

import numpy as np

from ..errors import NoDonorError, SchemaError
from ..tabular import ColumnKind, Table, partition
from .config import Method, StrategyConfig
from .ledger import (
    DonorContribution,
    DonorLedger,
    ImputationResult,
    ImputedValue,
    aggregate_donor_weighted,
    build_result,
)


def impute_hot_deck_random(
    table: Table,
    target: str,
    seed: int = 0,
    config: StrategyConfig | None = None,
) -> ImputationResult:
    """Each missing cell takes the observed value of one uniformly drawn
    respondent; the ledger records a single full-weight donor per recipient."""
    config = config or StrategyConfig(Method.HOT_DECK_RANDOM, seed=seed)
    part = partition(table, target)
    pool = part.respondent_list()
    if len(pool) < config.donor_pool_min or not pool:
        raise NoDonorError(
            f"hot deck on {target!r}: donor pool has {len(pool)} rows, "
            f"need >= {max(1, config.donor_pool_min)}"
        )
    col = table.column(target)
    rng = np.random.default_rng(config.seed)

    ledger = DonorLedger(target)
    for j in part.nonrespondent_list():
        donor = pool[int(rng.integers(len(pool)))]
        ledger.record(donor, j, fraction=1.0, count=1)

    numeric = col.kind is ColumnKind.NUMERIC
    if numeric:
        aggregated = aggregate_donor_weighted(ledger, col.values)

    updates: dict[int, object] = {}
    log: list[ImputedValue] = []
    for j in part.nonrespondent_list():
        (donor, _, fraction), = ledger.donors_for(j)
        observed = col.values[donor]
        value = aggregated[j] if numeric else observed
        updates[j] = value
        log.append(
            ImputedValue(
                j, target, value,
                (DonorContribution(donor, observed, fraction),),
                method=config.label,
            )
        )
    return build_result(table, target, updates, ledger, log, config)


def impute_cold_deck(
    table: Table,
    target: str,
    reference: Table,
    seed: int = 0,
    config: StrategyConfig | None = None,
) -> ImputationResult:
    """Like random hot deck, but donors come from an external reference table;
    ledger donor indices address reference rows and are flagged external."""
    config = config or StrategyConfig(Method.COLD_DECK, seed=seed)
    col = table.column(target)
    if not reference.has_column(target):
        raise NoDonorError(f"reference table has no column {target!r}")
    ref_col = reference.column(target)
    if ref_col.kind is not col.kind:
        raise SchemaError(
            f"reference column {target!r} is {ref_col.kind.value}, table column is {col.kind.value}"
        )
    pool = ref_col.observed_indices()
    if len(pool) < config.donor_pool_min or not pool:
        raise NoDonorError(
            f"cold deck on {target!r}: reference pool has {len(pool)} observed rows"
        )
    part = partition(table, target)
    rng = np.random.default_rng(config.seed)

    ledger = DonorLedger(target, external_donors=True)
    for j in part.nonrespondent_list():
        donor = pool[int(rng.integers(len(pool)))]
        ledger.record(donor, j, fraction=1.0, count=1)

    numeric = col.kind is ColumnKind.NUMERIC
    if numeric:
        aggregated = aggregate_donor_weighted(ledger, ref_col.values)

    updates: dict[int, object] = {}
    log: list[ImputedValue] = []
    for j in part.nonrespondent_list():
        (donor, _, fraction), = ledger.donors_for(j)
        observed = ref_col.values[donor]
        value = aggregated[j] if numeric else observed
        updates[j] = value
        log.append(
            ImputedValue(
                j, target, value,
                (DonorContribution(donor, observed, fraction),),
                method=config.label, note="external-donor",
            )
        )
    return build_result(table, target, updates, ledger, log, config)
