"""k-nearest-neighbor imputation over mixed-type predictors.

Nominal predictors are one-hot encoded over their observed category sets;
every encoded dimension is then z-scored against the donor pool before
distances are taken. Donors are complete cases over the target and all
predictors. Ties at the k-th distance break toward the lower row index, and
vote ties break lexicographically, so results are fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import NoDonorError, PoolTooSmallError, SchemaError, UnimputableRowError
from ..tabular import ColumnKind, Table, partition
from .config import Distance, Fallback, Method, StrategyConfig
from .ledger import (
    DonorContribution,
    DonorLedger,
    ImputationResult,
    ImputedValue,
    aggregate_donor_weighted,
    build_result,
)
from .simple import observed_mean, observed_mode


@dataclass(frozen=True)
class _Encoder:
    """Maps a row's predictor cells onto the flat feature vector."""

    predictors: tuple[str, ...]
    categories: dict[str, tuple[str, ...]]
    n_dims: int

    def encode(self, table: Table, row: int, substitutions: dict[str, object]) -> np.ndarray:
        out = np.zeros(self.n_dims)
        pos = 0
        for name in self.predictors:
            col = table.column(name)
            value = col.values[row]
            if value is None:
                value = substitutions[name]
            if col.kind is ColumnKind.NUMERIC:
                out[pos] = float(value)
                pos += 1
            else:
                cats = self.categories[name]
                for c in cats:
                    out[pos] = 1.0 if value == c else 0.0
                    pos += 1
        return out


def build_encoder(table: Table, predictors: Sequence[str]) -> _Encoder:
    categories: dict[str, tuple[str, ...]] = {}
    n_dims = 0
    for name in predictors:
        col = table.column(name)
        if col.kind is ColumnKind.NUMERIC:
            n_dims += 1
        else:
            cats = tuple(sorted(set(col.observed_values())))
            if not cats:
                raise NoDonorError(f"nominal predictor {name!r} has no observed categories")
            categories[name] = cats
            n_dims += len(cats)
    return _Encoder(tuple(predictors), categories, n_dims)


def _donor_pool(table: Table, target: str, predictors: Sequence[str]) -> list[int]:
    cols = [table.column(n) for n in [target, *predictors]]
    return [
        i for i in range(table.n_rows)
        if all(c.values[i] is not None for c in cols)
    ]


def nearest_donors(
    donor_matrix: np.ndarray,
    donor_rows: Sequence[int],
    recipient_vector: np.ndarray,
    k: int,
    distance: Distance,
) -> list[int]:
    """Indices (into the original table) of the k nearest donors."""
    diff = donor_matrix - recipient_vector
    if distance is Distance.EUCLIDEAN:
        dists = (diff ** 2).sum(axis=1)
    else:
        dists = np.abs(diff).sum(axis=1)
    order = sorted(range(len(donor_rows)), key=lambda idx: (dists[idx], donor_rows[idx]))
    return [donor_rows[idx] for idx in order[:k]]


def _knn_impute(
    table: Table,
    target: str,
    predictors: Sequence[str],
    config: StrategyConfig,
) -> ImputationResult:
    predictors = list(predictors)
    if not predictors:
        raise SchemaError("knn imputation requires at least one predictor")
    col = table.column(target)
    part = partition(table, target)
    pool = _donor_pool(table, target, predictors)
    if not pool:
        raise NoDonorError(f"knn on {target!r}: no complete-case donors")
    if config.k > len(pool) or len(pool) < config.donor_pool_min:
        raise PoolTooSmallError(
            f"knn on {target!r}: k={config.k} exceeds donor pool of {len(pool)}"
        )

    encoder = build_encoder(table, predictors)
    substitutions: dict[str, object] = {}
    if config.fallback is Fallback.MEAN_MODE:
        for name in predictors:
            pcol = table.column(name)
            substitutions[name] = (
                observed_mean(table, name)
                if pcol.kind is ColumnKind.NUMERIC
                else observed_mode(table, name)
            )
    else:
        unusable = [
            j for j in part.nonrespondent_list()
            if any(table.column(p).values[j] is None for p in predictors)
        ]
        if unusable:
            raise UnimputableRowError(
                f"rows {unusable} have missing predictors and fallback is 'error'",
                rows=unusable,
            )

    donor_matrix = np.vstack([encoder.encode(table, i, substitutions) for i in pool])
    center = donor_matrix.mean(axis=0)
    scale = donor_matrix.std(axis=0)
    scale[scale == 0.0] = 1.0
    donor_z = (donor_matrix - center) / scale

    ledger = DonorLedger(target)
    votes: dict[int, list[int]] = {}
    for j in part.nonrespondent_list():
        z = (encoder.encode(table, j, substitutions) - center) / scale
        donors = nearest_donors(donor_z, pool, z, config.k, config.distance)
        votes[j] = donors
        for i in donors:
            ledger.record(i, j, fraction=1.0 / config.k, count=1)

    numeric = col.kind is ColumnKind.NUMERIC
    if numeric:
        aggregated = aggregate_donor_weighted(ledger, col.values)

    updates: dict[int, object] = {}
    log: list[ImputedValue] = []
    for j in part.nonrespondent_list():
        donors = votes[j]
        contributions = tuple(
            DonorContribution(i, col.values[i], 1.0 / config.k) for i in donors
        )
        if numeric:
            value = aggregated[j]
        else:
            counts: dict[str, int] = {}
            for i in donors:
                label = col.values[i]
                counts[label] = counts.get(label, 0) + 1
            best = max(counts.values())
            value = sorted(lbl for lbl, c in counts.items() if c == best)[0]
        updates[j] = value
        log.append(ImputedValue(j, target, value, contributions, method=config.label))
    return build_result(table, target, updates, ledger, log, config)


def impute_knn(
    table: Table,
    target: str,
    predictors: Sequence[str],
    k: int = 5,
    distance: Distance = Distance.EUCLIDEAN,
    config: StrategyConfig | None = None,
) -> ImputationResult:
    config = config or StrategyConfig(
        Method.KNN, predictors=tuple(predictors), k=k, distance=distance
    )
    return _knn_impute(table, target, predictors, config)


def impute_classification(
    table: Table,
    target: str,
    predictors: Sequence[str],
    k: int = 5,
    config: StrategyConfig | None = None,
) -> ImputationResult:
    """Majority-vote nearest-neighbor classifier for nominal targets."""
    if table.column(target).kind is not ColumnKind.NOMINAL:
        raise SchemaError(
            f"classification imputation needs a nominal target, {target!r} is numeric"
        )
    config = config or StrategyConfig(
        Method.CLASSIFICATION_KNN, predictors=tuple(predictors), k=k
    )
    return _knn_impute(table, target, predictors, config)
