"""Predictive mean matching: regression-guided hot deck.

Fit the target on its predictors over respondents, compute predicted means
for donors and recipients alike, then give each recipient the observed value
of the donor whose predicted mean lies closest to its own. Recipients the
model cannot score (missing predictors, or no fit at all) fall back to mean
substitution and are flagged in the log.
"""

from __future__ import annotations

from typing import Sequence

from ..errors import (
    InsufficientDataError,
    NoDonorError,
    SingularFitError,
    UnimputableRowError,
)
from ..tabular import Table, partition
from .config import Fallback, Method, StrategyConfig
from .ledger import (
    DonorContribution,
    DonorLedger,
    ImputationResult,
    ImputedValue,
    aggregate_donor_weighted,
    build_result,
)
from .regression import fit_ols
from .simple import observed_mean

FALLBACK_NOTE = "fallback-mean"


def match_donor(predicted_recipient: float, donor_predictions: Sequence[tuple[int, float]]) -> int:
    """Donor row whose predicted mean is nearest; ties go to the lower row."""
    best_row = -1
    best_gap = None
    for row, yhat in donor_predictions:
        gap = abs(predicted_recipient - yhat)
        if best_gap is None or gap < best_gap or (gap == best_gap and row < best_row):
            best_row, best_gap = row, gap
    return best_row


def impute_pmm(
    table: Table,
    target: str,
    predictors: Sequence[str],
    config: StrategyConfig | None = None,
) -> ImputationResult:
    config = config or StrategyConfig(Method.PMM, predictors=tuple(predictors))
    part = partition(table, target)
    if not part.respondents:
        raise NoDonorError(f"pmm on {target!r}: no observed values to donate")
    col = table.column(target)

    model = None
    fit_error = None
    try:
        model = fit_ols(table, target, predictors)
    except (InsufficientDataError, SingularFitError) as exc:
        if config.fallback is Fallback.ERROR:
            raise
        fit_error = exc

    def predict(row: int) -> float | None:
        if model is None:
            return None
        values = {}
        for p in predictors:
            v = table.column(p).values[row]
            if v is None:
                return None
            values[p] = float(v)
        return model.predict_row(values)

    donor_predictions = []
    for i in part.respondent_list():
        yhat = predict(i)
        if yhat is not None:
            donor_predictions.append((i, yhat))

    ledger = DonorLedger(target)
    fallback_rows: list[int] = []
    chosen: dict[int, int] = {}
    for j in part.nonrespondent_list():
        yhat_j = predict(j)
        if yhat_j is None or not donor_predictions:
            fallback_rows.append(j)
            continue
        donor = match_donor(yhat_j, donor_predictions)
        chosen[j] = donor
        ledger.record(donor, j, fraction=1.0, count=1)

    if fallback_rows and config.fallback is Fallback.ERROR:
        reason = f"fit failed ({fit_error})" if fit_error else "missing predictors"
        raise UnimputableRowError(
            f"pmm cannot score rows {fallback_rows}: {reason}", rows=fallback_rows
        )

    aggregated = aggregate_donor_weighted(ledger, col.values)
    updates: dict[int, object] = {}
    log: list[ImputedValue] = []
    for j, donor in chosen.items():
        value = aggregated[j]
        updates[j] = value
        log.append(
            ImputedValue(
                j, target, value,
                (DonorContribution(donor, col.values[donor], 1.0),),
                method=config.label,
            )
        )
    if fallback_rows:
        fill = observed_mean(table, target)
        for j in fallback_rows:
            updates[j] = fill
            log.append(
                ImputedValue(j, target, fill, (), method=config.label, note=FALLBACK_NOTE)
            )
    return build_result(table, target, updates, ledger, log, config)
