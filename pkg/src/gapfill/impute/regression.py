"""Ordinary least squares fit and regression substitution.

The fit goes through the normal equations; a singular Gram matrix gets one
ridge-jittered retry (lambda = 1e-10) before giving up.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..errors import InsufficientDataError, SchemaError, SingularFitError, UnimputableRowError
from ..tabular import ColumnKind, Table, partition
from .config import Fallback, Method, StrategyConfig
from .ledger import DonorLedger, ImputationResult, ImputedValue, build_result
from .simple import observed_mean

RIDGE_JITTER = 1e-10


@dataclass(frozen=True)
class RegressionModel:
    intercept: float
    coefficients: dict[str, float]
    r_squared: float

    @property
    def predictors(self) -> tuple[str, ...]:
        return tuple(self.coefficients)

    def predict_row(self, values: Mapping[str, float]) -> float:
        yhat = self.intercept
        for name, coef in self.coefficients.items():
            yhat += coef * values[name]
        return yhat


def _check_numeric(table: Table, names: Sequence[str]) -> None:
    for name in names:
        if table.column(name).kind is not ColumnKind.NUMERIC:
            raise SchemaError(f"regression needs numeric columns, {name!r} is nominal")


def complete_rows(table: Table, names: Sequence[str]) -> list[int]:
    """Rows where every listed column is present."""
    cols = [table.column(n) for n in names]
    return [
        i for i in range(table.n_rows)
        if all(c.values[i] is not None for c in cols)
    ]


def fit_ols(table: Table, target: str, predictors: Sequence[str]) -> RegressionModel:
    predictors = list(predictors)
    if not predictors:
        raise SchemaError("fit_ols requires at least one predictor")
    _check_numeric(table, [target] + predictors)
    rows = complete_rows(table, [target] + predictors)
    need = len(predictors) + 1
    if len(rows) < need:
        raise InsufficientDataError(
            f"fit of {target!r} on {len(predictors)} predictors needs >= {need} "
            f"complete rows, got {len(rows)}"
        )
    y = np.asarray([table.column(target).values[i] for i in rows], dtype=float)
    X = np.column_stack(
        [np.ones(len(rows))]
        + [np.asarray([table.column(p).values[i] for i in rows], dtype=float) for p in predictors]
    )
    gram = X.T @ X
    moment = X.T @ y
    try:
        beta = np.linalg.solve(gram, moment)
    except np.linalg.LinAlgError:
        beta = None
    if beta is None or not np.all(np.isfinite(beta)):
        try:
            beta = np.linalg.solve(gram + RIDGE_JITTER * np.eye(gram.shape[0]), moment)
        except np.linalg.LinAlgError:
            beta = None
        if beta is None or not np.all(np.isfinite(beta)):
            raise SingularFitError(
                f"design matrix for {target!r} ~ {predictors} is rank deficient"
            )
    fitted = X @ beta
    sse = float(np.sum((y - fitted) ** 2))
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst > 0:
        r_squared = 1.0 - sse / sst
    else:
        r_squared = 1.0 if sse <= 1e-12 else 0.0
    r_squared = min(1.0, max(0.0, r_squared))
    return RegressionModel(
        intercept=float(beta[0]),
        coefficients={p: float(b) for p, b in zip(predictors, beta[1:])},
        r_squared=r_squared,
    )


def predictor_row(
    table: Table,
    row: int,
    predictors: Sequence[str],
    fallback: Fallback,
    means: Mapping[str, float],
) -> tuple[dict[str, float] | None, bool]:
    """Predictor values for one row; missing cells filled from column means
    under the mean fallback, or reported unusable otherwise."""
    values: dict[str, float] = {}
    substituted = False
    for p in predictors:
        v = table.column(p).values[row]
        if v is None:
            if fallback is Fallback.MEAN_MODE:
                values[p] = means[p]
                substituted = True
            else:
                return None, False
        else:
            values[p] = float(v)
    return values, substituted


def impute_regression(
    table: Table,
    target: str,
    predictors: Sequence[str],
    config: StrategyConfig | None = None,
) -> ImputationResult:
    config = config or StrategyConfig(Method.REGRESSION, predictors=tuple(predictors))
    model = fit_ols(table, target, predictors)
    part = partition(table, target)
    means = {p: observed_mean(table, p) for p in predictors} if config.fallback is Fallback.MEAN_MODE else {}

    updates: dict[int, float] = {}
    log: list[ImputedValue] = []
    unusable: list[int] = []
    for j in part.nonrespondent_list():
        values, substituted = predictor_row(table, j, predictors, config.fallback, means)
        if values is None:
            unusable.append(j)
            continue
        yhat = model.predict_row(values)
        updates[j] = yhat
        note = "predictor-mean-substituted" if substituted else None
        log.append(ImputedValue(j, target, yhat, (), method=config.label, note=note))
    if unusable:
        raise UnimputableRowError(
            f"rows {unusable} have missing predictors and fallback is 'error'", rows=unusable
        )
    return build_result(table, target, updates, DonorLedger(target), log, config)
