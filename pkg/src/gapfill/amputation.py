"""Controlled masking of complete columns and scoring of imputation quality.

Masking a column we can still see the truth of is the only way to measure an
imputer: hide cells, impute, compare. MCAR masks cells independently; MAR
ties the masking probability to the rank of a fully observed driver column,
rescaled so the expected number of masked cells stays at rate * n_rows.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import (
    AmputationError,
    GapfillError,
    IncompleteImputationError,
    SchemaError,
)
from .impute import ImputationResult, StrategyConfig, apply_strategy
from .tabular import ColumnKind, Table


class Mechanism(str, Enum):
    MCAR = "mcar"
    MAR = "mar"


@dataclass(frozen=True)
class MaskSpec:
    mechanism: Mechanism
    rate: float
    target: str
    driver: str | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mechanism", Mechanism(self.mechanism))
        if not 0.0 < self.rate < 1.0:
            raise SchemaError(f"mask rate must lie strictly in (0, 1), got {self.rate}")
        if self.mechanism is Mechanism.MAR:
            if not self.driver:
                raise SchemaError("MAR masking requires a driver column")
            if self.driver == self.target:
                raise SchemaError("MAR driver must differ from the target column")


@dataclass(frozen=True)
class GroundTruth:
    target: str
    values: dict[int, object]

    def __len__(self) -> int:
        return len(self.values)


def _mask_probabilities(table: Table, spec: MaskSpec) -> np.ndarray:
    n = table.n_rows
    if spec.mechanism is Mechanism.MCAR:
        return np.full(n, spec.rate)
    driver = table.column(spec.driver)
    if driver.kind is not ColumnKind.NUMERIC:
        raise SchemaError(f"MAR driver {spec.driver!r} must be numeric")
    if driver.n_missing:
        raise SchemaError(f"MAR driver {spec.driver!r} must be fully observed")
    ranks = rankdata(np.asarray(driver.values, dtype=float), method="average")
    # sum of ranks is n(n+1)/2, so these sum to rate * n
    probs = 2.0 * spec.rate * ranks / (n + 1)
    return np.clip(probs, 0.0, 1.0)


def ampute(table: Table, spec: MaskSpec) -> tuple[Table, GroundTruth]:
    """Mask the target column per the spec; returns the masked table and the
    hidden values. A draw that would mask every cell is retried once."""
    col = table.column(spec.target)
    if col.n_missing:
        raise SchemaError(f"amputation target {spec.target!r} must be fully observed")
    probs = _mask_probabilities(table, spec)
    rng = np.random.default_rng(spec.seed)
    mask = rng.random(table.n_rows) < probs
    if mask.all():
        mask = rng.random(table.n_rows) < probs
        if mask.all():
            raise AmputationError(
                f"masking {spec.target!r} at rate {spec.rate} hid every cell twice in a row"
            )
    hidden = {i: col.values[i] for i in range(table.n_rows) if mask[i]}
    masked = table.with_column(col.replace_cells({i: None for i in hidden}))
    return masked, GroundTruth(spec.target, hidden)


@dataclass(frozen=True)
class ScoreReport:
    """Metrics over masked cells; aggregate runs also carry mean/sd fields."""

    strategy: str
    n_masked: int
    rmse: float | None = None
    mae: float | None = None
    accuracy: float | None = None
    mechanism: Mechanism | None = None
    rate: float | None = None
    n_trials: int | None = None
    n_failed: int | None = None
    rmse_sd: float | None = None
    mae_sd: float | None = None
    accuracy_sd: float | None = None
    per_trial: tuple["ScoreReport", ...] = field(default_factory=tuple)

    def to_json_dict(self) -> dict:
        out = {
            "strategy": self.strategy,
            "n_masked": self.n_masked,
            "rmse": self.rmse,
            "mae": self.mae,
            "accuracy": self.accuracy,
        }
        if self.n_trials is not None:
            out.update(
                {
                    "mechanism": self.mechanism.value if self.mechanism else None,
                    "rate": self.rate,
                    "trials": self.n_trials,
                    "failed_trials": self.n_failed,
                    "rmse_mean": self.rmse,
                    "rmse_sd": self.rmse_sd,
                    "mae_mean": self.mae,
                    "mae_sd": self.mae_sd,
                    "accuracy_mean": self.accuracy,
                    "accuracy_sd": self.accuracy_sd,
                    "per_trial": [t.to_json_dict() for t in self.per_trial],
                }
            )
        return out

    def to_json(self, *, indent: int | None = None) -> str:
        return json.dumps(self.to_json_dict(), indent=indent, sort_keys=True)


def score(result: ImputationResult, truth: GroundTruth, strategy: str | None = None) -> ScoreReport:
    """RMSE/MAE for numeric targets, exact-match accuracy for nominal ones,
    computed only over the cells the mask hid."""
    col = result.table.column(truth.target)
    still_missing = [i for i in truth.values if col.values[i] is None]
    if still_missing:
        raise IncompleteImputationError(
            f"rows {sorted(still_missing)} of {truth.target!r} are still missing"
        )
    tag = strategy or result.strategy.label
    n = len(truth)
    if n == 0:
        return ScoreReport(tag, 0)
    if col.kind is ColumnKind.NUMERIC:
        errors = np.asarray(
            [col.values[i] - truth.values[i] for i in sorted(truth.values)], dtype=float
        )
        return ScoreReport(
            tag, n,
            rmse=float(np.sqrt(np.mean(errors ** 2))),
            mae=float(np.mean(np.abs(errors))),
        )
    hits = sum(1 for i in truth.values if col.values[i] == truth.values[i])
    return ScoreReport(tag, n, accuracy=hits / n)


def _mean_sd(values: list[float]) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    sd = float(arr.std(ddof=1)) if len(values) >= 2 else 0.0
    return mean, sd


def run_trials(
    table: Table,
    specs: Sequence[MaskSpec],
    strategies: Sequence[StrategyConfig],
    n_trials: int,
    reference: Table | None = None,
) -> list[ScoreReport]:
    """Mask-impute-score tournament: every (spec, strategy) pair runs
    ``n_trials`` times at trial seeds base_seed + trial index, and failures
    count against the strategy instead of aborting the run."""
    reports = []
    for spec in specs:
        for strategy in strategies:
            trials: list[ScoreReport] = []
            n_failed = 0
            for t in range(n_trials):
                trial_seed = spec.seed + t
                masked, truth = ampute(table, replace(spec, seed=trial_seed))
                try:
                    result = apply_strategy(
                        masked, spec.target, strategy.with_seed(trial_seed), reference
                    )
                    trials.append(score(result, truth, strategy.label))
                except GapfillError:
                    n_failed += 1
            rmse_mean, rmse_sd = _mean_sd([t.rmse for t in trials if t.rmse is not None])
            mae_mean, mae_sd = _mean_sd([t.mae for t in trials if t.mae is not None])
            acc_mean, acc_sd = _mean_sd([t.accuracy for t in trials if t.accuracy is not None])
            reports.append(
                ScoreReport(
                    strategy=strategy.label,
                    n_masked=sum(t.n_masked for t in trials),
                    rmse=rmse_mean,
                    mae=mae_mean,
                    accuracy=acc_mean,
                    mechanism=spec.mechanism,
                    rate=spec.rate,
                    n_trials=n_trials,
                    n_failed=n_failed,
                    rmse_sd=rmse_sd,
                    mae_sd=mae_sd,
                    accuracy_sd=acc_sd,
                    per_trial=tuple(trials),
                )
            )
    return reports


def reports_to_csv(reports: Sequence[ScoreReport]) -> str:
    """Flat delimited export of aggregate reports, one strategy per line."""
    lines = ["strategy,mechanism,rate,trials,failed,n_masked,rmse_mean,rmse_sd,mae_mean,mae_sd,accuracy_mean,accuracy_sd"]

    def fmt(v):
        if v is None:
            return ""
        return repr(v) if isinstance(v, float) else str(v)

    for r in reports:
        lines.append(
            ",".join(
                [
                    r.strategy,
                    r.mechanism.value if r.mechanism else "",
                    fmt(r.rate),
                    fmt(r.n_trials),
                    fmt(r.n_failed),
                    fmt(r.n_masked),
                    fmt(r.rmse),
                    fmt(r.rmse_sd),
                    fmt(r.mae),
                    fmt(r.mae_sd),
                    fmt(r.accuracy),
                    fmt(r.accuracy_sd),
                ]
            )
        )
    return "\n".join(lines) + "\n"
