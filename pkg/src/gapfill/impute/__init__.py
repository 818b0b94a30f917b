"""Missing-value treatments: one callable per method plus a config dispatch."""

from __future__ import annotations

from ..errors import SchemaError
from ..tabular import Table
from .config import Distance, Fallback, Method, StrategyConfig
from .em import GaussianParams, em_gaussian, em_impute, impute_em
from .hotdeck import impute_cold_deck, impute_hot_deck_random
from .ledger import (
    DonorContribution,
    DonorLedger,
    ImputationResult,
    ImputedValue,
    aggregate_donor_weighted,
)
from .neighbors import impute_classification, impute_knn
from .pmm import impute_pmm
from .regression import RegressionModel, fit_ols, impute_regression
from .simple import impute_mean, impute_mode

__all__ = [
    "Distance",
    "DonorContribution",
    "DonorLedger",
    "Fallback",
    "GaussianParams",
    "ImputationResult",
    "ImputedValue",
    "Method",
    "RegressionModel",
    "StrategyConfig",
    "aggregate_donor_weighted",
    "apply_strategy",
    "em_gaussian",
    "em_impute",
    "fit_ols",
    "impute_classification",
    "impute_cold_deck",
    "impute_em",
    "impute_hot_deck_random",
    "impute_knn",
    "impute_mean",
    "impute_mode",
    "impute_pmm",
    "impute_regression",
]


def apply_strategy(
    table: Table,
    target: str,
    config: StrategyConfig,
    reference: Table | None = None,
) -> ImputationResult:
    """Run the configured imputer against one target column."""
    method = config.method
    if method is Method.MEAN:
        return impute_mean(table, target, config)
    if method is Method.MODE:
        return impute_mode(table, target, config)
    if method is Method.REGRESSION:
        return impute_regression(table, target, config.predictors, config)
    if method is Method.HOT_DECK_RANDOM:
        return impute_hot_deck_random(table, target, config.seed, config)
    if method is Method.COLD_DECK:
        if reference is None:
            raise SchemaError("cold deck imputation requires a reference table")
        return impute_cold_deck(table, target, reference, config.seed, config)
    if method is Method.KNN:
        return impute_knn(table, target, config.predictors, config.k, config.distance, config)
    if method is Method.PMM:
        return impute_pmm(table, target, config.predictors, config)
    if method is Method.CLASSIFICATION_KNN:
        return impute_classification(table, target, config.predictors, config.k, config)
    if method is Method.EM_GAUSSIAN:
        return impute_em(table, target, config.predictors, config)
    raise SchemaError(f"unhandled method {method!r}")
