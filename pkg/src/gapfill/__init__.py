"""gapfill: missing-data profiling, imputation, and benchmarking.

The library half exposes a columnar table model, a catalog of imputers with
full donor accounting, a mask-and-score evaluation harness, and an in-process
agent platform that orchestrates per-column strategy tournaments. The CLI
half (``gapfill profile|impute|benchmark|pipeline``) drives the same code and
renders figures next to its delimited outputs.
"""

from .amputation import (
    GroundTruth,
    MaskSpec,
    Mechanism,
    ScoreReport,
    ampute,
    run_trials,
    score,
)
from .errors import GapfillError
from .impute import (
    Distance,
    DonorLedger,
    Fallback,
    GaussianParams,
    ImputationResult,
    ImputedValue,
    Method,
    RegressionModel,
    StrategyConfig,
    aggregate_donor_weighted,
    apply_strategy,
    em_gaussian,
    em_impute,
    fit_ols,
    impute_classification,
    impute_cold_deck,
    impute_em,
    impute_hot_deck_random,
    impute_knn,
    impute_mean,
    impute_mode,
    impute_pmm,
    impute_regression,
)
from .pipeline import (
    PipelinePlan,
    PipelineOutcome,
    SelectionReport,
    TournamentSettings,
    assemble_report,
    load_plan,
    run_pipeline,
)
from .tabular import (
    Column,
    ColumnKind,
    ColumnProfile,
    IndexPartition,
    Table,
    delete_listwise,
    delete_pairwise_stats,
    parse_csv,
    partition,
    profile,
    write_csv,
)

__version__ = "0.1.0"

__all__ = [
    "Column",
    "ColumnKind",
    "ColumnProfile",
    "Distance",
    "DonorLedger",
    "Fallback",
    "GapfillError",
    "GaussianParams",
    "GroundTruth",
    "ImputationResult",
    "ImputedValue",
    "IndexPartition",
    "MaskSpec",
    "Mechanism",
    "Method",
    "PipelineOutcome",
    "PipelinePlan",
    "RegressionModel",
    "ScoreReport",
    "SelectionReport",
    "StrategyConfig",
    "Table",
    "TournamentSettings",
    "aggregate_donor_weighted",
    "ampute",
    "apply_strategy",
    "assemble_report",
    "delete_listwise",
    "delete_pairwise_stats",
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
    "load_plan",
    "parse_csv",
    "partition",
    "profile",
    "run_pipeline",
    "run_trials",
    "score",
    "write_csv",
]
