"""Strategy configuration shared by every imputer and the pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

from ..errors import SchemaError


class Method(str, Enum):
    MEAN = "mean"
    MODE = "mode"
    REGRESSION = "regression"
    HOT_DECK_RANDOM = "hotdeck"
    COLD_DECK = "colddeck"
    KNN = "knn"
    PMM = "pmm"
    CLASSIFICATION_KNN = "knn_classify"
    EM_GAUSSIAN = "em"


class Distance(str, Enum):
    EUCLIDEAN = "euclidean"
    MANHATTAN = "manhattan"


class Fallback(str, Enum):
    MEAN_MODE = "mean_mode"
    ERROR = "error"


_NEEDS_PREDICTORS = {Method.REGRESSION, Method.PMM, Method.KNN, Method.CLASSIFICATION_KNN}


@dataclass(frozen=True)
class StrategyConfig:
    """Full description of one imputation run; hashable and serializable.

    ``label`` names the strategy in reports and the agent directory; it
    defaults to the method name so two differently tuned variants of the
    same method can still compete in one tournament.
    """

    method: Method
    predictors: tuple[str, ...] = ()
    k: int = 5
    distance: Distance = Distance.EUCLIDEAN
    donor_pool_min: int = 1
    fallback: Fallback = Fallback.MEAN_MODE
    seed: int = 0
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "distance", Distance(self.distance))
        object.__setattr__(self, "fallback", Fallback(self.fallback))
        object.__setattr__(self, "predictors", tuple(self.predictors))
        if not self.label:
            object.__setattr__(self, "label", self.method.value)
        if self.k < 1:
            raise SchemaError(f"k must be >= 1, got {self.k}")
        if self.donor_pool_min < 1:
            raise SchemaError(f"donor_pool_min must be >= 1, got {self.donor_pool_min}")
        if self.method in _NEEDS_PREDICTORS and not self.predictors:
            raise SchemaError(f"method {self.method.value!r} requires a nonempty predictor list")

    def with_seed(self, seed: int) -> "StrategyConfig":
        return replace(self, seed=seed)

    def to_json_dict(self) -> dict:
        return {
            "method": self.method.value,
            "label": self.label,
            "predictors": list(self.predictors),
            "k": self.k,
            "distance": self.distance.value,
            "donor_pool_min": self.donor_pool_min,
            "fallback": self.fallback.value,
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "StrategyConfig":
        return cls(
            method=Method(payload["method"]),
            predictors=tuple(payload.get("predictors", ())),
            k=payload.get("k", 5),
            distance=Distance(payload.get("distance", "euclidean")),
            donor_pool_min=payload.get("donor_pool_min", 1),
            fallback=Fallback(payload.get("fallback", "mean_mode")),
            seed=payload.get("seed", 0),
            label=payload.get("label", ""),
        )
