"""Donor accounting: usage counts, weight fractions, and their aggregation.

Each donor/recipient pairing carries a usage count and the fraction of the
recipient's base weight allocated to that donor. A recipient's imputed value
is the count- and fraction-weighted sum of its donors' observed values, so a
single donor with count 1 and fraction 1 reproduces plain hot deck, while k
donors at fraction 1/k give the fractional variant. Fractions per recipient
must sum to 1: the recipient's weight is fully allocated.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ..errors import LedgerInvariantError, SchemaError
from ..tabular import Table
from .config import StrategyConfig

FRACTION_TOL = 1e-9


@dataclass
class DonorLedger:
    """Per-column record of which donors served which recipients."""

    target_column: str
    usage_counts: dict[tuple[int, int], int] = field(default_factory=dict)
    weight_fractions: dict[tuple[int, int], float] = field(default_factory=dict)
    base_weights: dict[int, float] = field(default_factory=dict)
    external_donors: bool = False

    def record(self, donor: int, recipient: int, fraction: float, count: int = 1) -> None:
        key = (donor, recipient)
        self.usage_counts[key] = self.usage_counts.get(key, 0) + count
        self.weight_fractions[key] = self.weight_fractions.get(key, 0.0) + fraction
        self.base_weights.setdefault(recipient, 1.0)

    def recipients(self) -> list[int]:
        return sorted({j for _, j in self.usage_counts})

    def donors_for(self, recipient: int) -> list[tuple[int, int, float]]:
        """Sorted (donor, count, fraction) triples for one recipient."""
        return sorted(
            (i, self.usage_counts[(i, j)], self.weight_fractions[(i, j)])
            for (i, j) in self.usage_counts
            if j == recipient
        )

    def total_usage(self, donor: int) -> int:
        return sum(c for (i, _), c in self.usage_counts.items() if i == donor)

    def is_empty(self) -> bool:
        return not self.usage_counts

    def validate(self) -> None:
        for key, count in self.usage_counts.items():
            if count < 0:
                raise LedgerInvariantError(f"negative usage count at {key}")
        for j in self.recipients():
            total = sum(f for (_, r), f in self.weight_fractions.items() if r == j)
            if abs(total - 1.0) > FRACTION_TOL:
                raise LedgerInvariantError(
                    f"recipient {j}: weight fractions sum to {total!r}, expected 1"
                )

    def to_json_dict(self) -> dict:
        return {
            "target_column": self.target_column,
            "external_donors": self.external_donors,
            "base_weights": {str(j): w for j, w in sorted(self.base_weights.items())},
            "recipients": {
                str(j): [
                    {"donor": i, "count": c, "fraction": f}
                    for i, c, f in self.donors_for(j)
                ]
                for j in self.recipients()
            },
        }

    @classmethod
    def from_json_dict(cls, payload: Mapping) -> "DonorLedger":
        ledger = cls(
            target_column=payload["target_column"],
            external_donors=payload.get("external_donors", False),
        )
        for j_str, entries in payload.get("recipients", {}).items():
            j = int(j_str)
            for entry in entries:
                key = (entry["donor"], j)
                ledger.usage_counts[key] = entry["count"]
                ledger.weight_fractions[key] = entry["fraction"]
        for j_str, w in payload.get("base_weights", {}).items():
            ledger.base_weights[int(j_str)] = w
        return ledger

    def digest(self) -> str:
        canonical = json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def aggregate_donor_weighted(ledger: DonorLedger, values: Sequence) -> dict[int, float]:
    """Recompute each recipient's imputed value from the ledger.

    ``values`` is the donor-side column (the target column itself for hot
    deck, the reference column for cold deck); every donor index must hold a
    present numeric value there.
    """
    ledger.validate()
    out: dict[int, float] = {}
    for j in ledger.recipients():
        total = 0.0
        for i, count, fraction in ledger.donors_for(j):
            if i < 0 or i >= len(values) or values[i] is None:
                raise LedgerInvariantError(
                    f"donor row {i} for recipient {j} has no observed value"
                )
            y = values[i]
            if not isinstance(y, (int, float)) or isinstance(y, bool):
                raise SchemaError(
                    "donor-weighted aggregation is defined for numeric targets only"
                )
            total += count * fraction * y
        out[j] = total
    return out


@dataclass(frozen=True)
class DonorContribution:
    donor: int
    observed: object
    fraction: float


@dataclass(frozen=True)
class ImputedValue:
    """Provenance for one filled cell."""

    recipient: int
    column: str
    value: object
    donors: tuple[DonorContribution, ...]
    method: str
    note: str | None = None

    def to_json_dict(self) -> dict:
        out = {
            "row": self.recipient,
            "column": self.column,
            "value": self.value,
            "method": self.method,
            "donors": [
                {"row": d.donor, "y": d.observed, "w": d.fraction} for d in self.donors
            ],
        }
        if self.note:
            out["note"] = self.note
        return out


@dataclass(frozen=True)
class ImputationResult:
    """Completed table plus donor ledger and per-cell provenance."""

    table: Table
    ledger: DonorLedger
    log: tuple[ImputedValue, ...]
    strategy: StrategyConfig
    rng_seed: int

    def to_json_dict(self) -> dict:
        cells = sorted(self.log, key=lambda v: (v.column, v.recipient))
        return {
            "strategy": self.strategy.to_json_dict(),
            "seed": self.rng_seed,
            "cells": [v.to_json_dict() for v in cells],
            "ledger": self.ledger.to_json_dict(),
        }

    def to_json(self, *, indent: int | None = None) -> str:
        return json.dumps(self.to_json_dict(), indent=indent, sort_keys=True)


def build_result(
    table: Table,
    target: str,
    updates: Mapping[int, object],
    ledger: DonorLedger,
    log: Sequence[ImputedValue],
    strategy: StrategyConfig,
) -> ImputationResult:
    """Apply cell updates to the target column and bundle the result."""
    col = table.column(target)
    new_table = table.with_column(col.replace_cells(dict(updates))) if updates else table
    return ImputationResult(
        table=new_table,
        ledger=ledger,
        log=tuple(sorted(log, key=lambda v: v.recipient)),
        strategy=strategy,
        rng_seed=strategy.seed,
    )
