"""Agent-orchestrated preprocessing pipeline.

A Coordinator agent drives three kinds of workers over the platform:
a Profiler (column statistics), an Evaluator (mask-and-score tournaments on
the complete cases of each target column), and one Imputer agent per
candidate strategy, registered in the directory under ``impute/<label>``.
The winner per column is the candidate with the best tournament score;
winners then treat the real column. All cross-agent payloads travel as JSON
message content, never shared references, and every random choice is seeded
by the plan, so a fixed plan reproduces its outputs byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import random
import uuid
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .agents import ENV, AgentContext, AgentId, Message, Performative, Platform
from .amputation import MaskSpec, Mechanism, ScoreReport, run_trials
from .errors import GapfillError, ParseError, PlanError, SchemaError
from .impute import Method, StrategyConfig, apply_strategy
from .tabular import ColumnKind, Table, parse_csv, profile

RATE_CLAMP = (0.05, 0.5)

DEFAULT_CANDIDATES = {
    "numeric": ["mean", "regression", "pmm", "knn", "hotdeck"],
    "nominal": ["mode", "hotdeck", "knn_classify"],
}

_NEEDS_PREDICTORS = {Method.REGRESSION, Method.PMM, Method.KNN, Method.CLASSIFICATION_KNN}
_NUMERIC_ONLY_PREDICTORS = {Method.REGRESSION, Method.PMM, Method.EM_GAUSSIAN}


@dataclass(frozen=True)
class TournamentSettings:
    mechanism: Mechanism = Mechanism.MCAR
    rate: float | None = None
    n_trials: int = 10
    base_seed: int = 0
    driver: str | None = None


@dataclass(frozen=True)
class PipelinePlan:
    input_path: str
    targets: tuple[str, ...] | None = None
    candidates: Mapping[str, Sequence[str]] = field(
        default_factory=lambda: DEFAULT_CANDIDATES
    )
    strategy_params: Mapping[str, Mapping] = field(default_factory=dict)
    tournament: TournamentSettings = TournamentSettings()
    missing_tokens: tuple[str, ...] | None = None
    reference_path: str | None = None
    output_dir: str | None = None
    figures: bool = True

    def __post_init__(self):
        for kind in ("numeric", "nominal"):
            if not self.candidates.get(kind):
                raise PlanError(f"candidate list for {kind} columns must be nonempty")
        if self.tournament.rate is not None and not 0.0 < self.tournament.rate < 1.0:
            raise PlanError(f"tournament rate must lie in (0, 1), got {self.tournament.rate}")
        if self.tournament.n_trials < 1:
            raise PlanError("tournament needs at least one trial")


def load_plan(path: str) -> PipelinePlan:
    """Read a JSON plan document; unknown keys are rejected."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise PlanError(f"plan file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise PlanError(f"plan file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise PlanError("plan document must be a JSON object")
    known = {
        "input", "targets", "candidates", "strategy_params", "tournament",
        "missing_tokens", "reference", "output_dir", "figures",
    }
    unknown = sorted(set(doc) - known)
    if unknown:
        raise PlanError(f"unknown plan keys: {unknown}")
    if "input" not in doc:
        raise PlanError("plan must name an 'input' CSV path")
    tdoc = doc.get("tournament", {})
    t_unknown = sorted(set(tdoc) - {"mechanism", "rate", "trials", "base_seed", "driver"})
    if t_unknown:
        raise PlanError(f"unknown tournament keys: {t_unknown}")
    try:
        tournament = TournamentSettings(
            mechanism=Mechanism(tdoc.get("mechanism", "mcar")),
            rate=tdoc.get("rate"),
            n_trials=tdoc.get("trials", 10),
            base_seed=tdoc.get("base_seed", 0),
            driver=tdoc.get("driver"),
        )
        candidates = {**DEFAULT_CANDIDATES, **doc.get("candidates", {})}
        return PipelinePlan(
            input_path=doc["input"],
            targets=tuple(doc["targets"]) if doc.get("targets") else None,
            candidates={k: list(v) for k, v in candidates.items()},
            strategy_params=doc.get("strategy_params", {}),
            tournament=tournament,
            missing_tokens=tuple(doc["missing_tokens"]) if doc.get("missing_tokens") is not None else None,
            reference_path=doc.get("reference"),
            output_dir=doc.get("output_dir"),
            figures=bool(doc.get("figures", True)),
        )
    except (ValueError, SchemaError) as exc:
        raise PlanError(f"bad plan value: {exc}") from None


@dataclass(frozen=True)
class CandidateOutcome:
    label: str
    report: ScoreReport | None
    failed: bool
    error: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "label": self.label,
            "failed": self.failed,
            "error": self.error,
            "scores": self.report.to_json_dict() if self.report else None,
        }


@dataclass(frozen=True)
class ColumnSelection:
    column: str
    kind: ColumnKind
    status: str  # treated | no-op | untreated
    chosen: str | None
    margin: float | str | None
    candidates: tuple[CandidateOutcome, ...]
    reason: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "column": self.column,
            "kind": self.kind.value,
            "status": self.status,
            "chosen": self.chosen,
            "margin": self.margin,
            "reason": self.reason,
            "candidates": [c.to_json_dict() for c in self.candidates],
        }


@dataclass(frozen=True)
class SelectionReport:
    columns: tuple[ColumnSelection, ...]

    def untreated(self) -> list[str]:
        return [c.column for c in self.columns if c.status == "untreated"]

    def to_json_dict(self) -> dict:
        return {"columns": [c.to_json_dict() for c in self.columns]}


def default_predictors(table: Table, target: str, method: Method) -> tuple[str, ...]:
    numeric_only = method in _NUMERIC_ONLY_PREDICTORS
    names = []
    for col in table.columns:
        if col.name == target:
            continue
        if numeric_only and col.kind is not ColumnKind.NUMERIC:
            continue
        names.append(col.name)
    return tuple(names)


def build_candidate(
    label: str,
    table: Table,
    target: str,
    params: Mapping[str, Mapping],
    seed: int,
) -> StrategyConfig:
    """Materialize a candidate label into a validated StrategyConfig."""
    overrides = dict(params.get(label, {}))
    method = Method(overrides.pop("method", label))
    predictors = tuple(overrides.pop("predictors", ())) or default_predictors(
        table, target, method
    )
    if method in _NEEDS_PREDICTORS and not predictors:
        raise SchemaError(f"{label}: no usable predictor columns for {target!r}")
    keep_predictors = method in _NEEDS_PREDICTORS or method is Method.EM_GAUSSIAN
    return StrategyConfig(
        method=method,
        predictors=predictors if keep_predictors else (),
        label=label,
        seed=seed,
        **overrides,
    )


def select_winner(
    kind: ColumnKind,
    outcomes: Sequence[CandidateOutcome],
    priority: Sequence[str],
) -> tuple[str | None, float | str | None]:
    """Pick the best non-failing candidate: lowest mean RMSE for numeric
    columns, highest mean accuracy for nominal ones. Ties break by the
    priority order; a single survivor is 'uncontested'."""
    scored = []
    for outcome in outcomes:
        if outcome.failed or outcome.report is None:
            continue
        metric = outcome.report.rmse if kind is ColumnKind.NUMERIC else outcome.report.accuracy
        if metric is None:
            continue
        scored.append((outcome.label, metric))
    if not scored:
        return None, None
    rank = {label: i for i, label in enumerate(priority)}
    better = min if kind is ColumnKind.NUMERIC else max
    best_metric = better(m for _, m in scored)
    winners = [label for label, m in scored if m == best_metric]
    chosen = min(winners, key=lambda lbl: rank.get(lbl, len(rank)))
    if len(scored) == 1:
        return chosen, "uncontested"
    others = [m for label, m in scored if label != chosen]
    runner_up = better(others)
    return chosen, abs(runner_up - best_metric)


class _Profiler:
    def __call__(self, ctx: AgentContext, msg: Message) -> None:
        if msg.performative is not Performative.REQUEST:
            return
        ctx.reply(msg, Performative.AGREE)
        table = Table.from_json_dict(msg.payload()["table"])
        profiles = [p.to_json_dict() for p in profile(table)]
        ctx.reply(msg, Performative.INFORM, {"profiles": profiles})


class _Evaluator:
    def __init__(self, reference: Table | None):
        self.reference = reference

    def __call__(self, ctx: AgentContext, msg: Message) -> None:
        if msg.performative is not Performative.REQUEST:
            return
        ctx.reply(msg, Performative.AGREE)
        payload = msg.payload()
        table = Table.from_json_dict(payload["table"])
        spec = MaskSpec(
            mechanism=Mechanism(payload["mechanism"]),
            rate=payload["rate"],
            target=payload["target"],
            driver=payload.get("driver"),
            seed=payload["seed"],
        )
        outcomes = []
        for candidate in payload["candidates"]:
            label = candidate["label"]
            try:
                config = StrategyConfig.from_json_dict(candidate)
                report = run_trials(
                    table, [spec], [config], payload["trials"], self.reference
                )[0]
                failed = report.n_failed == payload["trials"]
                outcomes.append(
                    {
                        "label": label,
                        "failed": failed,
                        "error": "all trials failed" if failed else None,
                        "scores": report.to_json_dict(),
                    }
                )
            except GapfillError as exc:
                outcomes.append(
                    {"label": label, "failed": True, "error": str(exc), "scores": None}
                )
        ctx.reply(msg, Performative.INFORM, {"target": payload["target"], "outcomes": outcomes})


class _Imputer:
    def __init__(self, reference: Table | None):
        self.reference = reference

    def __call__(self, ctx: AgentContext, msg: Message) -> None:
        if msg.performative is not Performative.REQUEST:
            return
        payload = msg.payload()
        table = Table.from_json_dict(payload["table"])
        config = StrategyConfig.from_json_dict(payload["config"])
        ctx.reply(msg, Performative.AGREE)
        try:
            result = apply_strategy(table, payload["target"], config, self.reference)
        except GapfillError as exc:
            ctx.reply(msg, Performative.FAILURE, {"reason": str(exc)})
            return
        ctx.reply(msg, Performative.INFORM, {"result": result.to_json_dict()})


class _Coordinator:
    """State machine driving profile -> per-column tournament -> treatment."""

    def __init__(self, plan: PipelinePlan, table: Table, profiler: AgentId, evaluator: AgentId):
        self.plan = plan
        self.table = table
        self.profiler = profiler
        self.evaluator = evaluator
        self.conversations = random.Random(plan.tournament.base_seed)
        self.profiles: list[dict] = []
        self.queue: list[str] = []
        self.current: str | None = None
        self.current_kind: ColumnKind | None = None
        self.current_candidates: list[StrategyConfig] = []
        self.prevalidated: list[CandidateOutcome] = []
        self.selections: list[ColumnSelection] = []
        self.results: dict[str, dict] = {}
        self.done = False

    def conversation_id(self) -> str:
        return str(uuid.UUID(int=self.conversations.getrandbits(128), version=4))

    def __call__(self, ctx: AgentContext, msg: Message) -> None:
        payload = msg.payload()
        if msg.performative is Performative.REQUEST and payload.get("action") == "run":
            ctx.send(
                self.profiler,
                Performative.REQUEST,
                {"table": self.table.to_json_dict()},
                self.conversation_id(),
            )
            return
        if msg.performative is Performative.AGREE:
            return
        if msg.performative is Performative.FAILURE:
            self._handle_failure(ctx, msg)
            return
        if msg.performative is not Performative.INFORM:
            return
        if msg.sender == self.profiler:
            self.profiles = payload["profiles"]
            self.queue = self._target_columns()
            self._advance(ctx)
        elif msg.sender == self.evaluator:
            self._finish_tournament(ctx, payload)
        elif "result" in payload:
            self._apply_result(ctx, payload["result"])

    def _target_columns(self) -> list[str]:
        by_name = {p["name"]: p for p in self.profiles}
        if self.plan.targets is not None:
            unknown = [t for t in self.plan.targets if t not in by_name]
            if unknown:
                raise SchemaError(f"plan targets not in table: {unknown}")
            return list(self.plan.targets)
        return [c.name for c in self.table.columns if by_name[c.name]["n_missing"] > 0]

    def _profile_of(self, column: str) -> dict:
        return next(p for p in self.profiles if p["name"] == column)

    def _advance(self, ctx: AgentContext) -> None:
        while self.queue:
            column = self.queue.pop(0)
            prof = self._profile_of(column)
            kind = ColumnKind(prof["kind"])
            if prof["n_missing"] == 0:
                self.selections.append(
                    ColumnSelection(column, kind, "no-op", None, None, (), reason="no missing cells")
                )
                continue
            if prof["n_observed"] == 0:
                self.selections.append(
                    ColumnSelection(
                        column, kind, "untreated", None, None, (),
                        reason="no observed values to learn from",
                    )
                )
                continue
            self.current = column
            self.current_kind = kind
            self._start_tournament(ctx, column, kind, prof)
            return
        self._finish(ctx)

    def _start_tournament(self, ctx: AgentContext, column: str, kind: ColumnKind, prof: dict) -> None:
        labels = list(self.plan.candidates["numeric" if kind is ColumnKind.NUMERIC else "nominal"])
        complete = [
            i for i in range(self.table.n_rows)
            if self.table.column(column).values[i] is not None
        ]
        subtable = self.table.select_rows(complete)
        rate = self.plan.tournament.rate
        if rate is None:
            lo, hi = RATE_CLAMP
            rate = min(hi, max(lo, prof["missing_rate"]))
        seed = self.plan.tournament.base_seed
        self.current_candidates = []
        self.prevalidated = []
        for label in labels:
            try:
                self.current_candidates.append(
                    build_candidate(label, self.table, column, self.plan.strategy_params, seed)
                )
            except (GapfillError, ValueError) as exc:
                self.prevalidated.append(CandidateOutcome(label, None, True, str(exc)))
        ctx.send(
            self.evaluator,
            Performative.REQUEST,
            {
                "table": subtable.to_json_dict(),
                "target": column,
                "mechanism": self.plan.tournament.mechanism.value,
                "rate": rate,
                "driver": self.plan.tournament.driver,
                "seed": seed,
                "trials": self.plan.tournament.n_trials,
                "candidates": [c.to_json_dict() for c in self.current_candidates],
            },
            self.conversation_id(),
        )

    def _finish_tournament(self, ctx: AgentContext, payload: dict) -> None:
        column = payload["target"]
        kind = self.current_kind
        outcomes = list(self.prevalidated)
        for entry in payload["outcomes"]:
            report = None
            if entry["scores"] is not None:
                s = entry["scores"]
                report = ScoreReport(
                    strategy=s["strategy"],
                    n_masked=s["n_masked"],
                    rmse=s.get("rmse_mean", s.get("rmse")),
                    mae=s.get("mae_mean", s.get("mae")),
                    accuracy=s.get("accuracy_mean", s.get("accuracy")),
                    mechanism=Mechanism(s["mechanism"]) if s.get("mechanism") else None,
                    rate=s.get("rate"),
                    n_trials=s.get("trials"),
                    n_failed=s.get("failed_trials"),
                    rmse_sd=s.get("rmse_sd"),
                    mae_sd=s.get("mae_sd"),
                    accuracy_sd=s.get("accuracy_sd"),
                )
            outcomes.append(
                CandidateOutcome(entry["label"], report, entry["failed"], entry["error"])
            )
        priority = [c.label for c in self.current_candidates]
        chosen, margin = select_winner(kind, outcomes, priority)
        if chosen is None:
            self.selections.append(
                ColumnSelection(
                    column, kind, "untreated", None, None, tuple(outcomes),
                    reason="every candidate failed the tournament",
                )
            )
            self.current = None
            self._advance(ctx)
            return
        self.selections.append(
            ColumnSelection(column, kind, "treated", chosen, margin, tuple(outcomes))
        )
        config = next(c for c in self.current_candidates if c.label == chosen)
        imputer = ctx.lookup(f"impute/{chosen}")[0]
        ctx.send(
            imputer,
            Performative.REQUEST,
            {
                "table": self.table.to_json_dict(),
                "target": column,
                "config": config.to_json_dict(),
            },
            self.conversation_id(),
        )

    def _apply_result(self, ctx: AgentContext, result_doc: dict) -> None:
        column = self.current
        self.results[column] = result_doc
        updates = {
            cell["row"]: cell["value"]
            for cell in result_doc["cells"]
            if cell["column"] == column
        }
        if updates:
            col = self.table.column(column)
            self.table = self.table.with_column(col.replace_cells(updates))
        self.current = None
        self._advance(ctx)

    def _handle_failure(self, ctx: AgentContext, msg: Message) -> None:
        if self.current is None:
            return
        column = self.current
        reason = msg.payload().get("reason", "agent failure")
        last = self.selections[-1] if self.selections else None
        if last is not None and last.column == column and last.status == "treated":
            # the tournament winner failed on the real column
            self.selections[-1] = ColumnSelection(
                column, last.kind, "untreated", None, None, last.candidates,
                reason=f"winner {last.chosen!r} failed on the real column: {reason}",
            )
        else:
            self.selections.append(
                ColumnSelection(
                    column, self.current_kind, "untreated", None, None,
                    tuple(self.prevalidated), reason=reason,
                )
            )
        self.current = None
        self._advance(ctx)

    def _finish(self, ctx: AgentContext) -> None:
        if self.done:
            return
        self.done = True
        ctx.send(ENV, Performative.INFORM, {"status": "done"})


@dataclass(frozen=True)
class PipelineOutcome:
    table: Table
    selection: SelectionReport
    results: dict[str, dict]
    profiles: list[dict]
    trace_jsonl: str


def run_pipeline(plan: PipelinePlan, table: Table | None = None, scheduler=None) -> PipelineOutcome:
    """Execute the full plan and return the treated table plus reports."""
    if table is None:
        try:
            with open(plan.input_path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ParseError(f"cannot read input {plan.input_path!r}: {exc}") from None
        table = parse_csv(text, missing_tokens=plan.missing_tokens)
    reference = None
    if plan.reference_path:
        with open(plan.reference_path, "r", encoding="utf-8") as fh:
            reference = parse_csv(fh.read(), missing_tokens=plan.missing_tokens)

    platform = Platform(scheduler=scheduler)
    profiler = platform.spawn("profiler", _Profiler())
    platform.directory.register("profile", profiler)
    evaluator = platform.spawn("evaluator", _Evaluator(reference))
    platform.directory.register("evaluate", evaluator)
    for label in sorted({label for labels in plan.candidates.values() for label in labels}):
        agent = platform.spawn(f"imputer-{label}", _Imputer(reference))
        platform.directory.register(f"impute/{label}", agent)

    coordinator = _Coordinator(plan, table, profiler, evaluator)
    coordinator_id = platform.spawn("coordinator", coordinator)
    platform.directory.register("coordinate", coordinator_id)

    platform.post(ENV, coordinator_id, Performative.REQUEST, {"action": "run"})
    platform.run_until_idle(max_deliveries=200_000)
    if not coordinator.done:
        raise GapfillError("pipeline stalled before the coordinator finished")

    return PipelineOutcome(
        table=coordinator.table,
        selection=SelectionReport(tuple(coordinator.selections)),
        results=coordinator.results,
        profiles=coordinator.profiles,
        trace_jsonl=platform.trace_jsonl(),
    )


def assemble_report(outcome: PipelineOutcome, plan: PipelinePlan) -> dict:
    """Deterministic pipeline report document with stable key order."""
    columns = []
    for selection in outcome.selection.columns:
        entry = selection.to_json_dict()
        result_doc = outcome.results.get(selection.column)
        if result_doc is not None:
            ledger_canonical = json.dumps(
                result_doc["ledger"], sort_keys=True, separators=(",", ":")
            )
            entry["ledger_digest"] = hashlib.sha256(
                ledger_canonical.encode("utf-8")
            ).hexdigest()
            entry["cells"] = result_doc["cells"]
            entry["seed"] = result_doc["seed"]
        columns.append(entry)
    return {
        "input": plan.input_path,
        "tournament": {
            "mechanism": plan.tournament.mechanism.value,
            "rate": plan.tournament.rate,
            "trials": plan.tournament.n_trials,
            "base_seed": plan.tournament.base_seed,
        },
        "profiles": outcome.profiles,
        "columns": columns,
        "untreated": outcome.selection.untreated(),
    }


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
