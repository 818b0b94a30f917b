"""Command-line front end: profile, impute, benchmark, pipeline.

Exit codes are part of the interface:
  0 success, 1 usage error, 2 data/parse error, 3 strategy failure,
  4 partial success (some columns left untreated).
With --json, stdout carries only the machine-readable payload; everything
else goes to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .amputation import MaskSpec, Mechanism, reports_to_csv, run_trials
from .errors import (
    GapfillError,
    ParseError,
    PlanError,
    SchemaError,
)
from .impute import Distance, Fallback, Method, StrategyConfig, apply_strategy
from .pipeline import assemble_report, load_plan, report_to_json, run_pipeline
from .tabular import (
    DEFAULT_MISSING_TOKENS,
    parse_csv,
    profile,
    profiles_to_json,
    write_csv,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_STRATEGY = 3
EXIT_PARTIAL = 4

MISSING_TOKEN_ENV = "GAPFILL_MISSING_TOKENS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _missing_tokens(args) -> frozenset[str]:
    if args.missing_token:
        return frozenset(args.missing_token)
    env = os.environ.get(MISSING_TOKEN_ENV)
    if env is not None:
        return frozenset(env.split(","))
    return DEFAULT_MISSING_TOKENS


def _read_table(path: str, tokens):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path!r}: {exc}") from None
    return parse_csv(text, missing_tokens=tokens)


def _build_parser() -> _Parser:
    parser = _Parser(prog="gapfill", description="Missing-data preprocessing toolkit")
    parser.add_argument(
        "--missing-token", action="append", metavar="TOK",
        help="treat TOK as missing (repeatable; overrides the "
        f"{MISSING_TOKEN_ENV} env var and the defaults)",
    )
    parser.add_argument("--json", action="store_true", help="machine-readable stdout only")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", help="per-column missingness and statistics")
    p.add_argument("input")
    p.add_argument("--out-dir", help="also write profile.json and missingness.png here")

    p = sub.add_parser("impute", help="treat one column with one strategy")
    p.add_argument("input")
    p.add_argument("--method", required=True, choices=[m.value for m in Method])
    p.add_argument("--target", required=True)
    p.add_argument("--predictors", help="comma-separated predictor columns")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--distance", choices=[d.value for d in Distance], default="euclidean")
    p.add_argument("--fallback", choices=[f.value for f in Fallback], default="mean_mode")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reference", help="reference CSV for cold deck")
    p.add_argument("--out", help="write the imputed CSV here (default: stdout)")
    p.add_argument("--result-json", help="write the full result document here")

    p = sub.add_parser("benchmark", help="mask-and-score strategy tournament")
    p.add_argument("input")
    p.add_argument("--target", required=True)
    p.add_argument("--strategies", required=True, help="comma-separated method names")
    p.add_argument("--mechanism", choices=[m.value for m in Mechanism], default="mcar")
    p.add_argument("--rate", type=float, default=0.2)
    p.add_argument("--driver", help="driver column for MAR masking")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--distance", choices=[d.value for d in Distance], default="euclidean")
    p.add_argument("--fallback", choices=[f.value for f in Fallback], default="mean_mode")
    p.add_argument("--predictors", help="comma-separated predictor columns")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reference", help="reference CSV for cold deck")
    p.add_argument(
        "--out-dir", help="also write scores.json, scores.csv, and scores.png here"
    )

    p = sub.add_parser("pipeline", help="run a full plan file")
    p.add_argument("plan")
    return parser


def _default_predictors(table, target, method: Method):
    from .pipeline import default_predictors

    return default_predictors(table, target, method)


def _cmd_profile(args) -> int:
    table = _read_table(args.input, _missing_tokens(args))
    profiles = profile(table)
    doc = profiles_to_json(profiles, indent=None if args.json else 2)
    print(doc)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "profile.json").write_text(
            profiles_to_json(profiles, indent=2) + "\n", encoding="utf-8"
        )
        from .figures import render_missingness

        render_missingness([p.to_json_dict() for p in profiles], out / "missingness.png")
        print(f"wrote {out / 'profile.json'} and {out / 'missingness.png'}", file=sys.stderr)
    return EXIT_OK


def _strategy_from_args(args, table, method: Method) -> StrategyConfig:
    if args.predictors:
        predictors = tuple(s.strip() for s in args.predictors.split(",") if s.strip())
    else:
        predictors = _default_predictors(table, args.target, method)
    needs = method in {Method.REGRESSION, Method.PMM, Method.KNN, Method.CLASSIFICATION_KNN}
    return StrategyConfig(
        method=method,
        predictors=predictors if needs or method is Method.EM_GAUSSIAN else (),
        k=args.k,
        distance=Distance(args.distance),
        fallback=Fallback(args.fallback),
        seed=args.seed,
    )


def _cmd_impute(args) -> int:
    tokens = _missing_tokens(args)
    table = _read_table(args.input, tokens)
    reference = _read_table(args.reference, tokens) if args.reference else None
    method = Method(args.method)
    config = _strategy_from_args(args, table, method)
    result = apply_strategy(table, args.target, config, reference)
    csv_text = write_csv(result.table)
    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")
        print(f"wrote {args.out}", file=sys.stderr)
    if args.result_json:
        Path(args.result_json).write_text(
            result.to_json(indent=2) + "\n", encoding="utf-8"
        )
        print(f"wrote {args.result_json}", file=sys.stderr)
    if args.json:
        print(result.to_json())
    elif not args.out:
        print(f"seed {config.seed}", file=sys.stderr)
        sys.stdout.write(csv_text)
    else:
        print(
            f"imputed {len(result.log)} cells in {args.target!r} "
            f"with {config.label} (seed {config.seed})",
            file=sys.stderr,
        )
    return EXIT_OK


def _cmd_benchmark(args) -> int:
    tokens = _missing_tokens(args)
    table = _read_table(args.input, tokens)
    reference = _read_table(args.reference, tokens) if args.reference else None
    target_col = table.column(args.target)
    if target_col.n_missing:
        # benchmark on the complete cases so hidden cells have known truth
        table = table.select_rows(target_col.observed_indices())
        print(
            f"note: restricting to {table.n_rows} rows where {args.target!r} is observed",
            file=sys.stderr,
        )
    spec = MaskSpec(
        mechanism=Mechanism(args.mechanism),
        rate=args.rate,
        target=args.target,
        driver=args.driver,
        seed=args.seed,
    )
    strategies = []
    for name in args.strategies.split(","):
        name = name.strip()
        if not name:
            continue
        strategies.append(_strategy_from_args(args, table, Method(name)))
    if not strategies:
        raise UsageError("no strategies given")
    print(f"base seed {args.seed}, trial seeds {args.seed}..{args.seed + args.trials - 1}", file=sys.stderr)
    reports = run_trials(table, [spec], strategies, args.trials, reference)
    docs = [r.to_json_dict() for r in reports]
    if args.json:
        print(json.dumps(docs, sort_keys=True))
    else:
        numeric = any(d.get("rmse_mean") is not None for d in docs)
        key, sd = ("rmse_mean", "rmse_sd") if numeric else ("accuracy_mean", "accuracy_sd")

        def cell(v):
            return "-" if v is None else format(v, ".6g")

        print(f"{'strategy':<14} {'trials':>6} {'failed':>6} {key:>14} {sd:>14}")
        for d in docs:
            print(
                f"{d['strategy']:<14} {d['trials']:>6} {d['failed_trials']:>6} "
                f"{cell(d.get(key)):>14} {cell(d.get(sd)):>14}"
            )
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "scores.json").write_text(
            json.dumps(docs, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        (out / "scores.csv").write_text(reports_to_csv(reports), encoding="utf-8")
        from .figures import render_benchmark

        render_benchmark(docs, out / "scores.png")
        print(f"wrote scores.json, scores.csv, scores.png under {out}", file=sys.stderr)
    return EXIT_OK


def _cmd_pipeline(args) -> int:
    plan = load_plan(args.plan)
    outcome = run_pipeline(plan)
    report = assemble_report(outcome, plan)
    if plan.output_dir:
        out = Path(plan.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "imputed.csv").write_text(write_csv(outcome.table), encoding="utf-8")
        (out / "report.json").write_text(report_to_json(report), encoding="utf-8")
        (out / "trace.jsonl").write_text(outcome.trace_jsonl, encoding="utf-8")
        written = ["imputed.csv", "report.json", "trace.jsonl"]
        if plan.figures:
            from .figures import render_missingness, render_selection

            render_missingness(outcome.profiles, out / "missingness.png")
            written.append("missingness.png")
            for path in render_selection(report, out):
                written.append(path.name)
        print(f"wrote {', '.join(written)} under {out}", file=sys.stderr)
    if args.json:
        print(json.dumps(report, sort_keys=True))
    else:
        for entry in report["columns"]:
            line = f"{entry['column']}: {entry['status']}"
            if entry["chosen"]:
                line += f" via {entry['chosen']} (margin {entry['margin']})"
            if entry["reason"]:
                line += f" [{entry['reason']}]"
            print(line, file=sys.stderr)
    return EXIT_PARTIAL if report["untreated"] else EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "profile":
            return _cmd_profile(args)
        if args.command == "impute":
            return _cmd_impute(args)
        if args.command == "benchmark":
            return _cmd_benchmark(args)
        return _cmd_pipeline(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PlanError as exc:
        print(f"plan error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, SchemaError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except GapfillError as exc:
        print(f"strategy error: {exc}", file=sys.stderr)
        return EXIT_STRATEGY


if __name__ == "__main__":
    sys.exit(main())
