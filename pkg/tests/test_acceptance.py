"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -v -s``).

Criteria (tolerances pinned here, not deferred):
  A1 ledger fidelity & fraction conservation on randomized donor runs
  A2 donor closed-world on the same runs
  A3 exhaustive-oracle equivalence for knn and pmm donor choices
  A4 closed-form regression/pmm values on the exact-linear fixture
  A5 EM likelihood monotonicity, complete-data MLE equality, mean recovery
  A6 directional benchmark: pmm/regression vs mean on noisy linear data
  A7 runtime contracts: FIFO, exactly-once, termination, byte-identical reruns
  A8 MCAR mask-rate calibration and MAR rank correlation
"""

import json
import time

import numpy as np
import pytest
from scipy.stats import spearmanr

from gapfill.agents import Performative, Platform, RandomScheduler
from gapfill.amputation import MaskSpec, Mechanism, ampute, run_trials
from gapfill.errors import GapfillError, InsufficientDataError
from gapfill.impute import (
    Fallback,
    Method,
    StrategyConfig,
    aggregate_donor_weighted,
    em_gaussian,
    fit_ols,
    impute_hot_deck_random,
    impute_knn,
    impute_pmm,
    impute_regression,
)
from gapfill.impute.pmm import FALLBACK_NOTE
from gapfill.pipeline import (
    PipelinePlan,
    TournamentSettings,
    assemble_report,
    report_to_json,
    run_pipeline,
)
from gapfill.tabular import Column, ColumnKind, Table, write_csv

from conftest import make_table
from oracles import exhaustive_knn_donors, exhaustive_pmm_donors


def _report(name, ok=True):
    print(f"{'PASS' if ok else 'FAIL'}: {name}")
    assert ok, name


def _donor_run_table(rng, n):
    """Numeric x (complete), numeric y with holes, nominal c with holes."""
    x = rng.normal(0, 2, n)
    y = 1.5 * x + rng.normal(0, 1, n)
    y_vals = [None if rng.random() < 0.2 else float(v) for v in y]
    cats = rng.choice(["a", "b", "c"], n)
    c_vals = [None if rng.random() < 0.2 else str(v) for v in cats]
    if all(v is None for v in y_vals):
        y_vals[0] = float(y[0])
    if all(v is None for v in c_vals):
        c_vals[0] = str(cats[0])
    return Table(
        (
            Column("x", ColumnKind.NUMERIC, [float(v) for v in x]),
            Column("y", ColumnKind.NUMERIC, y_vals),
            Column("c", ColumnKind.NOMINAL, c_vals),
        )
    )


def test_a1_ledger_fidelity_and_fraction_conservation():
    start = time.monotonic()
    sizes = [int(s) for s in np.linspace(20, 200, 97)] + [500, 500, 500]
    for seed, n in enumerate(sizes):
        rng = np.random.default_rng(seed)
        t = _donor_run_table(rng, n)
        y_values = t.column("y").values
        pool = sum(1 for v in y_values if v is not None)

        hot = impute_hot_deck_random(t, "y", seed=seed)
        hot.ledger.validate()
        replay = aggregate_donor_weighted(hot.ledger, y_values)
        for j, value in replay.items():
            assert hot.table.column("y").values[j] == value  # single donor: exact

        pmm = impute_pmm(t, "y", ["x"])
        pmm.ledger.validate()
        replay = aggregate_donor_weighted(pmm.ledger, y_values)
        for j, value in replay.items():
            assert pmm.table.column("y").values[j] == value

        k = min(3, pool)
        knn = impute_knn(t, "y", ["x"], k=k)
        knn.ledger.validate()  # fraction sums 1 +- 1e-9
        replay = aggregate_donor_weighted(knn.ledger, y_values)
        for j, value in replay.items():
            assert abs(knn.table.column("y").values[j] - value) <= 1e-12
    elapsed = time.monotonic() - start
    assert elapsed < 10.0, f"ledger fidelity sweep took {elapsed:.1f}s"
    _report(f"A1 ledger fidelity on {len(sizes)} randomized runs in {elapsed:.1f}s")


def test_a2_donor_closed_world():
    violations = 0
    checked = 0
    for seed in range(100):
        rng = np.random.default_rng(10_000 + seed)
        t = _donor_run_table(rng, int(rng.integers(20, 200)))
        y_observed = {v for v in t.column("y").values if v is not None}
        c_observed = {v for v in t.column("c").values if v is not None}

        hot = impute_hot_deck_random(t, "y", seed=seed)
        for e in hot.log:
            checked += 1
            violations += e.value not in y_observed

        pmm = impute_pmm(t, "y", ["x"])
        for e in pmm.log:
            if e.note == FALLBACK_NOTE:
                continue
            checked += 1
            violations += e.value not in y_observed

        pool = sum(
            1 for i in range(t.n_rows)
            if t.column("c").values[i] is not None and t.column("x").values[i] is not None
        )
        if pool >= 3:
            vote = impute_knn(t, "c", ["x"], k=3)
            for e in vote.log:
                checked += 1
                violations += e.value not in c_observed
    assert checked > 0
    assert violations == 0, f"{violations} of {checked} imputed values left the donor pool"
    _report(f"A2 donor closed-world on {checked} imputed cells")


def test_a3_oracle_equivalence():
    start = time.monotonic()
    mismatches = 0
    for seed in range(100):
        rng = np.random.default_rng(20_000 + seed)
        n = int(rng.integers(10, 201))
        t = _donor_run_table(rng, n)

        predictors = ["x", "c"]
        pool = sum(
            1 for i in range(n)
            if t.column("y").values[i] is not None and t.column("c").values[i] is not None
        )
        k = int(rng.integers(1, 4))
        if pool >= k:
            result = impute_knn(t, "y", predictors, k=k)
            subs = {
                "x": float(np.mean(t.column("x").observed_values())),
                "c": sorted(
                    set(t.column("c").observed_values()),
                    key=lambda v: (-t.column("c").observed_values().count(v), v),
                )[0],
            }
            expected = exhaustive_knn_donors(t, "y", predictors, k, substitutions=subs)
            for j, donors in expected.items():
                got = [d for d, _, _ in result.ledger.donors_for(j)]
                if sorted(got) != sorted(donors):
                    mismatches += 1

        try:
            model = fit_ols(t, "y", ["x"])
        except InsufficientDataError:
            continue
        result = impute_pmm(t, "y", ["x"])
        expected = exhaustive_pmm_donors(t, "y", ["x"], model)
        for e in result.log:
            if e.note == FALLBACK_NOTE:
                continue
            (contribution,) = e.donors
            if contribution.donor != expected[e.recipient]:
                mismatches += 1
    elapsed = time.monotonic() - start
    assert mismatches == 0, f"{mismatches} donor choices diverged from the oracle"
    assert elapsed < 30.0, f"oracle sweep took {elapsed:.1f}s"
    _report(f"A3 oracle equivalence across 100 seeds in {elapsed:.1f}s")


def test_a4_closed_form_regression_and_pmm():
    t = make_table(x=[1, 2, 3, 4], y=[2, 4, 6, None])
    reg = impute_regression(t, "y", ["x"])
    assert reg.table.column("y").values[3] == pytest.approx(8.0, abs=1e-9)
    pmm = impute_pmm(t, "y", ["x"])
    assert pmm.table.column("y").values[3] == 6.0
    _report("A4 closed-form fixture: regression 8.0 +- 1e-9, pmm exactly 6.0")


def test_a5_em_properties():
    rng = np.random.default_rng(5150)
    # likelihood monotone on 50 random datasets
    for _ in range(50):
        d = int(rng.integers(1, 5))
        n = int(rng.integers(30, 1001))
        mu = rng.normal(0, 3, d)
        A = rng.normal(0, 1, (d, d))
        sigma = A @ A.T + 0.3 * np.eye(d)
        X = rng.multivariate_normal(mu, sigma, size=n)
        rate = rng.uniform(0.05, 0.3)
        cols = []
        for k in range(d):
            vals = [None if rng.random() < rate else float(v) for v in X[:, k]]
            if all(v is None for v in vals):
                vals[0] = float(X[0, k])
            cols.append(Column(f"v{k}", ColumnKind.NUMERIC, vals))
        params = em_gaussian(Table(tuple(cols)), [f"v{k}" for k in range(d)], tol=1e-8)
        for before, after in zip(params.ll_path, params.ll_path[1:]):
            assert after >= before - 1e-9, "log-likelihood decreased"

    # complete data: EM equals the closed-form MLE
    X = rng.normal(0, 1, (200, 3))
    t = Table(
        tuple(
            Column(f"v{k}", ColumnKind.NUMERIC, [float(v) for v in X[:, k]])
            for k in range(3)
        )
    )
    params = em_gaussian(t, ["v0", "v1", "v2"])
    centered = X - X.mean(axis=0)
    assert np.max(np.abs(params.mu - X.mean(axis=0))) < 1e-10
    assert np.max(np.abs(params.sigma - centered.T @ centered / len(X))) < 1e-10

    # mean recovery at n=10000 under 20% MCAR, within 3 standard errors
    n, d = 10_000, 3
    mu = np.array([1.0, -2.0, 0.5])
    A = rng.normal(0, 1, (d, d))
    sigma = A @ A.T + 0.5 * np.eye(d)
    X = rng.multivariate_normal(mu, sigma, size=n)
    cols = []
    for k in range(d):
        vals = [None if rng.random() < 0.2 else float(v) for v in X[:, k]]
        cols.append(Column(f"v{k}", ColumnKind.NUMERIC, vals))
    params = em_gaussian(Table(tuple(cols)), ["v0", "v1", "v2"], tol=1e-8)
    se = np.sqrt(np.diag(sigma) / n)
    assert np.all(np.abs(params.mu - mu) <= 3 * se), (
        f"recovered mean {params.mu} strayed beyond 3 SE of {mu}"
    )
    _report("A5 EM: monotone likelihood (50 runs), MLE equality, 3-SE mean recovery")


def test_a6_directional_benchmark():
    start = time.monotonic()
    rng = np.random.default_rng(606)
    n = 500
    x = rng.normal(0, 1, n)
    y = 2 * x + rng.normal(0, 0.1, n)
    t = make_table(x=[float(v) for v in x], y=[float(v) for v in y])
    spec = MaskSpec(Mechanism.MCAR, 0.2, "y", seed=99)
    strategies = [
        StrategyConfig(Method.MEAN),
        StrategyConfig(Method.REGRESSION, predictors=("x",)),
        StrategyConfig(Method.PMM, predictors=("x",)),
    ]
    mean_r, reg_r, pmm_r = run_trials(t, [spec], strategies, 30)
    assert pmm_r.rmse < mean_r.rmse, "pmm did not beat mean substitution"
    assert reg_r.rmse < mean_r.rmse, "regression did not beat mean substitution"
    wins = sum(
        1 for m_trial, p_trial in zip(mean_r.per_trial, pmm_r.per_trial)
        if p_trial.rmse < m_trial.rmse
    )
    assert wins >= 0.8 * 30, f"pmm won only {wins}/30 trials"
    elapsed = time.monotonic() - start
    assert elapsed < 60.0
    _report(
        f"A6 directional: pmm rmse {pmm_r.rmse:.4f} < mean {mean_r.rmse:.4f}, "
        f"{wins}/30 trial wins, {elapsed:.1f}s"
    )


def _random_messaging_round(seed):
    rng = np.random.default_rng(seed)
    p = Platform(scheduler=RandomScheduler(int(rng.integers(2**31))))
    names = [f"a{i}" for i in range(int(rng.integers(2, 5)))]
    inboxes = {}
    for name in names:
        inboxes[name] = []
        p.spawn(name, lambda ctx, msg, sink=inboxes[name]: sink.append(msg))
    sent = 0
    for _ in range(int(rng.integers(1, 40))):
        src, dst = rng.choice(names, 2)
        p.post(
            p.agents()[names.index(src)],
            p.agents()[names.index(dst)],
            Performative.INFORM,
            {"t": sent},
        )
        sent += 1
    p.run_until_idle()
    delivered = [r for r in p.trace if r["event"] == "delivered"]
    assert len(delivered) == sent
    for name, inbox in inboxes.items():
        per_sender = {}
        for m in inbox:
            per_sender.setdefault(m.sender.name, []).append(m.seq)
        for seqs in per_sender.values():
            assert seqs == sorted(seqs)


def _random_tiny_plan(rng):
    n = int(rng.integers(6, 15))
    x = rng.normal(0, 1, n)
    y = x + rng.normal(0, 0.5, n)
    y_vals = [None if rng.random() < 0.3 else float(v) for v in y]
    if all(v is None for v in y_vals):
        y_vals[0] = float(y[0])
    table = Table(
        (
            Column("x", ColumnKind.NUMERIC, [float(v) for v in x]),
            Column("y", ColumnKind.NUMERIC, y_vals),
        )
    )
    numeric_pool = ["mean", "hotdeck", "pmm", "regression", "knn"]
    count = int(rng.integers(1, 4))
    chosen = list(rng.choice(numeric_pool, size=count, replace=False))
    plan = PipelinePlan(
        input_path="synthetic",
        candidates={"numeric": chosen, "nominal": ["mode"]},
        strategy_params={"knn": {"k": 2}},
        tournament=TournamentSettings(
            n_trials=int(rng.integers(1, 3)), base_seed=int(rng.integers(10_000))
        ),
        figures=False,
    )
    return plan, table


def test_a7_runtime_contracts():
    start = time.monotonic()
    for seed in range(200):
        _random_messaging_round(seed)

    # termination and liveness over 1000 randomized plans
    rng = np.random.default_rng(707)
    for i in range(1000):
        plan, table = _random_tiny_plan(rng)
        scheduler = RandomScheduler(int(rng.integers(2**31)))
        outcome = run_pipeline(plan, table=table, scheduler=scheduler)
        requests = []
        replies = {}
        for line in outcome.trace_jsonl.strip().split("\n"):
            r = json.loads(line)
            if r["event"] != "delivered":
                continue
            if r["performative"] == "request":
                requests.append(r)
            else:
                replies.setdefault((r["receiver"], r["conversation_id"]), set()).add(
                    r["performative"]
                )
        for req in requests:
            answers = replies.get((req["sender"], req["conversation_id"]), set())
            assert "inform" in answers or "failure" in answers, (
                f"plan {i}: unanswered request {req}"
            )

    # byte-identical output across 10 repeated runs of one fixed plan
    rng = np.random.default_rng(33)
    x = rng.normal(0, 1, 50)
    y = 2 * x + rng.normal(0, 0.2, 50)
    y_vals = [None if i % 4 == 0 else float(v) for i, v in enumerate(y)]
    table = make_table(x=[float(v) for v in x], y=y_vals)
    plan = PipelinePlan(
        input_path="fixed",
        candidates={"numeric": ["mean", "pmm", "hotdeck"], "nominal": ["mode"]},
        tournament=TournamentSettings(n_trials=6, base_seed=12),
        figures=False,
    )
    first_csv = None
    first_report = None
    for _ in range(10):
        outcome = run_pipeline(plan, table=table)
        csv_text = write_csv(outcome.table)
        report_text = report_to_json(assemble_report(outcome, plan))
        if first_csv is None:
            first_csv, first_report = csv_text, report_text
        assert csv_text == first_csv
        assert report_text == first_report
    elapsed = time.monotonic() - start
    _report(
        f"A7 runtime contracts: 200 scheduler rounds, 1000 random plans, "
        f"10 identical reruns in {elapsed:.1f}s"
    )


def test_a8_mcar_calibration_and_mar_correlation():
    n = 10_000
    t = make_table(x=[float(i) for i in range(n)])
    rates = []
    for seed in range(100):
        _, truth = ampute(t, MaskSpec(Mechanism.MCAR, 0.2, "x", seed=seed))
        rates.append(len(truth) / n)
    pooled = float(np.mean(rates))
    assert abs(pooled - 0.2) <= 0.01, f"pooled empirical rate {pooled}"

    rng = np.random.default_rng(88)
    driver = [float(v) for v in rng.normal(0, 1, n)]
    t2 = make_table(d=driver, x=[float(i) for i in range(n)])
    masked, _ = ampute(t2, MaskSpec(Mechanism.MAR, 0.2, "x", driver="d", seed=1))
    indicator = [1 if v is None else 0 for v in masked.column("x").values]
    rho = spearmanr(driver, indicator).statistic
    assert rho > 0, f"MAR mask not positively rank-correlated (rho={rho})"
    _report(f"A8 MCAR pooled rate {pooled:.4f} within 0.2 +- 0.01; MAR rho {rho:.3f} > 0")
