"""EM estimation of a multivariate normal from incompletely observed rows,
plus conditional-mean imputation under the fitted parameters.

The E-step sweeps rows grouped by missingness pattern: missing coordinates
get their conditional mean given the observed ones, and the conditional
covariance block is folded into the second-moment accumulator. The M-step is
the usual closed-form update. The observed-data log-likelihood is monotone
across iterations up to arithmetic noise; rows with nothing observed
contribute their marginal expectations and zero likelihood.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import InsufficientDataError, NumericalError, SchemaError
from ..tabular import ColumnKind, Table
from .config import Method, StrategyConfig
from .ledger import DonorLedger, ImputationResult, ImputedValue

RIDGE_REPAIR = 1e-8


@dataclass(frozen=True)
class GaussianParams:
    columns: tuple[str, ...]
    mu: np.ndarray
    sigma: np.ndarray
    log_likelihood: float
    iterations: int
    ll_path: tuple[float, ...]


def _data_matrix(table: Table, columns: Sequence[str]) -> np.ndarray:
    cols = []
    for name in columns:
        col = table.column(name)
        if col.kind is not ColumnKind.NUMERIC:
            raise SchemaError(f"gaussian fit needs numeric columns, {name!r} is nominal")
        cols.append([math.nan if v is None else float(v) for v in col.values])
    return np.asarray(cols, dtype=float).T


def _repaired(sigma: np.ndarray) -> np.ndarray:
    """Symmetrize and, if needed, ridge-repair a covariance estimate once."""
    sigma = (sigma + sigma.T) / 2.0
    try:
        np.linalg.cholesky(sigma)
        return sigma
    except np.linalg.LinAlgError:
        pass
    repaired = sigma + RIDGE_REPAIR * np.eye(len(sigma))
    try:
        np.linalg.cholesky(repaired)
    except np.linalg.LinAlgError:
        raise NumericalError(
            "covariance update lost positive definiteness beyond ridge repair"
        ) from None
    return repaired


def _solve_observed_block(sigma_oo: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(sigma_oo, rhs)
    except np.linalg.LinAlgError:
        try:
            return np.linalg.solve(sigma_oo + RIDGE_REPAIR * np.eye(len(sigma_oo)), rhs)
        except np.linalg.LinAlgError:
            raise NumericalError("observed-block covariance is singular beyond repair") from None


def _pattern_groups(mask: np.ndarray) -> dict[tuple[bool, ...], np.ndarray]:
    groups: dict[tuple[bool, ...], list[int]] = {}
    for i, row in enumerate(mask):
        groups.setdefault(tuple(row), []).append(i)
    return {k: np.asarray(v) for k, v in groups.items()}


def _log_likelihood(X: np.ndarray, mask: np.ndarray, mu: np.ndarray, sigma: np.ndarray) -> float:
    total = 0.0
    for pattern, rows in sorted(_pattern_groups(mask).items()):
        obs = [d for d, missing in enumerate(pattern) if not missing]
        if not obs:
            continue
        sub = X[np.ix_(rows, obs)] - mu[obs]
        sigma_oo = sigma[np.ix_(obs, obs)]
        sign, logdet = np.linalg.slogdet(sigma_oo)
        if sign <= 0:
            sigma_oo = sigma_oo + RIDGE_REPAIR * np.eye(len(obs))
            sign, logdet = np.linalg.slogdet(sigma_oo)
            if sign <= 0:
                raise NumericalError("observed-block covariance has nonpositive determinant")
        solved = _solve_observed_block(sigma_oo, sub.T)
        quad = np.einsum("ij,ji->i", sub, solved)
        total += float(
            -0.5 * (len(obs) * math.log(2 * math.pi) + logdet) * len(rows)
            - 0.5 * quad.sum()
        )
    return total


def _e_step(X: np.ndarray, mask: np.ndarray, mu: np.ndarray, sigma: np.ndarray):
    n, d = X.shape
    filled = np.where(mask, 0.0, X)
    sum_x = np.zeros(d)
    sum_xx = np.zeros((d, d))
    for pattern, rows in sorted(_pattern_groups(mask).items()):
        obs = [k for k, missing in enumerate(pattern) if not missing]
        mis = [k for k, missing in enumerate(pattern) if missing]
        block = filled[rows]
        if mis:
            if obs:
                sigma_oo = sigma[np.ix_(obs, obs)]
                sigma_mo = sigma[np.ix_(mis, obs)]
                # regression of missing coords on observed ones
                coef = _solve_observed_block(sigma_oo, sigma_mo.T).T
                resid = X[np.ix_(rows, obs)] - mu[obs]
                cond_mean = mu[mis] + resid @ coef.T
                cond_cov = sigma[np.ix_(mis, mis)] - coef @ sigma_mo.T
            else:
                cond_mean = np.tile(mu, (len(rows), 1))
                cond_cov = sigma.copy()
            block[:, mis] = cond_mean
            sum_xx[np.ix_(mis, mis)] += len(rows) * cond_cov
        sum_x += block.sum(axis=0)
        sum_xx += block.T @ block
    return sum_x, sum_xx


def em_gaussian(
    table: Table,
    columns: Sequence[str],
    tol: float = 1e-6,
    max_iter: int = 200,
) -> GaussianParams:
    """Maximum-likelihood mean and covariance under arbitrary missingness."""
    columns = tuple(columns)
    X = _data_matrix(table, columns)
    n, d = X.shape
    if n < 2:
        raise InsufficientDataError(f"gaussian fit needs >= 2 rows, got {n}")
    mask = np.isnan(X)
    for k, name in enumerate(columns):
        if mask[:, k].all():
            raise InsufficientDataError(f"column {name!r} has no observed values")

    mu = np.array([X[~mask[:, k], k].mean() for k in range(d)])
    sigma = _repaired(np.diag([X[~mask[:, k], k].var() for k in range(d)]))

    if not mask.any():
        mu = X.mean(axis=0)
        sigma = _repaired((X - mu).T @ (X - mu) / n)
        ll = _log_likelihood(X, mask, mu, sigma)
        return GaussianParams(columns, mu, sigma, ll, 1, (ll,))

    ll_path: list[float] = []
    ll_prev = -math.inf
    iterations = 0
    for _ in range(max_iter):
        sum_x, sum_xx = _e_step(X, mask, mu, sigma)
        mu = sum_x / n
        sigma = _repaired(sum_xx / n - np.outer(mu, mu))
        iterations += 1
        ll = _log_likelihood(X, mask, mu, sigma)
        ll_path.append(ll)
        if ll - ll_prev < tol and math.isfinite(ll_prev):
            break
        ll_prev = ll
    return GaussianParams(columns, mu, sigma, ll_path[-1], iterations, tuple(ll_path))


def conditional_means(
    X_row: np.ndarray, mu: np.ndarray, sigma: np.ndarray
) -> dict[int, float]:
    """Conditional mean of each missing coordinate given the observed ones."""
    missing = np.isnan(X_row)
    mis = [k for k in range(len(X_row)) if missing[k]]
    obs = [k for k in range(len(X_row)) if not missing[k]]
    if not mis:
        return {}
    if not obs:
        return {k: float(mu[k]) for k in mis}
    sigma_oo = sigma[np.ix_(obs, obs)]
    sigma_mo = sigma[np.ix_(mis, obs)]
    coef = _solve_observed_block(sigma_oo, sigma_mo.T).T
    cond = mu[mis] + coef @ (X_row[obs] - mu[obs])
    return {k: float(v) for k, v in zip(mis, cond)}


def em_impute(
    table: Table,
    columns: Sequence[str],
    params: GaussianParams,
    config: StrategyConfig | None = None,
    targets: Sequence[str] | None = None,
) -> ImputationResult:
    """Fill missing cells with conditional means under fitted parameters.

    ``targets`` limits which of the fitted columns actually get written;
    default is all of them.
    """
    columns = tuple(columns)
    if params.columns != columns:
        raise SchemaError(
            f"parameters were fitted on {params.columns}, requested {columns}"
        )
    write = set(columns if targets is None else targets)
    unknown = write - set(columns)
    if unknown:
        raise SchemaError(f"targets {sorted(unknown)} were not part of the fit")
    config = config or StrategyConfig(Method.EM_GAUSSIAN)
    X = _data_matrix(table, columns)

    result_table = table
    log: list[ImputedValue] = []
    ledger = DonorLedger(next(iter(write)) if len(write) == 1 else ",".join(sorted(write)))
    per_column_updates: dict[str, dict[int, float]] = {name: {} for name in columns}
    for i in range(table.n_rows):
        cond = conditional_means(X[i], params.mu, params.sigma)
        for k, value in cond.items():
            name = columns[k]
            if name in write:
                per_column_updates[name][i] = value
                log.append(ImputedValue(i, name, value, (), method=config.label))
    for name, updates in per_column_updates.items():
        if updates:
            col = result_table.column(name)
            result_table = result_table.with_column(col.replace_cells(updates))
    return ImputationResult(
        table=result_table,
        ledger=ledger,
        log=tuple(sorted(log, key=lambda v: (v.column, v.recipient))),
        strategy=config,
        rng_seed=config.seed,
    )


def impute_em(
    table: Table,
    target: str,
    predictors: Sequence[str] = (),
    config: StrategyConfig | None = None,
    tol: float = 1e-6,
    max_iter: int = 200,
) -> ImputationResult:
    """One-column convenience wrapper: fit on target plus predictors, write
    conditional means into the target column only."""
    config = config or StrategyConfig(Method.EM_GAUSSIAN, predictors=tuple(predictors))
    columns = (target, *[p for p in predictors if p != target])
    params = em_gaussian(table, columns, tol=tol, max_iter=max_iter)
    return em_impute(table, columns, params, config=config, targets=(target,))
