import numpy as np
import pytest

from gapfill.tabular import Column, ColumnKind, Table


def make_table(**columns):
    """Shorthand table builder: lists of numbers -> numeric, strings -> nominal."""
    cols = []
    for name, values in columns.items():
        present = [v for v in values if v is not None]
        numeric = all(isinstance(v, (int, float)) for v in present) and present
        kind = ColumnKind.NUMERIC if numeric else ColumnKind.NOMINAL
        if kind is ColumnKind.NUMERIC:
            values = [None if v is None else float(v) for v in values]
        cols.append(Column(name, kind, values))
    return Table(tuple(cols))


def random_numeric_table(rng, n_rows, missing_rate=0.2, n_predictors=1, noise=0.5):
    """Linear-ish table: y depends on x1..xp, holes punched in y (and
    sometimes in predictors) at the given rate."""
    predictors = {}
    signal = np.zeros(n_rows)
    for p in range(n_predictors):
        x = rng.normal(0, 1, n_rows)
        predictors[f"x{p + 1}"] = x
        signal = signal + (p + 1) * x
    y = signal + rng.normal(0, noise, n_rows)
    y_vals = [None if rng.random() < missing_rate else float(v) for v in y]
    if all(v is None for v in y_vals):
        y_vals[0] = float(y[0])
    if all(v is not None for v in y_vals):
        y_vals[-1] = None
    cols = {name: [float(v) for v in vals] for name, vals in predictors.items()}
    cols["y"] = y_vals
    return make_table(**cols)


@pytest.fixture
def linear_fixture():
    return make_table(x=[1, 2, 3, 4], y=[2, 4, 6, None])
