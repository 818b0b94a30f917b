"""Independent brute-force oracles used to cross-check donor selection.

These deliberately reimplement donor search as plain exhaustive enumeration
over Python lists so the vectorized library paths are checked against
something that cannot share their bugs.
"""

from __future__ import annotations

import numpy as np

from gapfill.tabular import ColumnKind, Table


def encode_rows(table: Table, predictors, substitutions):
    """Feature vectors per row: numeric passthrough, one-hot for nominal,
    missing cells replaced from ``substitutions``."""
    dims = []
    for name in predictors:
        col = table.column(name)
        if col.kind is ColumnKind.NUMERIC:
            dims.append((name, None))
        else:
            for cat in sorted(set(col.observed_values())):
                dims.append((name, cat))
    vectors = []
    for i in range(table.n_rows):
        vec = []
        for name, cat in dims:
            value = table.column(name).values[i]
            if value is None:
                value = substitutions[name]
            if cat is None:
                vec.append(float(value))
            else:
                vec.append(1.0 if value == cat else 0.0)
        vectors.append(vec)
    return vectors


def exhaustive_knn_donors(table: Table, target, predictors, k, distance="euclidean",
                          substitutions=None):
    """Map recipient row -> the k donor rows an exhaustive search selects."""
    substitutions = substitutions or {}
    target_col = table.column(target)
    pool = [
        i for i in range(table.n_rows)
        if target_col.values[i] is not None
        and all(table.column(p).values[i] is not None for p in predictors)
    ]
    vectors = encode_rows(table, predictors, substitutions)
    donor_matrix = np.asarray([vectors[i] for i in pool])
    center = donor_matrix.mean(axis=0)
    scale = donor_matrix.std(axis=0)
    scale = np.where(scale == 0.0, 1.0, scale)

    def z(row):
        return [(vectors[row][d] - center[d]) / scale[d] for d in range(len(center))]

    zpool = {i: z(i) for i in pool}
    out = {}
    for j in range(table.n_rows):
        if target_col.values[j] is not None:
            continue
        zj = z(j)
        scored = []
        for i in pool:
            d = 0.0
            for a, b in zip(zpool[i], zj):
                d += (a - b) ** 2 if distance == "euclidean" else abs(a - b)
            scored.append((d, i))
        scored.sort()
        out[j] = [i for _, i in scored[:k]]
    return out


def exhaustive_pmm_donors(table: Table, target, predictors, model):
    """Map recipient row -> the donor row with the nearest predicted mean,
    given an already fitted linear model (intercept + coefficients)."""
    target_col = table.column(target)

    def predict(row):
        yhat = model.intercept
        for name, coef in model.coefficients.items():
            v = table.column(name).values[row]
            if v is None:
                return None
            yhat += coef * float(v)
        return yhat

    donors = []
    for i in range(table.n_rows):
        if target_col.values[i] is None:
            continue
        yhat = predict(i)
        if yhat is not None:
            donors.append((i, yhat))
    out = {}
    for j in range(table.n_rows):
        if target_col.values[j] is not None:
            continue
        yhat_j = predict(j)
        if yhat_j is None or not donors:
            out[j] = None
            continue
        best = None
        for i, yhat_i in donors:
            gap = abs(yhat_j - yhat_i)
            if best is None or gap < best[0] or (gap == best[0] and i < best[1]):
                best = (gap, i)
        out[j] = best[1]
    return out
