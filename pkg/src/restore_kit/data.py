"""Logistic regression datasets: loading, scaling and a synthetic generator."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

__all__ = [
    "DataError",
    "LogisticDataset",
    "load_logistic_dataset",
    "prepare_logistic_dataset",
    "synthetic_logistic_dataset",
    "write_logistic_csv",
    "breast_cancer_path",
]


class DataError(ValueError):
    """Malformed or degenerate logistic regression input."""


@dataclass
class LogisticDataset:
    predictors: np.ndarray  # n x d, last column is the intercept
    responses: np.ndarray  # values in {-1, +1}
    columns: list[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.predictors.shape[0]

    @property
    def dim(self) -> int:
        return self.predictors.shape[1]


def breast_cancer_path() -> Path:
    """Bundled Wisconsin breast cancer table (683 complete rows, 9 predictors)."""
    return Path(str(resources.files("restore_kit") / "data" / "wisconsin_breast_cancer.csv"))


def _scale_column(col: np.ndarray, name: str) -> np.ndarray:
    values = np.unique(col)
    if values.size < 2:
        raise DataError(f"predictor column {name!r} is constant; cannot scale")
    if values.size == 2:
        # binary: mean 0, range 1
        return (col - col.mean()) / (values[1] - values[0])
    # mean 0, standard deviation 0.5
    return (col - col.mean()) / (2.0 * col.std())


def prepare_logistic_dataset(raw_predictors, raw_responses, columns=None) -> LogisticDataset:
    """Scale predictors, map responses to +-1 and append an intercept column."""
    X = np.asarray(raw_predictors, dtype=float)
    y = np.asarray(raw_responses, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise DataError("predictors must be n x p with one response per row")
    columns = list(columns) if columns is not None else [f"x{j + 1}" for j in range(X.shape[1])]
    bad = np.flatnonzero(~np.isin(y, (-1.0, 0.0, 1.0)))
    if bad.size:
        raise DataError(f"row {bad[0] + 1}: response {y[bad[0]]!r} is not binary")
    if np.any(y == 0) and np.any(y == -1):
        raise DataError("responses mix 0 and -1 codings")
    y = np.where(y == 0, -1.0, y)
    scaled = np.column_stack(
        [_scale_column(X[:, j], columns[j]) for j in range(X.shape[1])]
        + [np.ones(X.shape[0])]
    )
    return LogisticDataset(scaled, y, columns + ["intercept"])


def load_logistic_dataset(path) -> LogisticDataset:
    """Read a comma-delimited table with a header and a response column ``y``.

    Predictors are every other column. Row numbers in errors count data
    rows from 1 (the header is row 0).
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if "y" not in header:
            raise DataError(f"{path}: no response column named 'y'")
        yi = header.index("y")
        rows = []
        for lineno, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}"
                )
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise DataError(f"{path}: row {lineno} has a non-numeric field") from None
            if rows[-1][yi] not in (-1.0, 0.0, 1.0):
                raise DataError(f"{path}: row {lineno}: response {row[yi]!r} is not binary")
    if not rows:
        raise DataError(f"{path}: no data rows")
    arr = np.array(rows)
    pred_cols = [j for j in range(len(header)) if j != yi]
    return prepare_logistic_dataset(
        arr[:, pred_cols], arr[:, yi], [header[j] for j in pred_cols]
    )


def synthetic_logistic_dataset(n: int = 500, n_predictors: int = 9, seed: int = 0,
                               signal: float = 1.5):
    """Raw (unscaled) predictors and 0/1 responses from a known logistic model.

    Predictors are integer scores on 1..10 like the bundled clinical data,
    so the prepared dataset has ``n_predictors + 1`` coefficients.
    """
    rng = np.random.default_rng(seed)
    latent = rng.normal(size=(n, 1))
    X = np.clip(np.rint(3.0 + 2.5 * latent + 1.5 * rng.normal(size=(n, n_predictors))), 1, 10)
    coef = signal * rng.uniform(0.2, 1.0, size=n_predictors) / np.sqrt(n_predictors)
    eta = (X - X.mean(0)) @ coef
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-eta))).astype(float)
    return X, y


def write_logistic_csv(path, predictors, responses, columns=None):
    predictors = np.asarray(predictors)
    columns = columns or [f"x{j + 1}" for j in range(predictors.shape[1])]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["y", *columns])
        for yi, row in zip(responses, predictors):
            w.writerow([f"{yi:g}", *(f"{v:g}" for v in row)])
