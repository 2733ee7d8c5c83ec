"""CSV loading and design-matrix construction."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DataIOError,
    DimensionMismatch,
    DuplicateColumn,
    EmptyFile,
    MissingValue,
    NonBinaryResponse,
    NonIntegerCount,
    NonNumericResponse,
    RaggedRow,
    ZeroRowTotal,
    ZeroVariancePredictor,
)
from .formula import BoundFormula

MISSING_TOKENS = {"", "NA", "na", "NaN", "nan", "N/A", "null", "NULL"}


@dataclass
class DataTable:
    column_names: list[str]
    columns: list  # np.ndarray (float) for numeric, list[str | None] for categorical
    n_rows: int

    def __post_init__(self):
        if len(set(self.column_names)) != len(self.column_names):
            dup = next(c for c in self.column_names if self.column_names.count(c) > 1)
            raise DuplicateColumn(f"duplicate column name {dup!r}", location=f"column {dup}")
        for name, col in zip(self.column_names, self.columns):
            if len(col) != self.n_rows:
                raise DimensionMismatch(f"column {name!r} has {len(col)} rows, expected {self.n_rows}")

    def kind(self, i: int) -> str:
        return "numeric" if isinstance(self.columns[i], np.ndarray) else "categorical"

    def column(self, name: str):
        return self.columns[self.column_names.index(name)]

    @classmethod
    def from_columns(cls, data: dict) -> "DataTable":
        names, cols = [], []
        n = None
        for name, values in data.items():
            values = list(values)
            n = len(values) if n is None else n
            names.append(name)
            if all(isinstance(v, (int, float, np.integer, np.floating)) for v in values):
                cols.append(np.asarray(values, dtype=float))
            else:
                cols.append([None if v is None else str(v) for v in values])
        return cls(names, cols, n or 0)


def _parse_float(s: str):
    if s.strip() in MISSING_TOKENS:
        return math.nan
    return float(s)


def read_csv(path) -> DataTable:
    """Read a header-first, comma separated UTF-8 file.

    A column is numeric when every non-missing cell parses as a float.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as e:
        raise DataIOError(f"cannot read {path}: {e}", location=str(path)) from e
    except csv.Error as e:
        raise DataIOError(f"malformed CSV {path}: {e}", location=str(path)) from e

    if not rows:
        raise EmptyFile(f"{path} is empty (no header row)", location=str(path))
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    # a trailing blank line shows up as []
    while body and body[-1] == []:
        body.pop()
    for r, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise RaggedRow(r, len(header), len(row))

    columns = []
    for j in range(len(header)):
        raw = [row[j] for row in body]
        try:
            columns.append(np.array([_parse_float(v) for v in raw], dtype=float))
        except ValueError:
            columns.append([None if v.strip() in MISSING_TOKENS else v.strip() for v in raw])
    return DataTable(header, columns, len(body))


@dataclass
class DesignMatrices:
    """Numeric blocks handed to the samplers.

    ``X`` is on the standardized scale; coefficients estimated against it are
    per standard deviation of the original predictor (dummies: per unit).
    """

    Y: np.ndarray
    X: np.ndarray
    link: str = "identity"
    x_means: np.ndarray = None
    x_scales: np.ndarray = None
    y_centering: np.ndarray = None
    response_labels: list = field(default_factory=list)
    predictor_labels: list = field(default_factory=list)
    predictor_sources: list = field(default_factory=list)

    def __post_init__(self):
        self.Y = np.asarray(self.Y, dtype=float)
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2:
            self.X = self.X.reshape(self.Y.shape[0], -1)
        n, k = self.Y.shape
        p = self.X.shape[1]
        if self.x_means is None:
            self.x_means = np.zeros(p)
        if self.x_scales is None:
            self.x_scales = np.ones(p)
        if self.y_centering is None:
            self.y_centering = np.zeros(k)
        if not self.response_labels:
            self.response_labels = [f"y{j + 1}" for j in range(k)]
        if not self.predictor_labels:
            self.predictor_labels = [f"x{j + 1}" for j in range(p)]
        if not self.predictor_sources:
            self.predictor_sources = list(self.predictor_labels)
        self.row_totals = self.Y.sum(axis=1) if self.link == "logit" else None
        self.XtX = self.X.T @ self.X
        self.x_colsum = self.X.sum(axis=0)

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    @property
    def k(self) -> int:
        return self.Y.shape[1]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def k_eff(self) -> int:
        return self.k - 1 if self.link == "logit" else self.k


def _numeric(table: DataTable, col) -> np.ndarray:
    values = table.columns[col.index]
    bad = ~np.isfinite(values)
    if bad.any():
        raise MissingValue(int(np.argmax(bad)) + 2, col.name)
    return values


def build_design(table: DataTable, binding: BoundFormula, link: str) -> DesignMatrices:
    """Build the response block and the standardized predictor block.

    Numeric predictors are centered and scaled to unit sample sd. Categorical
    predictors are treatment coded against their alphabetically first level;
    the dummy columns are centered only. Under the identity link the response
    columns are centered; other links pass counts/indicators through.
    """
    # row numbers in errors are file lines (header is line 1)
    ys, ylabels = [], []
    for col in binding.responses:
        if col.kind != "numeric":
            raise NonNumericResponse(f"response {col.name!r} is not numeric", location=f"column {col.name}")
        y = _numeric(table, col)
        if link == "probit":
            bad = ~np.isin(y, (0.0, 1.0))
            if bad.any():
                i = int(np.argmax(bad))
                raise NonBinaryResponse(
                    f"probit response {col.name!r} has value {y[i]!r}", location=f"row {i + 2}, column {col.name}"
                )
        elif link in ("log", "logit"):
            bad = (y < 0) | (y != np.floor(y))
            if bad.any():
                i = int(np.argmax(bad))
                raise NonIntegerCount(
                    f"count response {col.name!r} has value {y[i]!r}", location=f"row {i + 2}, column {col.name}"
                )
        ys.append(y)
        ylabels.append(col.name)

    xs, xlabels, xmeans, xscales, sources = [], [], [], [], []
    for col in binding.predictors:
        if col.kind == "numeric":
            x = _numeric(table, col)
            m = x.mean()
            s = x.std(ddof=1) if len(x) > 1 else 0.0
            if not s > 0:
                raise ZeroVariancePredictor(f"predictor {col.name!r} is constant", location=f"column {col.name}")
            xs.append((x - m) / s)
            xlabels.append(col.name)
            xmeans.append(m)
            xscales.append(s)
            sources.append(col.name)
        else:
            values = table.columns[col.index]
            for i, v in enumerate(values):
                if v is None:
                    raise MissingValue(i + 2, col.name)
            levels = sorted(set(values))
            if len(levels) < 2:
                raise ZeroVariancePredictor(
                    f"factor {col.name!r} has a single level", location=f"column {col.name}"
                )
            arr = np.asarray(values, dtype=object)
            for level in levels[1:]:
                d = (arr == level).astype(float)
                m = d.mean()
                xs.append(d - m)
                xlabels.append(f"{col.name}={level}")
                xmeans.append(m)
                xscales.append(1.0)
                sources.append(col.name)

    n = table.n_rows
    Y = np.column_stack(ys) if ys else np.zeros((n, 0))
    X = np.column_stack(xs) if xs else np.zeros((n, 0))
    y_center = np.zeros(Y.shape[1])
    if link == "identity":
        y_center = Y.mean(axis=0) if n else y_center
        Y = Y - y_center
    elif link == "logit":
        if Y.shape[1] < 2:
            raise DimensionMismatch("logit link needs at least two responses (last is the reference)")
        totals = Y.sum(axis=1)
        if (totals == 0).any():
            i = int(np.argmax(totals == 0))
            raise ZeroRowTotal("row has zero total count under logit link", location=f"row {i + 2}")
    elif link not in ("probit", "log"):
        raise ValueError(f"unknown link {link!r}")

    return DesignMatrices(
        Y=Y,
        X=X,
        link=link,
        x_means=np.asarray(xmeans, dtype=float),
        x_scales=np.asarray(xscales, dtype=float),
        y_centering=y_center,
        response_labels=ylabels,
        predictor_labels=xlabels,
        predictor_sources=sources,
    )
