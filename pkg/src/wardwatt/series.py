"""Hourly demand series: ingestion, cleaning, scaling, windowing, scoring.

Everything downstream (forecasters, the load balancer, the explainer)
consumes the types defined here. All types are immutable after
construction; operations return new objects.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DataGapWarning,
    DegenerateScaleError,
    IngestError,
    PreprocessError,
)

HOUR = np.timedelta64(3600, "s")


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Demand observations on a strict one-hour grid.

    Timestamps are strictly increasing and spaced exactly one hour apart.
    Values are float64; NaN marks a missing observation and is only legal
    before :func:`preprocess` has run. Infinities are never legal.
    """

    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype="datetime64[s]")
        vals = np.array(self.values, dtype=np.float64, copy=True)
        if ts.ndim != 1 or vals.ndim != 1 or len(ts) != len(vals):
            raise ValueError("timestamps and values must be 1-D and equally long")
        if len(ts) < 2:
            raise ValueError("a series needs at least two observations")
        steps = np.diff(ts)
        if np.any(steps <= np.timedelta64(0, "s")):
            raise ValueError("timestamps must be strictly increasing")
        if np.any(steps != HOUR):
            raise ValueError("timestamps must sit on a one-hour grid with no gaps")
        if np.any(np.isinf(vals)):
            raise ValueError("values must be finite or NaN, never infinite")
        object.__setattr__(self, "timestamps", _readonly(ts))
        object.__setattr__(self, "values", _readonly(vals))

    def __len__(self) -> int:
        return len(self.values)

    @property
    def has_missing(self) -> bool:
        return bool(np.isnan(self.values).any())

    @property
    def start(self) -> np.datetime64:
        return self.timestamps[0]

    @property
    def end(self) -> np.datetime64:
        return self.timestamps[-1]

    def hours_from_start(self) -> np.ndarray:
        """Elapsed hours since the first observation, as float64."""
        return (self.timestamps - self.timestamps[0]) / HOUR

    def split(self, fraction: float) -> tuple["TimeSeries", "TimeSeries"]:
        """Chronological train/test split at ``fraction`` of the length."""
        if not 0.0 < fraction < 1.0:
            raise ValueError("split fraction must lie strictly between 0 and 1")
        cut = int(len(self) * fraction)
        if cut < 2 or len(self) - cut < 2:
            raise ValueError("split leaves fewer than two points on one side")
        return (
            TimeSeries(self.timestamps[:cut], self.values[:cut]),
            TimeSeries(self.timestamps[cut:], self.values[cut:]),
        )

    def require_observed(self, context: str) -> None:
        if self.has_missing:
            raise ValueError(f"{context} requires a series with no missing values")


@dataclass(frozen=True)
class ScalerParams:
    """Min-max parameters fitted on a training slice.

    transform maps [minimum, maximum] onto [0, 1]; inverse undoes it.
    Values outside the fitted range (possible on test data) map outside
    [0, 1], which downstream models accept.
    """

    minimum: float
    maximum: float

    def __post_init__(self):
        if not (math.isfinite(self.minimum) and math.isfinite(self.maximum)):
            raise ValueError("scaler bounds must be finite")
        if self.maximum <= self.minimum:
            raise DegenerateScaleError(
                f"scaler range [{self.minimum}, {self.maximum}] has zero width"
            )

    @property
    def span(self) -> float:
        return self.maximum - self.minimum

    def transform(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=np.float64) - self.minimum) / self.span

    def inverse(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=np.float64) * self.span + self.minimum


@dataclass(frozen=True, eq=False)
class Forecast:
    """Predicted demand over a future horizon at hourly resolution.

    ``start`` is the timestamp of the first predicted hour; it is None when
    the forecast was produced from a bare window with no calendar context.
    ``scaler`` records scaling provenance for models that trained on scaled
    data (values here are always on the original scale).
    """

    values: np.ndarray
    model: str
    start: np.datetime64 | None = None
    scaler: ScalerParams | None = None

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64, copy=True)
        if vals.ndim != 1 or len(vals) == 0:
            raise ValueError("forecast values must be a nonempty 1-D array")
        if not np.all(np.isfinite(vals)):
            raise ValueError("forecast values must be finite")
        if not self.model:
            raise ValueError("forecast needs a model identity")
        object.__setattr__(self, "values", _readonly(vals))
        if self.start is not None:
            object.__setattr__(self, "start", np.datetime64(self.start, "s"))

    def __len__(self) -> int:
        return len(self.values)

    def timestamps(self) -> np.ndarray:
        if self.start is None:
            raise ValueError("forecast has no calendar anchor")
        return self.start + np.arange(len(self)) * HOUR


@dataclass(frozen=True, eq=False)
class LagMatrix:
    """Sliding windows (oldest value first) paired with next-hour targets."""

    rows: np.ndarray
    targets: np.ndarray
    window: int

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.float64, copy=True)
        targets = np.array(self.targets, dtype=np.float64, copy=True)
        if rows.ndim != 2 or targets.ndim != 1 or rows.shape[0] != len(targets):
            raise ValueError("rows must be (n, window) aligned with n targets")
        if self.window < 1 or rows.shape[1] != self.window:
            raise ValueError("window must be >= 1 and match the row width")
        if rows.shape[0] == 0:
            raise ValueError("lag matrix must contain at least one row")
        object.__setattr__(self, "rows", _readonly(rows))
        object.__setattr__(self, "targets", _readonly(targets))

    def __len__(self) -> int:
        return len(self.targets)


@dataclass(frozen=True)
class Metrics:
    """Forecast accuracy summary."""

    mae: float
    rmse: float

    def __post_init__(self):
        if not (math.isfinite(self.mae) and math.isfinite(self.rmse)):
            raise ValueError("metrics must be finite")
        if self.mae < 0 or self.rmse < 0:
            raise ValueError("metrics cannot be negative")

    def as_dict(self) -> dict:
        return {"mae": self.mae, "rmse": self.rmse}


@dataclass(frozen=True, eq=False)
class CorrMatrix:
    """Pearson correlations between named columns."""

    labels: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64, copy=True)
        k = len(self.labels)
        if vals.shape != (k, k):
            raise ValueError("correlation matrix must be square over the labels")
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "values", _readonly(vals))


def _parse_timestamp(cell: str, row: int) -> np.datetime64:
    try:
        stamp = datetime.fromisoformat(cell.strip())
    except ValueError:
        raise IngestError(f"unparseable timestamp {cell!r}", row=row) from None
    if stamp.tzinfo is not None:
        stamp = stamp.astimezone(timezone.utc).replace(tzinfo=None)
    return np.datetime64(stamp, "s")


def load_series(path, timestamp_column: str, value_column: str) -> TimeSeries:
    """Read a CSV into a :class:`TimeSeries`.

    Timestamps must be ISO-8601 on a strict hourly grid; a skipped hour is
    an ingestion error, never silently resampled. Empty (or literal "nan")
    value cells become missing observations and are reported once through a
    :class:`DataGapWarning`; any other unparseable cell is an error naming
    the data row.
    """
    stamps: list[np.datetime64] = []
    values: list[float] = []
    gap_rows: list[int] = []
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from None
    with handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        for col in (timestamp_column, value_column):
            if col not in header:
                raise IngestError(f"column {col!r} not found in header {header}")
        for row_num, record in enumerate(reader, start=1):
            stamps.append(_parse_timestamp(record[timestamp_column] or "", row_num))
            cell = (record[value_column] or "").strip()
            if cell == "" or cell.lower() == "nan":
                values.append(math.nan)
                gap_rows.append(row_num)
                continue
            try:
                value = float(cell)
            except ValueError:
                raise IngestError(f"unparseable value {cell!r}", row=row_num) from None
            if math.isinf(value):
                raise IngestError("infinite value", row=row_num)
            values.append(value)
    if len(stamps) < 2:
        raise IngestError(f"{path} holds fewer than two data rows")
    ts = np.array(stamps, dtype="datetime64[s]")
    steps = np.diff(ts)
    bad = np.flatnonzero(steps != HOUR)
    if bad.size:
        row = int(bad[0]) + 2  # 1-based row of the second stamp in the bad pair
        if steps[bad[0]] <= np.timedelta64(0, "s"):
            raise IngestError("timestamp not strictly increasing", row=row)
        raise IngestError("hourly grid broken (skipped hour?)", row=row)
    if gap_rows:
        warnings.warn(DataGapWarning(len(gap_rows), tuple(gap_rows)), stacklevel=2)
    return TimeSeries(ts, np.array(values))


def preprocess(
    series: TimeSeries,
    forward_fill: bool = True,
    outlier_3sigma: bool = False,
) -> TimeSeries:
    """Produce a fully observed series.

    Missing values take the last prior observation (requires forward_fill;
    the first value cannot be missing). With outlier_3sigma, values more
    than three standard deviations from the mean are removed and refilled
    the same way; the statistics come from one pass over the filled input,
    never recomputed after removal.
    """
    vals = np.array(series.values, dtype=np.float64)
    missing = np.isnan(vals)
    if missing.all():
        raise PreprocessError("every value is missing")
    if missing.any():
        if not forward_fill:
            raise PreprocessError("missing values present and forward_fill disabled")
        if missing[0]:
            raise PreprocessError("first value is missing; nothing to fill from")
        vals = _forward_fill(vals, missing)
    if outlier_3sigma:
        mean = float(vals.mean())
        sigma = float(vals.std())
        if sigma > 0.0:
            wild = np.abs(vals - mean) > 3.0 * sigma
            if wild[0]:
                raise PreprocessError("first value is an outlier; nothing to fill from")
            if wild.any():
                vals = _forward_fill(np.where(wild, np.nan, vals), wild)
    return TimeSeries(series.timestamps, vals)


def _forward_fill(vals: np.ndarray, missing: np.ndarray) -> np.ndarray:
    keep = np.where(~missing, np.arange(len(vals)), 0)
    np.maximum.accumulate(keep, out=keep)
    return vals[keep]


def minmax_scale(series: TimeSeries) -> tuple[TimeSeries, ScalerParams]:
    """Fit min-max parameters on ``series`` and return it scaled to [0, 1].

    Fit on the training slice only; apply the returned params to later data
    with :func:`apply_scale`.
    """
    series.require_observed("scaling")
    lo = float(series.values.min())
    hi = float(series.values.max())
    if hi <= lo:
        raise DegenerateScaleError("constant series cannot be min-max scaled")
    params = ScalerParams(lo, hi)
    return TimeSeries(series.timestamps, params.transform(series.values)), params


def apply_scale(series: TimeSeries, params: ScalerParams) -> TimeSeries:
    """Scale a series with parameters fitted elsewhere (e.g. on train data)."""
    series.require_observed("scaling")
    return TimeSeries(series.timestamps, params.transform(series.values))


def make_lag_matrix(series: TimeSeries, window: int = 24) -> LagMatrix:
    """Slide a ``window``-hour view over the series; target is the next hour.

    Row i is values[i : i + window] (oldest first), target i is
    values[i + window]; a series of n points yields n - window rows.
    """
    if window < 1:
        raise ValueError("window must be at least 1")
    series.require_observed("windowing")
    n = len(series) - window
    if n < 1:
        raise ValueError(
            f"series of length {len(series)} is too short for window {window}"
        )
    rows = np.lib.stride_tricks.sliding_window_view(series.values, window)[:n]
    return LagMatrix(rows, series.values[window:], window)


def write_series_csv(
    series: TimeSeries,
    path,
    timestamp_column: str = "timestamp",
    value_column: str = "demand_kw",
) -> None:
    """Write a series as (timestamp, value) CSV.

    Values are written with repr so load_series round-trips them exactly.
    """
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow([timestamp_column, value_column])
        for stamp, value in zip(series.timestamps, series.values):
            cell = "" if math.isnan(value) else repr(float(value))
            writer.writerow([np.datetime_as_string(stamp, unit="s"), cell])


def score(actual, predicted) -> Metrics:
    """Mean absolute error and root mean squared error of a forecast."""
    a = np.asarray(actual, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if a.ndim != 1 or a.shape != p.shape or len(a) == 0:
        raise ValueError("score needs two equally long nonempty 1-D arrays")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(p))):
        raise ValueError("score needs finite inputs")
    err = a - p
    return Metrics(
        mae=float(np.abs(err).mean()),
        rmse=float(math.sqrt(np.square(err).mean())),
    )


def pearson_corr(columns: Mapping[str, Sequence[float]]) -> CorrMatrix:
    """Pearson correlation matrix over named, equally long columns.

    Symmetric with a unit diagonal by construction; entries are clamped
    into [-1, 1] to absorb last-ulp float overshoot. A zero-variance
    column is an error naming the column.
    """
    if not columns:
        raise ValueError("no columns given")
    labels = tuple(columns.keys())
    data = [np.asarray(columns[name], dtype=np.float64) for name in labels]
    length = len(data[0])
    if length < 2:
        raise ValueError("columns need at least two observations")
    for name, col in zip(labels, data):
        if col.ndim != 1 or len(col) != length:
            raise ValueError(f"column {name!r} is not 1-D of the shared length")
        if not np.all(np.isfinite(col)):
            raise ValueError(f"column {name!r} has non-finite entries")
    centered = [col - col.mean() for col in data]
    norms = [float(np.sqrt(np.dot(c, c))) for c in centered]
    for name, norm in zip(labels, norms):
        if norm == 0.0:
            raise ValueError(f"column {name!r} has zero variance")
    k = len(labels)
    out = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            r = float(np.dot(centered[i], centered[j])) / (norms[i] * norms[j])
            r = min(1.0, max(-1.0, r))
            out[i, j] = r
            out[j, i] = r
    return CorrMatrix(labels, out)
