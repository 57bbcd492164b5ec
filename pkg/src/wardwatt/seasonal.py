"""Additive trend + seasonality forecaster fit by penalized least squares.

The model is offset + slope*t + piecewise-linear trend corrections at
fixed changepoints + daily and weekly Fourier seasonality:

    y(t) = trend(t) + daily(t) + weekly(t)

Changepoints sit uniformly over the first 80% of the history; each adds a
hinge feature max(t - cp, 0). The fit solves the ridge normal equations
with per-block penalties lambda = 1 / prior_scale**2 on the changepoint
deltas and the Fourier coefficients; the base offset and slope are
unpenalized. Forecasts extend the last trend segment (hinges are linear
past the training window; no changepoints are added).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import FitError
from .series import HOUR, Forecast, TimeSeries, _readonly

DAILY_PERIOD_HOURS = 24.0
WEEKLY_PERIOD_HOURS = 168.0
CHANGEPOINT_RANGE = 0.8


@dataclass(frozen=True)
class StConfig:
    """Structural settings and prior scales.

    Prior scales translate to ridge penalties as 1/scale**2: a small
    changepoint_prior_scale pins the trend to a single line; a large
    seasonality_prior_scale lets the Fourier terms fit freely.
    """

    n_changepoints: int = 25
    daily_order: int = 4
    weekly_order: int = 3
    changepoint_prior_scale: float = 0.05
    seasonality_prior_scale: float = 10.0

    def __post_init__(self):
        if self.n_changepoints < 0:
            raise ValueError("n_changepoints must be >= 0")
        if self.daily_order < 1 or self.weekly_order < 1:
            raise ValueError("Fourier orders must be >= 1")
        if not self.changepoint_prior_scale > 0:
            raise ValueError("changepoint prior scale must be positive")
        if not self.seasonality_prior_scale > 0:
            raise ValueError("seasonality prior scale must be positive")

    @property
    def design_width(self) -> int:
        return 2 + self.n_changepoints + 2 * (self.daily_order + self.weekly_order)


@dataclass(frozen=True, eq=False)
class StModel:
    """Fitted components anchored at the training start time."""

    config: StConfig
    t0: np.datetime64
    changepoints: np.ndarray
    offset: float
    base_slope: float
    deltas: np.ndarray
    daily_coeffs: np.ndarray
    weekly_coeffs: np.ndarray
    last_timestamp: np.datetime64

    def __post_init__(self):
        cps = np.array(self.changepoints, dtype=np.float64, copy=True)
        deltas = np.array(self.deltas, dtype=np.float64, copy=True)
        daily = np.array(self.daily_coeffs, dtype=np.float64, copy=True)
        weekly = np.array(self.weekly_coeffs, dtype=np.float64, copy=True)
        if len(cps) != self.config.n_changepoints or len(deltas) != len(cps):
            raise ValueError("changepoints and deltas must match the config")
        if len(daily) != 2 * self.config.daily_order:
            raise ValueError("daily coefficient count must be 2 * daily_order")
        if len(weekly) != 2 * self.config.weekly_order:
            raise ValueError("weekly coefficient count must be 2 * weekly_order")
        object.__setattr__(self, "changepoints", _readonly(cps))
        object.__setattr__(self, "deltas", _readonly(deltas))
        object.__setattr__(self, "daily_coeffs", _readonly(daily))
        object.__setattr__(self, "weekly_coeffs", _readonly(weekly))

    def _hours(self, timestamps) -> np.ndarray:
        stamps = np.asarray(timestamps, dtype="datetime64[s]")
        return (stamps - np.datetime64(self.t0, "s")) / HOUR

    def trend_at(self, timestamps) -> np.ndarray:
        t = self._hours(timestamps)
        out = self.offset + self.base_slope * t
        for cp, delta in zip(self.changepoints, self.deltas):
            out = out + delta * np.maximum(t - cp, 0.0)
        return out

    def daily_at(self, timestamps) -> np.ndarray:
        t = self._hours(timestamps)
        return _fourier_block(t, DAILY_PERIOD_HOURS, self.config.daily_order) @ self.daily_coeffs

    def weekly_at(self, timestamps) -> np.ndarray:
        t = self._hours(timestamps)
        return _fourier_block(t, WEEKLY_PERIOD_HOURS, self.config.weekly_order) @ self.weekly_coeffs

    def predict(self, timestamps) -> np.ndarray:
        # the sum of the published components, so additivity is exact
        return self.trend_at(timestamps) + self.daily_at(timestamps) + self.weekly_at(timestamps)


def _fourier_block(t: np.ndarray, period: float, order: int) -> np.ndarray:
    cols = np.empty((len(t), 2 * order))
    for m in range(1, order + 1):
        angle = 2.0 * np.pi * m * t / period
        cols[:, 2 * (m - 1)] = np.sin(angle)
        cols[:, 2 * m - 1] = np.cos(angle)
    return cols


def default_changepoints(span_hours: float, n_changepoints: int) -> np.ndarray:
    """Uniform changepoint times over the first 80% of the history."""
    if span_hours <= 0:
        raise ValueError("history span must be positive")
    edge = CHANGEPOINT_RANGE * span_hours
    return edge * np.arange(1, n_changepoints + 1) / (n_changepoints + 1)


def build_design(
    timestamps,
    config: StConfig,
    t0=None,
    changepoints=None,
) -> np.ndarray:
    """Design matrix: [1, t, hinges..., daily sin/cos..., weekly sin/cos...].

    t is hours since t0 (default: the first timestamp). Changepoints
    default to the uniform 80% layout over the given stamps; pass the
    fitted model's values to evaluate future times consistently.
    """
    stamps = np.asarray(timestamps, dtype="datetime64[s]")
    if stamps.ndim != 1 or len(stamps) == 0:
        raise ValueError("timestamps must be a nonempty 1-D array")
    anchor = stamps[0] if t0 is None else np.datetime64(t0, "s")
    t = (stamps - anchor) / HOUR
    if changepoints is None:
        changepoints = default_changepoints(float(t[-1]), config.n_changepoints)
    changepoints = np.asarray(changepoints, dtype=np.float64)
    if len(changepoints) != config.n_changepoints:
        raise ValueError("changepoint count must match the config")
    n = len(t)
    design = np.empty((n, config.design_width))
    design[:, 0] = 1.0
    design[:, 1] = t
    for k, cp in enumerate(changepoints):
        design[:, 2 + k] = np.maximum(t - cp, 0.0)
    col = 2 + config.n_changepoints
    daily = _fourier_block(t, DAILY_PERIOD_HOURS, config.daily_order)
    design[:, col : col + daily.shape[1]] = daily
    col += daily.shape[1]
    weekly = _fourier_block(t, WEEKLY_PERIOD_HOURS, config.weekly_order)
    design[:, col : col + weekly.shape[1]] = weekly
    return design


def fit_st(series: TimeSeries, config: StConfig = StConfig()) -> StModel:
    """Penalized least squares on the full design.

    Requires a fully observed series spanning at least two weeks (the
    weekly terms are unidentifiable on less). Raises FitError when the
    normal equations are singular (e.g. constant time column).
    """
    series.require_observed("seasonal-trend fit")
    span = float(series.hours_from_start()[-1])
    if span < 2.0 * WEEKLY_PERIOD_HOURS:
        raise ValueError("series must span at least two full weeks")
    if len(series) <= config.design_width:
        raise ValueError(
            f"need more than {config.design_width} points to fit this design"
        )
    changepoints = default_changepoints(span, config.n_changepoints)
    design = build_design(series.timestamps, config, changepoints=changepoints)
    penalties = np.zeros(config.design_width)
    penalties[2 : 2 + config.n_changepoints] = config.changepoint_prior_scale**-2
    penalties[2 + config.n_changepoints :] = config.seasonality_prior_scale**-2
    gram = design.T @ design + np.diag(penalties)
    moment = design.T @ series.values
    try:
        beta = np.linalg.solve(gram, moment)
    except np.linalg.LinAlgError:
        raise FitError("normal equations are singular") from None
    if not np.all(np.isfinite(beta)):
        raise FitError("normal equations produced non-finite coefficients")
    k = config.n_changepoints
    return StModel(
        config=config,
        t0=series.timestamps[0],
        changepoints=changepoints,
        offset=float(beta[0]),
        base_slope=float(beta[1]),
        deltas=beta[2 : 2 + k],
        daily_coeffs=beta[2 + k : 2 + k + 2 * config.daily_order],
        weekly_coeffs=beta[2 + k + 2 * config.daily_order :],
        last_timestamp=series.end,
    )


def forecast_st(model: StModel, horizon: int = 720) -> Forecast:
    """Evaluate the fitted components over the next ``horizon`` hours."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    start = np.datetime64(model.last_timestamp, "s") + HOUR
    stamps = start + np.arange(horizon) * HOUR
    return Forecast(values=model.predict(stamps), model="seasonal", start=start)


def decompose(model: StModel, timestamps) -> dict:
    """Component values at the given stamps; total is their exact sum."""
    trend = model.trend_at(timestamps)
    daily = model.daily_at(timestamps)
    weekly = model.weekly_at(timestamps)
    return {
        "trend": trend,
        "daily": daily,
        "weekly": weekly,
        "total": trend + daily + weekly,
    }


def tune_st(
    series: TimeSeries,
    search_ranges,
    ga_generations: int = 50,
    population_size: int = 10,
    n_parents: int = 3,
    holdout_fraction: float = 0.25,
    base_config: StConfig = StConfig(),
    seed: int = 0,
    return_history: bool = False,
):
    """GA search for the prior-scale pair minimizing holdout RMSE.

    search_ranges is ((cp_lo, cp_hi), (seas_lo, seas_hi)). Candidates are
    fit on the chronological head and scored by forecast RMSE over the
    tail. The base config's pair is seeded into the initial population
    (when it lies in the ranges), so the winner is never worse than the
    default on this holdout. Exactly ga_generations fitness sweeps run;
    the best candidate over all evaluations is returned as an StConfig.
    """
    from .ga import GaConfig, generational_search

    bounds = np.asarray(search_ranges, dtype=np.float64)
    if bounds.shape != (2, 2):
        raise ValueError("search_ranges must give (lo, hi) for both prior scales")
    if np.any(bounds[:, 0] <= 0) or np.any(bounds[:, 0] > bounds[:, 1]):
        raise ValueError("prior-scale ranges must be positive with lo <= hi")
    if ga_generations < 1:
        raise ValueError("ga_generations must be >= 1")
    if not 0.0 < holdout_fraction < 1.0:
        raise ValueError("holdout fraction must lie strictly between 0 and 1")
    train, holdout = series.split(1.0 - holdout_fraction)
    if len(holdout) < 2:
        raise ValueError("holdout is degenerate; not enough points")

    def fitness(genes: np.ndarray) -> float:
        candidate = replace(
            base_config,
            changepoint_prior_scale=float(genes[0]),
            seasonality_prior_scale=float(genes[1]),
        )
        try:
            model = fit_st(train, candidate)
        except (FitError, ValueError):
            return -np.inf
        preds = forecast_st(model, len(holdout)).values
        return -float(np.sqrt(np.mean((preds - holdout.values) ** 2)))

    ga_cfg = GaConfig(
        population_size=max(2, population_size),
        generations=ga_generations,
        seed=seed,
    )
    default_point = (
        base_config.changepoint_prior_scale,
        base_config.seasonality_prior_scale,
    )
    best_genes, _, history = generational_search(
        fitness,
        bounds,
        pop_size=ga_cfg.population_size,
        n_parents=n_parents,
        generations=ga_generations,
        cfg=ga_cfg,
        rng=np.random.default_rng(seed),
        seed_points=[default_point],
    )
    tuned = replace(
        base_config,
        changepoint_prior_scale=float(best_genes[0]),
        seasonality_prior_scale=float(best_genes[1]),
    )
    return (tuned, history) if return_history else tuned


def load_ds_y(path) -> TimeSeries:
    """Read the conventional two-column (ds, y) frame."""
    from .series import load_series

    return load_series(path, timestamp_column="ds", value_column="y")
