"""Trend + Fourier seasonality model: design, fit, forecast, tuning."""

import numpy as np
import pytest

from conftest import hourly
from wardwatt.seasonal import (
    StConfig,
    StModel,
    build_design,
    decompose,
    default_changepoints,
    fit_st,
    forecast_st,
    load_ds_y,
    tune_st,
)
from wardwatt.series import HOUR


def _stamps(n, start="2024-01-01T00:00"):
    return np.datetime64(start, "s") + np.arange(n) * HOUR


def _hand_model(offset=0.0, slope=0.0, daily=None, weekly=None, n_hours=100):
    cfg = StConfig(n_changepoints=0, daily_order=1, weekly_order=1)
    t0 = np.datetime64("2024-01-01T00:00", "s")
    return StModel(
        config=cfg,
        t0=t0,
        changepoints=np.empty(0),
        offset=offset,
        base_slope=slope,
        deltas=np.empty(0),
        daily_coeffs=np.asarray(daily if daily is not None else [0.0, 0.0]),
        weekly_coeffs=np.asarray(weekly if weekly is not None else [0.0, 0.0]),
        last_timestamp=t0 + (n_hours - 1) * HOUR,
    )


# ------------------------------------------------------------------- design


def test_config_validation_and_width():
    assert StConfig().design_width == 2 + 25 + 2 * (4 + 3)
    with pytest.raises(ValueError):
        StConfig(n_changepoints=-1)
    with pytest.raises(ValueError):
        StConfig(daily_order=0)
    with pytest.raises(ValueError):
        StConfig(changepoint_prior_scale=0.0)


def test_default_changepoints_uniform_over_first_80_percent():
    np.testing.assert_allclose(
        default_changepoints(1000.0, 4), [160.0, 320.0, 480.0, 640.0], atol=1e-12
    )
    assert default_changepoints(100.0, 0).size == 0
    with pytest.raises(ValueError):
        default_changepoints(0.0, 3)


def test_design_first_row_at_t0():
    cfg = StConfig(n_changepoints=3, daily_order=2, weekly_order=1)
    stamps = _stamps(400)
    cps = default_changepoints(399.0, 3)
    design = build_design(stamps, cfg, changepoints=cps)
    assert design.shape == (400, cfg.design_width)
    row = design[0]
    assert row[0] == 1.0 and row[1] == 0.0  # offset and elapsed time
    np.testing.assert_array_equal(row[2:5], 0.0)  # hinges inactive at t0
    # fourier blocks interleave (sin, cos) per order; at t=0 sin=0 cos=1
    np.testing.assert_allclose(row[5:], [0.0, 1.0, 0.0, 1.0, 0.0, 1.0], atol=1e-15)


def test_daily_columns_repeat_every_24_hours():
    cfg = StConfig(n_changepoints=0, daily_order=3, weekly_order=1)
    stamps = _stamps(48)
    a = build_design(stamps, cfg, changepoints=np.empty(0))
    b = build_design(stamps + 24 * HOUR, cfg, t0=stamps[0], changepoints=np.empty(0))
    daily = slice(2, 2 + 6)
    np.testing.assert_allclose(a[:, daily], b[:, daily], atol=1e-9)
    weekly = slice(2 + 6, None)
    assert not np.allclose(a[:, weekly], b[:, weekly], atol=1e-3)


# ---------------------------------------------------------------------- fit


def test_fit_recovers_pure_line():
    t = np.arange(500.0)
    model = fit_st(hourly(5.0 + 2.0 * t))
    assert model.offset == pytest.approx(5.0, abs=1e-3)
    assert model.base_slope == pytest.approx(2.0, abs=1e-3)
    assert np.max(np.abs(model.deltas)) < 1e-3
    assert np.max(np.abs(model.daily_coeffs)) < 1e-3
    assert np.max(np.abs(model.weekly_coeffs)) < 1e-3


def test_fit_recovers_daily_sine_amplitude():
    t = np.arange(480.0)
    y = 10.0 * np.sin(2.0 * np.pi * t / 24.0)
    model = fit_st(hourly(y))
    assert model.daily_coeffs[0] == pytest.approx(10.0, abs=0.5)  # order-1 sin
    rest = np.concatenate([model.daily_coeffs[1:], model.weekly_coeffs])
    assert np.max(np.abs(rest)) < 0.5


def test_tiny_changepoint_prior_pins_trend_to_a_line():
    rng = np.random.default_rng(2)
    t = np.arange(600.0)
    kinked = np.where(t < 300, 1.0 * t, 300.0 + 3.0 * (t - 300))
    y = kinked + rng.normal(scale=0.5, size=600)
    rigid = fit_st(hourly(y), StConfig(changepoint_prior_scale=1e-6))
    assert np.max(np.abs(rigid.deltas)) < 1e-4


def test_looser_changepoint_prior_never_fits_worse():
    rng = np.random.default_rng(3)
    t = np.arange(600.0)
    kinked = np.where(t < 300, 1.0 * t, 300.0 + 3.0 * (t - 300))
    ts = hourly(kinked + rng.normal(scale=0.5, size=600))

    def train_rmse(scale):
        model = fit_st(ts, StConfig(changepoint_prior_scale=scale))
        return float(np.sqrt(np.mean((model.predict(ts.timestamps) - ts.values) ** 2)))

    assert train_rmse(0.5) <= train_rmse(1e-6) + 1e-9


def test_fit_solves_the_penalized_normal_equations():
    rng = np.random.default_rng(7)
    ts = hourly(100 + 0.5 * np.arange(500.0) + rng.normal(scale=2.0, size=500))
    cfg = StConfig()
    model = fit_st(ts, cfg)
    span = float(ts.hours_from_start()[-1])
    design = build_design(ts.timestamps, cfg,
                          changepoints=default_changepoints(span, cfg.n_changepoints))
    beta = np.concatenate([
        [model.offset, model.base_slope],
        model.deltas, model.daily_coeffs, model.weekly_coeffs,
    ])
    penalties = np.zeros(cfg.design_width)
    penalties[2 : 2 + cfg.n_changepoints] = cfg.changepoint_prior_scale**-2
    penalties[2 + cfg.n_changepoints :] = cfg.seasonality_prior_scale**-2
    grad = 2.0 * (design.T @ (design @ beta - ts.values) + penalties * beta)
    assert np.max(np.abs(grad)) < 1e-6


def test_fit_requirements():
    with pytest.raises(ValueError, match="two full weeks"):
        fit_st(hourly(np.arange(100.0)))
    # long enough span needs more points than design columns
    with pytest.raises(ValueError, match="missing"):
        vals = np.arange(500.0)
        vals[3] = np.nan
        fit_st(hourly(vals))


def test_fit_is_deterministic():
    rng = np.random.default_rng(4)
    ts = hourly(50 + rng.normal(size=400))
    a, b = fit_st(ts), fit_st(ts)
    np.testing.assert_array_equal(a.deltas, b.deltas)
    np.testing.assert_array_equal(a.daily_coeffs, b.daily_coeffs)
    assert a.offset == b.offset


def test_criterion_shape_line_plus_sine():
    rng = np.random.default_rng(0)
    t = np.arange(600.0)
    y = 50.0 + 2.0 * t + 10.0 * np.sin(2.0 * np.pi * t / 24.0) + rng.normal(size=600)
    train, test = hourly(y).split(0.8)
    model = fit_st(train)
    assert model.base_slope == pytest.approx(2.0, abs=0.1)
    assert model.daily_coeffs[0] == pytest.approx(10.0, abs=0.5)
    preds = forecast_st(model, len(test)).values
    rmse = float(np.sqrt(np.mean((preds - test.values) ** 2)))
    assert rmse <= 1.5  # noise sigma is 1


# ----------------------------------------------------------------- forecast


def test_forecast_continues_a_plain_line():
    model = _hand_model(offset=0.0, slope=1.0, n_hours=100)
    fc = forecast_st(model, horizon=3)
    np.testing.assert_allclose(fc.values, [100.0, 101.0, 102.0], atol=1e-9)
    assert fc.timestamps()[0] == model.last_timestamp + HOUR


def test_forecast_day_apart_points_differ_by_daily_slope():
    model = _hand_model(offset=5.0, slope=0.25, daily=[3.0, 1.0], n_hours=200)
    fc = forecast_st(model, horizon=72)
    # daily block is exactly 24-periodic, so the gap is pure trend
    np.testing.assert_allclose(fc.values[24:] - fc.values[:-24], 24 * 0.25, atol=1e-9)


def test_forecast_prefix_property():
    model = _hand_model(offset=1.0, slope=0.1, daily=[2.0, -1.0], n_hours=50)
    long = forecast_st(model, horizon=720)
    short = forecast_st(model, horizon=50)
    assert len(long) == 720
    np.testing.assert_array_equal(long.values[:50], short.values)
    with pytest.raises(ValueError, match="horizon"):
        forecast_st(model, horizon=0)


def test_decompose_additivity_is_exact():
    rng = np.random.default_rng(12)
    ts = hourly(200 + 0.3 * np.arange(400.0) + rng.normal(size=400))
    model = fit_st(ts)
    stamps = _stamps(30, start="2024-02-01T07:00")
    parts = decompose(model, stamps)
    np.testing.assert_array_equal(
        parts["total"], parts["trend"] + parts["daily"] + parts["weekly"]
    )
    np.testing.assert_array_equal(parts["total"], model.predict(stamps))


def test_model_validation():
    cfg = StConfig(n_changepoints=2, daily_order=1, weekly_order=1)
    t0 = np.datetime64("2024-01-01T00:00", "s")
    with pytest.raises(ValueError, match="changepoints and deltas"):
        StModel(config=cfg, t0=t0, changepoints=np.array([1.0]), offset=0.0,
                base_slope=0.0, deltas=np.array([1.0]),
                daily_coeffs=np.zeros(2), weekly_coeffs=np.zeros(2),
                last_timestamp=t0)
    with pytest.raises(ValueError, match="daily coefficient"):
        StModel(config=cfg, t0=t0, changepoints=np.array([1.0, 2.0]), offset=0.0,
                base_slope=0.0, deltas=np.zeros(2),
                daily_coeffs=np.zeros(4), weekly_coeffs=np.zeros(2),
                last_timestamp=t0)


# --------------------------------------------------------------------- tune


def _tune_series(seed=0, n=560):
    rng = np.random.default_rng(seed)
    t = np.arange(float(n))
    y = (100.0 + 0.2 * t + 8.0 * np.sin(2.0 * np.pi * t / 24.0)
         + 4.0 * np.sin(2.0 * np.pi * t / 168.0) + rng.normal(size=n))
    return hourly(y)


def test_tune_singleton_ranges_return_that_point():
    ts = _tune_series()
    tuned = tune_st(ts, ((0.07, 0.07), (12.0, 12.0)),
                    ga_generations=2, population_size=3)
    assert tuned.changepoint_prior_scale == pytest.approx(0.07)
    assert tuned.seasonality_prior_scale == pytest.approx(12.0)


def test_tuned_config_never_loses_to_the_default_holdout():
    ts = _tune_series(seed=5)
    base = StConfig()
    tuned, history = tune_st(ts, ((0.01, 1.0), (1.0, 50.0)),
                             ga_generations=3, population_size=4,
                             base_config=base, seed=1, return_history=True)
    assert len(history) == 3  # one entry per generation sweep

    def holdout_rmse(cfg):
        train, hold = ts.split(0.75)
        model = fit_st(train, cfg)
        preds = forecast_st(model, len(hold)).values
        return float(np.sqrt(np.mean((preds - hold.values) ** 2)))

    assert holdout_rmse(tuned) <= holdout_rmse(base) + 1e-9


def test_tune_validation():
    ts = _tune_series()
    with pytest.raises(ValueError, match="lo <= hi"):
        tune_st(ts, ((1.0, 0.5), (1.0, 2.0)))
    with pytest.raises(ValueError, match="ga_generations"):
        tune_st(ts, ((0.1, 1.0), (1.0, 2.0)), ga_generations=0)
    with pytest.raises(ValueError, match="holdout"):
        tune_st(ts, ((0.1, 1.0), (1.0, 2.0)), holdout_fraction=1.5)


def test_load_ds_y(tmp_path):
    path = tmp_path / "frame.csv"
    path.write_text(
        "ds,y\n2024-01-01T00:00:00,1.5\n2024-01-01T01:00:00,2.5\n",
        encoding="utf-8",
    )
    ts = load_ds_y(path)
    np.testing.assert_array_equal(ts.values, [1.5, 2.5])
