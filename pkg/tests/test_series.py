"""Series layer: ingestion, cleaning, scaling, windowing, scoring."""

import math

import numpy as np
import pytest

from conftest import hourly
from wardwatt.errors import (
    DataGapWarning,
    DegenerateScaleError,
    IngestError,
    PreprocessError,
)
from wardwatt.series import (
    HOUR,
    CorrMatrix,
    Forecast,
    LagMatrix,
    Metrics,
    ScalerParams,
    TimeSeries,
    apply_scale,
    load_series,
    make_lag_matrix,
    minmax_scale,
    pearson_corr,
    preprocess,
    score,
    write_series_csv,
)
from wardwatt.synthetic import facility_columns, generate_demand


def _write_csv(path, rows, header="timestamp,demand_kw"):
    path.write_text(header + "\n" + "\n".join(rows) + "\n", encoding="utf-8")


# ---------------------------------------------------------------- TimeSeries


def test_series_requires_hourly_grid():
    t0 = np.datetime64("2024-01-01T00:00", "s")
    stamps = np.array([t0, t0 + HOUR, t0 + 3 * HOUR])
    with pytest.raises(ValueError, match="one-hour grid"):
        TimeSeries(stamps, np.zeros(3))


def test_series_rejects_decreasing_and_short():
    t0 = np.datetime64("2024-01-01T00:00", "s")
    with pytest.raises(ValueError, match="strictly increasing"):
        TimeSeries(np.array([t0, t0 - HOUR]), np.zeros(2))
    with pytest.raises(ValueError, match="at least two"):
        TimeSeries(np.array([t0]), np.zeros(1))


def test_series_rejects_infinity_allows_nan():
    with pytest.raises(ValueError, match="never infinite"):
        hourly([1.0, np.inf])
    ts = hourly([1.0, np.nan, 3.0])
    assert ts.has_missing


def test_series_arrays_are_frozen():
    ts = hourly([1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        ts.values[0] = 9.0
    # and the constructor copied, so the source array stays free
    src = np.array([1.0, 2.0])
    hourly(src.tolist())
    src[0] = 5.0


def test_split_is_chronological():
    ts = hourly(np.arange(10.0))
    train, test = ts.split(0.8)
    assert len(train) == 8 and len(test) == 2
    assert train.end + HOUR == test.start
    with pytest.raises(ValueError):
        ts.split(1.0)
    with pytest.raises(ValueError, match="fewer than two"):
        ts.split(0.05)


def test_hours_from_start():
    ts = hourly([5.0, 6.0, 7.0])
    np.testing.assert_array_equal(ts.hours_from_start(), [0.0, 1.0, 2.0])


# ------------------------------------------------------------------- ingest


def test_load_series_basic(tmp_path):
    path = tmp_path / "demand.csv"
    _write_csv(path, [
        "2024-01-01T00:00:00,100.5",
        "2024-01-01T01:00:00,101.25",
        "2024-01-01T02:00:00,99.0",
    ])
    ts = load_series(path, "timestamp", "demand_kw")
    assert len(ts) == 3
    np.testing.assert_array_equal(ts.values, [100.5, 101.25, 99.0])
    assert ts.start == np.datetime64("2024-01-01T00:00:00", "s")


def test_load_series_duplicate_timestamp_names_row(tmp_path):
    path = tmp_path / "dup.csv"
    _write_csv(path, [
        "2024-01-01T00:00:00,1",
        "2024-01-01T01:00:00,2",
        "2024-01-01T01:00:00,3",
    ])
    with pytest.raises(IngestError, match="row 3"):
        load_series(path, "timestamp", "demand_kw")


def test_load_series_skipped_hour_is_an_error(tmp_path):
    path = tmp_path / "gap.csv"
    _write_csv(path, [
        "2024-01-01T00:00:00,1",
        "2024-01-01T02:00:00,2",
    ])
    with pytest.raises(IngestError, match="skipped hour"):
        load_series(path, "timestamp", "demand_kw")


def test_load_series_missing_values_warn_once(tmp_path):
    path = tmp_path / "missing.csv"
    _write_csv(path, [
        "2024-01-01T00:00:00,1",
        "2024-01-01T01:00:00,",
        "2024-01-01T02:00:00,nan",
        "2024-01-01T03:00:00,4",
    ])
    with pytest.warns(DataGapWarning) as caught:
        ts = load_series(path, "timestamp", "demand_kw")
    assert len(caught) == 1
    assert caught[0].message.count == 2
    assert caught[0].message.rows == (2, 3)
    assert np.isnan(ts.values[1]) and np.isnan(ts.values[2])


def test_load_series_bad_cells(tmp_path):
    bad_value = tmp_path / "v.csv"
    _write_csv(bad_value, ["2024-01-01T00:00:00,1", "2024-01-01T01:00:00,oops"])
    with pytest.raises(IngestError, match="row 2.*'oops'"):
        load_series(bad_value, "timestamp", "demand_kw")

    bad_stamp = tmp_path / "t.csv"
    _write_csv(bad_stamp, ["2024-01-01T00:00:00,1", "not-a-date,2"])
    with pytest.raises(IngestError, match="row 2"):
        load_series(bad_stamp, "timestamp", "demand_kw")


def test_load_series_header_and_size_errors(tmp_path):
    path = tmp_path / "col.csv"
    _write_csv(path, ["2024-01-01T00:00:00,1"], header="when,kw")
    with pytest.raises(IngestError, match="'timestamp' not found"):
        load_series(path, "timestamp", "demand_kw")
    short = tmp_path / "short.csv"
    _write_csv(short, ["2024-01-01T00:00:00,1"])
    with pytest.raises(IngestError, match="fewer than two"):
        load_series(short, "timestamp", "demand_kw")
    with pytest.raises(IngestError, match="cannot read"):
        load_series(tmp_path / "absent.csv", "timestamp", "demand_kw")


def test_write_series_round_trips_exactly(tmp_path):
    rng = np.random.default_rng(2)
    ts = hourly(rng.normal(100.0, 17.3, size=50))
    path = tmp_path / "rt.csv"
    write_series_csv(ts, path)
    back = load_series(path, "timestamp", "demand_kw")
    np.testing.assert_array_equal(back.values, ts.values)
    np.testing.assert_array_equal(back.timestamps, ts.timestamps)


# --------------------------------------------------------------- preprocess


def test_preprocess_forward_fills_gaps():
    ts = hourly([100.0, np.nan, 105.0])
    clean = preprocess(ts)
    np.testing.assert_array_equal(clean.values, [100.0, 100.0, 105.0])
    # consecutive gaps repeat the last observation
    run = preprocess(hourly([7.0, np.nan, np.nan, np.nan, 9.0]))
    np.testing.assert_array_equal(run.values, [7.0, 7.0, 7.0, 7.0, 9.0])


def test_preprocess_is_idempotent_on_clean_data():
    rng = np.random.default_rng(8)
    ts = hourly(rng.normal(100, 5, size=200))
    once = preprocess(ts, outlier_3sigma=True)
    twice = preprocess(once, outlier_3sigma=True)
    np.testing.assert_array_equal(once.values, twice.values)


def test_preprocess_error_paths():
    with pytest.raises(PreprocessError, match="first value is missing"):
        preprocess(hourly([np.nan, 1.0, 2.0]))
    with pytest.raises(PreprocessError, match="forward_fill disabled"):
        preprocess(hourly([1.0, np.nan, 2.0]), forward_fill=False)
    with pytest.raises(PreprocessError, match="every value"):
        preprocess(hourly([np.nan, np.nan]))


def test_outlier_removal_uses_one_pass_statistics():
    rng = np.random.default_rng(4)
    vals = rng.normal(100.0, 5.0, size=1000)
    vals[500] = 10000.0
    ts = hourly(vals)
    mean, sigma = vals.mean(), vals.std()
    clean = preprocess(ts, outlier_3sigma=True)
    # the spike takes the previous value; survivors judged by the
    # original statistics, never recomputed after removal
    assert clean.values[500] == vals[499]
    keep = np.abs(vals - mean) <= 3.0 * sigma
    np.testing.assert_array_equal(clean.values[keep], vals[keep])


def test_outlier_flag_leaves_constant_series_alone():
    ts = hourly(np.full(50, 42.0))
    clean = preprocess(ts, outlier_3sigma=True)
    np.testing.assert_array_equal(clean.values, ts.values)


def test_first_value_outlier_is_an_error():
    vals = np.full(30, 10.0)
    vals[0] = 1000.0
    with pytest.raises(PreprocessError, match="first value is an outlier"):
        preprocess(hourly(vals), outlier_3sigma=True)


# ------------------------------------------------------------------ scaling


def test_minmax_scale_examples():
    scaled, params = minmax_scale(hourly([0.0, 5.0, 10.0]))
    np.testing.assert_array_equal(scaled.values, [0.0, 0.5, 1.0])
    assert (params.minimum, params.maximum) == (0.0, 10.0)

    scaled, _ = minmax_scale(hourly([20.0, 30.0, 25.0]))
    np.testing.assert_array_equal(scaled.values, [0.0, 1.0, 0.5])


def test_scale_round_trip_and_out_of_range():
    rng = np.random.default_rng(13)
    ts = hourly(rng.normal(200, 30, size=300))
    scaled, params = minmax_scale(ts)
    np.testing.assert_allclose(params.inverse(scaled.values), ts.values, atol=1e-12)
    # later data may leave the fitted range; it maps outside [0, 1]
    later = apply_scale(hourly([params.maximum + 10.0, params.minimum - 5.0]), params)
    assert later.values[0] > 1.0 and later.values[1] < 0.0


def test_constant_series_cannot_scale():
    with pytest.raises(DegenerateScaleError):
        minmax_scale(hourly([3.0, 3.0, 3.0]))
    with pytest.raises(DegenerateScaleError):
        ScalerParams(5.0, 5.0)


def test_scaling_requires_observed_values():
    with pytest.raises(ValueError, match="missing"):
        minmax_scale(hourly([1.0, np.nan, 3.0]))


# ---------------------------------------------------------------- windowing


def test_lag_matrix_shape_example():
    ts = hourly(np.arange(1.0, 31.0))
    lag = make_lag_matrix(ts, window=24)
    assert lag.rows.shape == (6, 24)
    np.testing.assert_array_equal(lag.rows[0], np.arange(1.0, 25.0))
    assert lag.targets[0] == 25.0
    np.testing.assert_array_equal(lag.targets, np.arange(25.0, 31.0))


def test_lag_matrix_boundaries():
    one = make_lag_matrix(hourly(np.arange(25.0)), window=24)
    assert len(one) == 1
    with pytest.raises(ValueError, match="too short"):
        make_lag_matrix(hourly(np.arange(24.0)), window=24)
    with pytest.raises(ValueError, match="at least 1"):
        make_lag_matrix(hourly(np.arange(25.0)), window=0)
    with pytest.raises(ValueError, match="missing"):
        make_lag_matrix(hourly([1.0, np.nan, 3.0, 4.0]), window=2)


def test_lag_matrix_consistency_property():
    rng = np.random.default_rng(21)
    vals = rng.normal(size=40)
    ts = hourly(vals)
    for window in (1, 3, 12):
        lag = make_lag_matrix(ts, window=window)
        assert len(lag) == 40 - window
        for i in range(len(lag)):
            np.testing.assert_array_equal(lag.rows[i], vals[i : i + window])
            assert lag.targets[i] == vals[i + window]


def test_lag_matrix_validates_alignment():
    with pytest.raises(ValueError, match="aligned"):
        LagMatrix(np.zeros((3, 4)), np.zeros(2), 4)
    with pytest.raises(ValueError, match="match the row width"):
        LagMatrix(np.zeros((3, 4)), np.zeros(3), 5)
    with pytest.raises(ValueError, match="at least one row"):
        LagMatrix(np.zeros((0, 4)), np.zeros(0), 4)


# ------------------------------------------------------------------ scoring


def test_score_identity_and_offset():
    ident = score([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert ident.mae == 0.0 and ident.rmse == 0.0
    m = score([1.0, 2.0, 3.0], [2.0, 2.0, 2.0])
    assert m.mae == pytest.approx(2.0 / 3.0, abs=1e-15)
    assert m.rmse == pytest.approx(math.sqrt(2.0 / 3.0), abs=1e-15)


def test_constant_error_makes_mae_equal_rmse():
    rng = np.random.default_rng(6)
    actual = rng.normal(size=100)
    m = score(actual, actual + 2.5)
    assert m.mae == pytest.approx(2.5, abs=1e-12)
    assert m.rmse == pytest.approx(2.5, abs=1e-12)


def test_mae_never_exceeds_rmse():
    rng = np.random.default_rng(14)
    for _ in range(200):
        n = int(rng.integers(1, 60))
        m = score(rng.normal(size=n), rng.normal(size=n))
        assert m.mae <= m.rmse + 1e-12


def test_score_input_validation():
    with pytest.raises(ValueError, match="equally long"):
        score([1.0, 2.0], [1.0])
    with pytest.raises(ValueError, match="equally long"):
        score([], [])
    with pytest.raises(ValueError, match="finite"):
        score([1.0, np.nan], [1.0, 2.0])


def test_metrics_validation():
    with pytest.raises(ValueError):
        Metrics(mae=-1.0, rmse=1.0)
    with pytest.raises(ValueError):
        Metrics(mae=np.nan, rmse=1.0)


# ------------------------------------------------------------- correlations


def test_pearson_exact_cases():
    x = np.arange(50.0)
    corr = pearson_corr({"x": x, "double": 2.0 * x + 3.0, "neg": -x})
    i, j, k = corr.labels.index("x"), corr.labels.index("double"), corr.labels.index("neg")
    assert corr.values[i, j] == pytest.approx(1.0, abs=1e-12)
    assert corr.values[i, k] == pytest.approx(-1.0, abs=1e-12)


def test_pearson_independent_noise_is_near_zero():
    rng = np.random.default_rng(42)
    corr = pearson_corr({
        "a": rng.normal(size=10_000),
        "b": rng.normal(size=10_000),
    })
    assert abs(corr.values[0, 1]) < 0.05


def test_pearson_matrix_invariants():
    rng = np.random.default_rng(9)
    cols = {name: rng.normal(size=80) for name in "abcd"}
    corr = pearson_corr(cols)
    np.testing.assert_allclose(corr.values, corr.values.T, atol=0)
    np.testing.assert_array_equal(np.diag(corr.values), np.ones(4))
    assert np.all(np.abs(corr.values) <= 1.0)


def test_pearson_errors_name_the_column():
    with pytest.raises(ValueError, match="'flat'"):
        pearson_corr({"x": [1.0, 2.0, 3.0], "flat": [5.0, 5.0, 5.0]})
    with pytest.raises(ValueError, match="'short'"):
        pearson_corr({"x": [1.0, 2.0, 3.0], "short": [1.0, 2.0]})
    with pytest.raises(ValueError, match="no columns"):
        pearson_corr({})


def test_corr_matrix_must_be_square():
    with pytest.raises(ValueError, match="square"):
        CorrMatrix(("a", "b"), np.zeros((2, 3)))


# ----------------------------------------------------------------- forecast


def test_forecast_timestamps_extend_hourly():
    start = np.datetime64("2024-06-01T10:00", "s")
    fc = Forecast(values=[1.0, 2.0, 3.0], model="arima", start=start)
    stamps = fc.timestamps()
    assert stamps[0] == start
    assert np.all(np.diff(stamps) == HOUR)
    bare = Forecast(values=[1.0], model="lstm")
    with pytest.raises(ValueError, match="calendar"):
        bare.timestamps()


def test_forecast_validation():
    with pytest.raises(ValueError, match="finite"):
        Forecast(values=[1.0, np.nan], model="arima")
    with pytest.raises(ValueError, match="nonempty"):
        Forecast(values=[], model="arima")
    with pytest.raises(ValueError, match="identity"):
        Forecast(values=[1.0], model="")


# ---------------------------------------------------------------- synthetic


def test_generate_demand_is_deterministic():
    a = generate_demand(240, seed=7)
    b = generate_demand(240, seed=7)
    np.testing.assert_array_equal(a.values, b.values)
    np.testing.assert_array_equal(a.timestamps, b.timestamps)
    c = generate_demand(240, seed=8)
    assert not np.array_equal(a.values, c.values)


def test_generate_demand_shape_and_positivity():
    ts = generate_demand(24 * 14, seed=3)
    assert len(ts) == 24 * 14
    assert not ts.has_missing
    assert np.all(ts.values > 0)  # hospital load never drops to zero
    with pytest.raises(ValueError):
        generate_demand(1, seed=0)


def test_facility_columns_correlate_with_total():
    cols = facility_columns(24 * 21, seed=5)
    assert set(cols) == {"electricity_kw", "hvac_kw", "lighting_kw", "equipment_kw"}
    corr = pearson_corr(cols)
    i = corr.labels.index("electricity_kw")
    j = corr.labels.index("hvac_kw")
    assert corr.values[i, j] > 0.8  # dominant subsystem tracks the total
