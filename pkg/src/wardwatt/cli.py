"""Command-line pipeline driver.

Subcommands cover the full workflow: ingest raw demand data, fit and
forecast each model, tune hyperparameters, balance allocations against a
forecast, explain a fitted model, evaluate all three on a chronological
split, correlate facility channels, and assemble the report bundle.

Every stage reads the same JSON config (see config.py for the schema),
honors --seed/--input/--output overrides, writes its artifacts into the
output directory, and records its wall-clock duration in timings.json.
`report` gathers whatever artifacts exist into report.json + charts.

Exit codes: 0 success, 1 config or stage failure (one-line
"ERROR <scope>: <message>" on stderr), 2 usage errors (argparse).
"""

from __future__ import annotations

import argparse
import csv
import glob
import json
import os
import sys
import time
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from .arima import fit_arima, forecast_arima
from .charts import line_chart, write_chart
from .config import (
    GA_STRATEGIES,
    PipelineConfig,
    load_config,
    parse_config,
    resolve_seed,
)
from .errors import ConfigError, StageError, WardwattError
from .explain import shap_report, write_shap_instances
from .ga import (
    DEFAULT_LSTM_SEARCH_SPACE,
    LstmTuneData,
    GaConfig,
    init_population,
    load_balance_fitness,
    run_steady_state,
    run_worst_replacement,
    tune_lstm,
)
from .lstm import init_network, predict_multi, train
from .report import ChartData, RunReport, emit_report, jsonable
from .seasonal import fit_st, forecast_st, tune_st
from .series import (
    HOUR,
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
from .synthetic import GENERATOR_VERSION, facility_columns, generate_demand

MODELS = ("arima", "seasonal", "lstm")
# model_kind strings used by the explain module
EXPLAIN_KINDS = {"arima": "arima", "seasonal": "seasonal-trend", "lstm": "lstm"}
STREAM_LSTM_INIT = 3
TIMINGS_FILE = "timings.json"


def _derive_seed(seed: int, stream: int) -> int:
    """Stable per-stage substream so stages never share raw seeds."""
    return int(np.random.SeedSequence((seed, stream)).generate_state(1)[0])


def _print_error(scope: str, exc: BaseException) -> None:
    message = " ".join(str(exc).split()) or exc.__class__.__name__
    print(f"ERROR {scope}: {message}", file=sys.stderr)


def _warn(scope: str, message) -> None:
    print(f"WARNING {scope}: {' '.join(str(message).split())}", file=sys.stderr)


def _resolve_config(args) -> PipelineConfig:
    if args.config is not None:
        cfg = load_config(args.config, cli_seed=args.seed)
    else:
        cfg = parse_config({}, seed_override=resolve_seed(args.seed, None))
    if cfg.seed < 0:
        raise ConfigError("seed", "must be >= 0")
    if getattr(args, "input", None):
        if not os.path.exists(args.input):
            raise ConfigError("input.path", f"file not found: {args.input}")
        cfg = replace(cfg, input_path=args.input)
    if getattr(args, "output", None):
        cfg = replace(cfg, output_dir=args.output)
    return cfg


def _out_dir(cfg: PipelineConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _record_timing(out: Path, stage: str, seconds: float) -> None:
    path = out / TIMINGS_FILE
    timings = {}
    if path.exists():
        try:
            with open(path, encoding="utf-8") as handle:
                timings = json.load(handle)
        except (OSError, json.JSONDecodeError):
            timings = {}
    timings[stage] = round(seconds, 3)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(timings, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _load_raw(cfg: PipelineConfig, scope: str) -> TimeSeries:
    """Raw (possibly gappy) input series; warnings surface as stderr lines."""
    if cfg.input_path is None:
        return generate_demand(cfg.synthetic_hours, seed=cfg.synthetic_seed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        series = load_series(
            cfg.input_path,
            timestamp_column=cfg.timestamp_column,
            value_column=cfg.value_column,
        )
    for item in caught:
        _warn(scope, item.message)
    return series


def _clean_for(cfg: PipelineConfig, raw: TimeSeries, model: str | None) -> TimeSeries:
    outliers = cfg.outliers.for_model(model) if model is not None else False
    return preprocess(raw, forward_fill=cfg.forward_fill, outlier_3sigma=outliers)


def _slice_from(series: TimeSeries, start: int) -> TimeSeries:
    return TimeSeries(
        timestamps=series.timestamps[start:], values=series.values[start:]
    )


def _fit_lstm(cfg: PipelineConfig, series: TimeSeries):
    scaled, scaler = minmax_scale(series)
    lag = make_lag_matrix(scaled, window=cfg.lstm_window)
    net = init_network(
        cfg.lstm_hp,
        seed=_derive_seed(cfg.seed, STREAM_LSTM_INIT),
        window=cfg.lstm_window,
    )
    net, _ = train(net, lag, cfg.train_cfg)
    return net, scaler, scaled


def _forecast_model(cfg: PipelineConfig, model: str, series: TimeSeries, horizon: int):
    """Fit `model` on the whole series and forecast `horizon` hours."""
    if model == "arima":
        return forecast_arima(fit_arima(series, cfg.arima_order), horizon)
    if model == "seasonal":
        return forecast_st(fit_st(series, cfg.st_config), horizon)
    net, scaler, scaled = _fit_lstm(cfg, series)
    return predict_multi(
        net,
        scaled.values[-cfg.lstm_window:],
        horizon,
        scaler,
        start=series.end + HOUR,
    )


def _write_forecast_csv(path, forecast) -> None:
    stamps = forecast.timestamps()
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["timestamp", "forecast"])
        for stamp, value in zip(stamps, forecast.values):
            writer.writerow([str(stamp), repr(float(value))])


def _read_forecast_csv(path, scope: str):
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            fields = reader.fieldnames or []
            if "forecast" not in fields:
                raise StageError(scope, f"{path}: missing a 'forecast' column")
            stamps, values = [], []
            for row_num, row in enumerate(reader, start=1):
                try:
                    values.append(float(row["forecast"]))
                except (TypeError, ValueError):
                    raise StageError(
                        scope, f"{path}: row {row_num}: non-numeric forecast"
                    ) from None
                stamps.append(row.get("timestamp", str(row_num)))
    except FileNotFoundError:
        raise StageError(scope, f"forecast file not found: {path}") from None
    if not values:
        raise StageError(scope, f"{path}: no forecast rows")
    return stamps, np.asarray(values)


# ---------------------------------------------------------------------------
# subcommands


def cmd_ingest(args, cfg: PipelineConfig) -> int:
    t0 = time.perf_counter()
    out = _out_dir(cfg)
    raw = _load_raw(cfg, "ingest")
    missing = int(np.isnan(raw.values).sum())
    clean = _clean_for(cfg, raw, model=None)
    path = out / "clean.csv"
    write_series_csv(
        clean,
        path,
        timestamp_column=cfg.timestamp_column,
        value_column=cfg.value_column,
    )
    payload = {
        "rows": len(clean),
        "missing_filled": missing,
        "source": cfg.input_path or "synthetic",
        "file": "clean.csv",
    }
    if cfg.input_path is None:
        payload["generator_version"] = GENERATOR_VERSION
        payload["synthetic_seed"] = cfg.synthetic_seed
    with open(out / "ingest.json", "w", encoding="utf-8") as handle:
        json.dump(jsonable(payload), handle, indent=2, sort_keys=True)
        handle.write("\n")
    _record_timing(out, "ingest", time.perf_counter() - t0)
    print(f"ingest: {len(clean)} rows ({missing} filled) -> {path}")
    return 0


def cmd_forecast(args, cfg: PipelineConfig) -> int:
    t0 = time.perf_counter()
    out = _out_dir(cfg)
    model = args.model
    defaults = {
        "arima": cfg.arima_horizon,
        "seasonal": cfg.seasonal_horizon,
        "lstm": cfg.evaluation_horizon,
    }
    horizon = args.horizon if args.horizon is not None else defaults[model]
    if horizon < 1:
        raise ConfigError("horizon", "must be >= 1")
    raw = _load_raw(cfg, "forecast")
    series = _clean_for(cfg, raw, model)
    forecast = _forecast_model(cfg, model, series, horizon)
    path = out / f"forecast_{model}.csv"
    _write_forecast_csv(path, forecast)
    _record_timing(out, f"forecast_{model}", time.perf_counter() - t0)
    print(f"forecast {model}: {horizon} hours -> {path}")
    return 0


def cmd_tune_lstm(args, cfg: PipelineConfig) -> int:
    t0 = time.perf_counter()
    out = _out_dir(cfg)
    raw = _load_raw(cfg, "tune-lstm")
    series = _clean_for(cfg, raw, "lstm")
    train_series, test_series = series.split(cfg.split_fraction)
    if len(test_series) < 2:
        raise StageError("tune-lstm", "test split is too short")
    scaled_train, scaler = minmax_scale(train_series)
    scaled_full = apply_scale(series, scaler)
    tail = _slice_from(scaled_full, len(train_series) - cfg.lstm_window)
    data = LstmTuneData(
        train=make_lag_matrix(scaled_train, window=cfg.lstm_window),
        test=make_lag_matrix(tail, window=cfg.lstm_window),
        scaler=scaler,
    )
    tune_ga = GaConfig(
        population_size=cfg.tune.lstm_population,
        generations=cfg.tune.lstm_generations,
        tournament_k=cfg.ga_cfg.tournament_k,
        sbx_eta=cfg.ga_cfg.sbx_eta,
        base_mutation_prob=cfg.ga_cfg.base_mutation_prob,
        seed=cfg.seed,
    )
    best, history = tune_lstm(
        DEFAULT_LSTM_SEARCH_SPACE, data, tune_ga, return_history=True
    )
    payload = {
        "units1": best.units1,
        "units2": best.units2,
        "dropout1_gene": best.dropout1_gene,
        "dropout2_gene": best.dropout2_gene,
        "dropout1": best.dropout1,
        "dropout2": best.dropout2,
        "best_test_mae": -float(max(fits.max() for fits in history)),
        "generations": len(history),
    }
    path = out / "lstm_hyperparams.json"
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(jsonable(payload), handle, indent=2, sort_keys=True)
        handle.write("\n")
    _record_timing(out, "tune-lstm", time.perf_counter() - t0)
    print(
        f"tune-lstm: units=({best.units1}, {best.units2}) "
        f"dropout=({best.dropout1:.1f}, {best.dropout2:.1f}) "
        f"test mae={payload['best_test_mae']:.3f} -> {path}"
    )
    return 0


def cmd_tune_seasonal(args, cfg: PipelineConfig) -> int:
    t0 = time.perf_counter()
    out = _out_dir(cfg)
    raw = _load_raw(cfg, "tune-seasonal")
    series = _clean_for(cfg, raw, "seasonal")
    tuned, history = tune_st(
        series,
        (cfg.tune.changepoint_range, cfg.tune.seasonality_range),
        ga_generations=cfg.tune.seasonal_generations,
        population_size=cfg.tune.seasonal_population,
        base_config=cfg.st_config,
        seed=cfg.seed,
        return_history=True,
    )
    payload = {
        "n_changepoints": tuned.n_changepoints,
        "daily_order": tuned.daily_order,
        "weekly_order": tuned.weekly_order,
        "changepoint_prior_scale": tuned.changepoint_prior_scale,
        "seasonality_prior_scale": tuned.seasonality_prior_scale,
        "best_holdout_rmse": -float(max(fits.max() for fits in history)),
        "generations": len(history),
    }
    path = out / "seasonal_config.json"
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(jsonable(payload), handle, indent=2, sort_keys=True)
        handle.write("\n")
    _record_timing(out, "tune-seasonal", time.perf_counter() - t0)
    print(
        f"tune-seasonal: changepoint_prior_scale={tuned.changepoint_prior_scale:.4f} "
        f"seasonality_prior_scale={tuned.seasonality_prior_scale:.4f} "
        f"holdout rmse={payload['best_holdout_rmse']:.3f} -> {path}"
    )
    return 0


def cmd_balance(args, cfg: PipelineConfig) -> int:
    t0 = time.perf_counter()
    out = _out_dir(cfg)
    strategy = args.strategy or cfg.ga_strategy
    source = args.from_file or str(out / "forecast_seasonal.csv")
    stamps, values = _read_forecast_csv(source, "balance")
    hours = min(cfg.balance_hours, len(values))
    stamps, values = stamps[:hours], values[:hours]
    runner = run_steady_state if strategy == "steady" else run_worst_replacement
    result = runner(values, cfg.ga_cfg)
    # recompute the pre-evolution best for the improvement figure; the
    # run's rng stream starts with exactly this draw
    rng = np.random.default_rng(cfg.ga_cfg.seed)
    initial_pop = init_population(cfg.ga_cfg.population_size, values, rng)
    initial_best = max(load_balance_fitness(ind, values) for ind in initial_pop)
    improvement = 0.0
    if initial_best < 0:
        improvement = 100.0 * (1.0 - result.best_fitness / initial_best)

    alloc_path = out / "allocation.csv"
    with open(alloc_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["timestamp", "forecast", "allocation"])
        for stamp, fc, alloc in zip(stamps, values, result.best_solution):
            writer.writerow([stamp, repr(float(fc)), repr(float(alloc))])
    hist_path = out / "balance_history.csv"
    with open(hist_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["generation", "best_fitness", "mean_fitness"])
        for gen in range(len(result.fitness_history)):
            writer.writerow(
                [
                    gen + 1,
                    repr(float(result.fitness_history[gen])),
                    repr(float(result.mean_history[gen])),
                ]
            )
    payload = {
        "strategy": result.strategy,
        "hours": hours,
        "source": os.path.basename(source),
        "best_fitness": float(result.best_fitness),
        "initial_best_fitness": float(initial_best),
        "improvement_pct": improvement,
        "mean_abs_deviation_kw": float(
            np.abs(result.best_solution - values).mean()
        ),
        "generations": len(result.fitness_history),
    }
    with open(out / "balance.json", "w", encoding="utf-8") as handle:
        json.dump(jsonable(payload), handle, indent=2, sort_keys=True)
        handle.write("\n")
    _record_timing(out, "balance", time.perf_counter() - t0)
    print(
        f"balance {result.strategy}: {hours} hours, total deviation "
        f"{-result.best_fitness:.2f} kW (init {-initial_best:.2f}, "
        f"{improvement:.1f}% better) -> {alloc_path}"
    )
    return 0


def cmd_explain(args, cfg: PipelineConfig) -> int:
    t0 = time.perf_counter()
    out = _out_dir(cfg)
    model_name = args.model
    raw = _load_raw(cfg, "explain")
    series = _clean_for(cfg, raw, model_name)
    if model_name == "arima":
        fitted = fit_arima(series, cfg.arima_order)
    elif model_name == "seasonal":
        fitted = fit_st(series, cfg.st_config)
    else:
        net, scaler, _ = _fit_lstm(cfg, series)
        fitted = (net, scaler)
    report = shap_report(
        EXPLAIN_KINDS[model_name], series, cfg.explain_cfg, model=fitted
    )
    if report.warning:
        _warn("explain", report.warning)
    json_path = out / f"shap_{model_name}.json"
    with open(json_path, "w", encoding="utf-8") as handle:
        json.dump(jsonable(report.to_json_dict()), handle, indent=2, sort_keys=True)
        handle.write("\n")
    write_shap_instances(report, out / f"shap_{model_name}_instances.csv")
    top = ", ".join(f"{name} ({value:.3f})" for name, value in report.ranking()[:3])
    _record_timing(out, f"explain_{model_name}", time.perf_counter() - t0)
    print(f"explain {model_name}: top features {top} -> {json_path}")
    return 0


def cmd_evaluate(args, cfg: PipelineConfig) -> int:
    t0 = time.perf_counter()
    out = _out_dir(cfg)
    raw = _load_raw(cfg, "evaluate")
    base_clean = _clean_for(cfg, raw, model=None)
    _, test_series = base_clean.split(cfg.split_fraction)
    horizon = min(cfg.evaluation_horizon, len(test_series))
    actual = test_series.values[:horizon]
    actual_stamps = test_series.timestamps[:horizon]

    models_payload = {}
    for model in MODELS:
        series = _clean_for(cfg, raw, model)
        train_series, _ = series.split(cfg.split_fraction)
        forecast = _forecast_model(cfg, model, train_series, horizon)
        metrics = score(actual, forecast.values)
        models_payload[model] = metrics.as_dict()
        _write_forecast_csv(out / f"forecast_{model}_eval.csv", forecast)
        print(
            f"evaluate {model}: mae={metrics.mae:.4f} rmse={metrics.rmse:.4f} "
            f"over {horizon} hours"
        )

    with open(out / "actuals_eval.csv", "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["timestamp", "actual"])
        for stamp, value in zip(actual_stamps, actual):
            writer.writerow([str(stamp), repr(float(value))])

    payload = {
        "split_fraction": cfg.split_fraction,
        "horizon": horizon,
        "rows": len(base_clean),
        "dataset": {
            "source": cfg.input_path or "synthetic",
            "generator_version": (
                GENERATOR_VERSION if cfg.input_path is None else None
            ),
            "synthetic_seed": cfg.synthetic_seed if cfg.input_path is None else None,
        },
        "models": models_payload,
    }
    with open(out / "evaluation.json", "w", encoding="utf-8") as handle:
        json.dump(jsonable(payload), handle, indent=2, sort_keys=True)
        handle.write("\n")
    _record_timing(out, "evaluate", time.perf_counter() - t0)
    print(f"evaluate: wrote {out / 'evaluation.json'}")
    return 0


def _read_csv_columns(path, names, timestamp_column, scope):
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        fields = reader.fieldnames or []
        if names is None:
            names = [f for f in fields if f != timestamp_column]
        missing = [n for n in names if n not in fields]
        if missing:
            raise StageError(scope, f"{path}: missing column(s) {', '.join(missing)}")
        columns = {name: [] for name in names}
        for row_num, row in enumerate(reader, start=1):
            for name in names:
                try:
                    columns[name].append(float(row[name]))
                except (TypeError, ValueError):
                    raise StageError(
                        scope, f"{path}: row {row_num}: non-numeric {name!r}"
                    ) from None
    return {name: np.asarray(vals) for name, vals in columns.items()}


def cmd_correlate(args, cfg: PipelineConfig) -> int:
    t0 = time.perf_counter()
    out = _out_dir(cfg)
    names = None
    if args.columns:
        names = [c.strip() for c in args.columns.split(",") if c.strip()]
        if len(names) < 2:
            raise ConfigError("columns", "need at least two column names")
    if cfg.input_path is None:
        columns = facility_columns(cfg.synthetic_hours, seed=cfg.synthetic_seed)
        if names is not None:
            missing = [n for n in names if n not in columns]
            if missing:
                raise StageError(
                    "correlate",
                    f"synthetic data has no column(s) {', '.join(missing)}",
                )
            columns = {name: columns[name] for name in names}
    else:
        columns = _read_csv_columns(
            cfg.input_path, names, cfg.timestamp_column, "correlate"
        )
    if len(columns) < 2:
        raise StageError("correlate", "need at least two columns to correlate")
    corr = pearson_corr(columns)
    path = out / "correlations.csv"
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["", *corr.labels])
        for i, label in enumerate(corr.labels):
            writer.writerow([label, *(repr(float(v)) for v in corr.values[i])])
    pairs = []
    for i in range(len(corr.labels)):
        for j in range(i + 1, len(corr.labels)):
            pairs.append(f"{corr.labels[i]}~{corr.labels[j]} r={corr.values[i, j]:.3f}")
    _record_timing(out, "correlate", time.perf_counter() - t0)
    print(f"correlate: {'; '.join(pairs)} -> {path}")
    return 0


def _read_json(path):
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


def _read_series_column(path, column):
    values = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if column not in (reader.fieldnames or []):
            return None
        for row in reader:
            values.append(float(row[column]))
    return np.asarray(values)


def cmd_report(args, cfg: PipelineConfig) -> int:
    t0 = time.perf_counter()
    out = _out_dir(cfg)
    report = RunReport(seed=cfg.seed, config_echo=cfg.to_dict())

    if (out / "ingest.json").exists():
        report.add_stage("ingest", _read_json(out / "ingest.json"))
    forecast_files = {}
    for path in sorted(glob.glob(str(out / "forecast_*.csv"))):
        stem = Path(path).stem
        if stem.endswith("_eval"):
            continue
        values = _read_series_column(path, "forecast")
        if values is not None:
            forecast_files[stem.removeprefix("forecast_")] = len(values)
    if forecast_files:
        report.add_stage("forecast", {"rows": forecast_files})
    for name in ("tune-lstm", "tune-seasonal"):
        artifact = out / (
            "lstm_hyperparams.json" if name == "tune-lstm" else "seasonal_config.json"
        )
        if artifact.exists():
            report.add_stage(name, _read_json(artifact))
    if (out / "evaluation.json").exists():
        report.add_stage("evaluate", _read_json(out / "evaluation.json"))
    if (out / "balance.json").exists():
        report.add_stage("balance", _read_json(out / "balance.json"))
    for path in sorted(glob.glob(str(out / "shap_*.json"))):
        report.add_stage("explain", _read_json(path))
    if (out / "correlations.csv").exists():
        with open(out / "correlations.csv", newline="", encoding="utf-8") as handle:
            rows = list(csv.reader(handle))
        labels = rows[0][1:]
        matrix = [[float(v) for v in row[1:]] for row in rows[1:]]
        report.add_stage("correlate", {"labels": labels, "matrix": matrix})

    # Figure-style charts from whatever evaluation/balance artifacts exist.
    eval_series = {}
    actual = (
        _read_series_column(out / "actuals_eval.csv", "actual")
        if (out / "actuals_eval.csv").exists()
        else None
    )
    if actual is not None:
        eval_series["actual"] = actual
    for model in MODELS:
        path = out / f"forecast_{model}_eval.csv"
        if path.exists():
            values = _read_series_column(path, "forecast")
            if values is not None:
                eval_series[model] = values
    if len(eval_series) >= 2:
        report.add_chart(
            ChartData(
                name="forecast_vs_actual",
                title="Forecast vs actual demand (test window)",
                series=eval_series,
            )
        )
    if (out / "allocation.csv").exists():
        forecast = _read_series_column(out / "allocation.csv", "forecast")
        allocation = _read_series_column(out / "allocation.csv", "allocation")
        if forecast is not None and allocation is not None:
            report.add_chart(
                ChartData(
                    name="forecast_vs_allocation",
                    title="Balanced allocation vs forecast demand",
                    series={"forecast": forecast, "allocation": allocation},
                )
            )
    if (out / "balance_history.csv").exists():
        best = _read_series_column(out / "balance_history.csv", "best_fitness")
        mean = _read_series_column(out / "balance_history.csv", "mean_fitness")
        if best is not None and mean is not None:
            report.add_chart(
                ChartData(
                    name="balance_convergence",
                    title="Load-balancing fitness by generation",
                    series={"best": best, "population mean": mean},
                    y_label="fitness",
                )
            )

    if (out / TIMINGS_FILE).exists():
        try:
            for stage, seconds in _read_json(out / TIMINGS_FILE).items():
                report.timings[stage] = float(seconds)
        except (json.JSONDecodeError, TypeError, ValueError):
            pass
    report.timings["report"] = round(time.perf_counter() - t0, 3)
    manifest = emit_report(report, out)
    names = ", ".join(entry["name"] for entry in manifest["files"])
    print(f"report: {len(manifest['files'])} files ({names}) -> {out / 'manifest.json'}")
    return 0


# ---------------------------------------------------------------------------
# parser / entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to the JSON run config")
    common.add_argument("--seed", type=int, help="override the run seed")
    common.add_argument("--input", help="override the input CSV path")
    common.add_argument("--output", help="override the output directory")

    parser = argparse.ArgumentParser(
        prog="wardwatt",
        description="Hourly demand forecasting, load balancing, and attribution.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common],
                       help="validate, clean, and write the canonical CSV")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("forecast", parents=[common],
                       help="fit one model on all data and forecast ahead")
    p.add_argument("--model", required=True, choices=MODELS)
    p.add_argument("--horizon", type=int, help="hours ahead (default per model)")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("tune-lstm", parents=[common],
                       help="search layer sizes and dropout genes")
    p.set_defaults(func=cmd_tune_lstm)

    p = sub.add_parser("tune-seasonal", parents=[common],
                       help="search the two prior scales")
    p.set_defaults(func=cmd_tune_seasonal)

    p = sub.add_parser("balance", parents=[common],
                       help="fit an allocation to a saved forecast")
    p.add_argument("--strategy", choices=GA_STRATEGIES,
                   help="replacement scheme (default from config)")
    p.add_argument("--from", dest="from_file",
                   help="forecast CSV (default <output>/forecast_seasonal.csv)")
    p.set_defaults(func=cmd_balance)

    p = sub.add_parser("explain", parents=[common],
                       help="surrogate attribution for one fitted model")
    p.add_argument("--model", required=True, choices=MODELS)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("evaluate", parents=[common],
                       help="score all three models on the chronological split")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("correlate", parents=[common],
                       help="pairwise correlations between facility channels")
    p.add_argument("--columns", help="comma-separated column names")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("report", parents=[common],
                       help="assemble report.json, comparison.csv, and charts")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
    except ConfigError as exc:
        _print_error("config", exc)
        return 1
    try:
        return args.func(args, cfg)
    except ConfigError as exc:
        _print_error("config", exc)
        return 1
    except StageError as exc:
        _print_error(exc.stage, exc)
        return 1
    except WardwattError as exc:
        _print_error(args.command, exc)
        return 1
    except (ValueError, OSError, np.linalg.LinAlgError) as exc:
        _print_error(args.command, exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
