"""Run configuration: one JSON file, validated into typed settings.

Schema (every key optional; defaults shown):

    {
      "seed": 0,
      "split_fraction": 0.8,
      "evaluation_horizon": 48,
      "output_dir": "out",
      "input": {
        "path": null,                 // null -> bundled synthetic generator
        "timestamp_column": "timestamp",
        "value_column": "demand_kw",
        "synthetic_hours": 1440,
        "synthetic_seed": 7
      },
      "preprocess": {
        "forward_fill": true,
        // per-model 3-sigma outlier refill on the training series
        "outlier_3sigma": {"arima": false, "seasonal": true, "lstm": false}
      },
      "arima":    {"p": 2, "d": 1, "q": 2, "horizon": 48},
      "seasonal": {"n_changepoints": 25, "daily_order": 4, "weekly_order": 3,
                   "changepoint_prior_scale": 0.05,
                   "seasonality_prior_scale": 10.0, "horizon": 720},
      "lstm":     {"units1": 50, "units2": 50,
                   "dropout1_gene": 2, "dropout2_gene": 2, "window": 72,
                   "epochs": 50, "batch_size": 32, "learning_rate": 0.001},
      "ga":       {"population_size": 20, "generations": 100,
                   "tournament_k": 3, "sbx_eta": 2.0,
                   "base_mutation_prob": 0.2, "strategy": "steady",
                   "balance_hours": 50},
      "tune":     {"lstm_generations": 5, "lstm_population": 6,
                   "seasonal_generations": 10, "seasonal_population": 10,
                   "changepoint_range": [0.001, 0.5],
                   "seasonality_range": [0.01, 20.0]},
      "explain":  {"forest_trees": 100, "forest_depth": 8,
                   "boost_rounds": 200, "boost_depth": 4,
                   "boost_learning_rate": 0.1,
                   "n_coalitions": 2048, "n_background": 100,
                   "n_instances": 100}
    }

Numbers are plain decimals, seeds integers. Unknown keys and wrong types
fail fast with the offending field's dotted name.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .arima import ArimaOrder
from .errors import ConfigError
from .explain import ExplainConfig, ShapConfig
from .ga import GaConfig
from .lstm import LstmHyperparams, TrainConfig
from .seasonal import StConfig

GA_STRATEGIES = ("steady", "worst")


@dataclass(frozen=True)
class OutlierFlags:
    """Which model pipelines refill 3-sigma outliers before fitting."""

    arima: bool = False
    seasonal: bool = True
    lstm: bool = False

    def for_model(self, model: str) -> bool:
        return getattr(self, model)


@dataclass(frozen=True)
class TuneConfig:
    """Budgets and search ranges for the two tuning subcommands."""

    lstm_generations: int = 5
    lstm_population: int = 6
    seasonal_generations: int = 10
    seasonal_population: int = 10
    changepoint_range: tuple[float, float] = (0.001, 0.5)
    seasonality_range: tuple[float, float] = (0.01, 20.0)

    def __post_init__(self):
        if self.lstm_generations < 1 or self.seasonal_generations < 1:
            raise ValueError("tuning generations must be >= 1")
        if self.lstm_population < 2 or self.seasonal_population < 2:
            raise ValueError("tuning populations must be >= 2")
        for name in ("changepoint_range", "seasonality_range"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi):
                raise ValueError(f"{name} must be positive with lo <= hi")


@dataclass(frozen=True)
class PipelineConfig:
    """Fully resolved run settings; the report echoes to_dict() verbatim."""

    seed: int = 0
    split_fraction: float = 0.8
    evaluation_horizon: int = 48
    output_dir: str = "out"
    input_path: str | None = None
    timestamp_column: str = "timestamp"
    value_column: str = "demand_kw"
    synthetic_hours: int = 1440
    synthetic_seed: int = 7
    forward_fill: bool = True
    outliers: OutlierFlags = field(default_factory=OutlierFlags)
    arima_order: ArimaOrder = field(default_factory=lambda: ArimaOrder(2, 1, 2))
    arima_horizon: int = 48
    st_config: StConfig = field(default_factory=StConfig)
    seasonal_horizon: int = 720
    lstm_hp: LstmHyperparams = field(
        default_factory=lambda: LstmHyperparams(50, 50, 2, 2)
    )
    lstm_window: int = 72
    train_cfg: TrainConfig = field(default_factory=TrainConfig)
    ga_cfg: GaConfig = field(default_factory=GaConfig)
    ga_strategy: str = "steady"
    balance_hours: int = 50
    tune: TuneConfig = field(default_factory=TuneConfig)
    explain_cfg: ExplainConfig = field(default_factory=ExplainConfig)

    def __post_init__(self):
        if not 0.0 < self.split_fraction < 1.0:
            raise ConfigError("split_fraction", "must lie strictly between 0 and 1")
        for name in ("evaluation_horizon", "arima_horizon", "seasonal_horizon",
                     "balance_hours", "lstm_window", "synthetic_hours"):
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be >= 1")
        if self.ga_strategy not in GA_STRATEGIES:
            raise ConfigError("ga.strategy", f"must be one of {GA_STRATEGIES}")

    def to_dict(self) -> dict:
        """Plain-JSON echo of every resolved setting."""
        return {
            "seed": self.seed,
            "split_fraction": self.split_fraction,
            "evaluation_horizon": self.evaluation_horizon,
            "output_dir": self.output_dir,
            "input": {
                "path": self.input_path,
                "timestamp_column": self.timestamp_column,
                "value_column": self.value_column,
                "synthetic_hours": self.synthetic_hours,
                "synthetic_seed": self.synthetic_seed,
            },
            "preprocess": {
                "forward_fill": self.forward_fill,
                "outlier_3sigma": {
                    "arima": self.outliers.arima,
                    "seasonal": self.outliers.seasonal,
                    "lstm": self.outliers.lstm,
                },
            },
            "arima": {
                "p": self.arima_order.p,
                "d": self.arima_order.d,
                "q": self.arima_order.q,
                "horizon": self.arima_horizon,
            },
            "seasonal": {
                "n_changepoints": self.st_config.n_changepoints,
                "daily_order": self.st_config.daily_order,
                "weekly_order": self.st_config.weekly_order,
                "changepoint_prior_scale": self.st_config.changepoint_prior_scale,
                "seasonality_prior_scale": self.st_config.seasonality_prior_scale,
                "horizon": self.seasonal_horizon,
            },
            "lstm": {
                "units1": self.lstm_hp.units1,
                "units2": self.lstm_hp.units2,
                "dropout1_gene": self.lstm_hp.dropout1_gene,
                "dropout2_gene": self.lstm_hp.dropout2_gene,
                "window": self.lstm_window,
                "epochs": self.train_cfg.epochs,
                "batch_size": self.train_cfg.batch_size,
                "learning_rate": self.train_cfg.learning_rate,
            },
            "ga": {
                "population_size": self.ga_cfg.population_size,
                "generations": self.ga_cfg.generations,
                "tournament_k": self.ga_cfg.tournament_k,
                "sbx_eta": self.ga_cfg.sbx_eta,
                "base_mutation_prob": self.ga_cfg.base_mutation_prob,
                "strategy": self.ga_strategy,
                "balance_hours": self.balance_hours,
            },
            "tune": {
                "lstm_generations": self.tune.lstm_generations,
                "lstm_population": self.tune.lstm_population,
                "seasonal_generations": self.tune.seasonal_generations,
                "seasonal_population": self.tune.seasonal_population,
                "changepoint_range": list(self.tune.changepoint_range),
                "seasonality_range": list(self.tune.seasonality_range),
            },
            "explain": {
                "forest_trees": self.explain_cfg.forest_trees,
                "forest_depth": self.explain_cfg.forest_depth,
                "boost_rounds": self.explain_cfg.boost_rounds,
                "boost_depth": self.explain_cfg.boost_depth,
                "boost_learning_rate": self.explain_cfg.boost_learning_rate,
                "n_coalitions": self.explain_cfg.shap.n_coalitions,
                "n_background": self.explain_cfg.shap.n_background,
                "n_instances": self.explain_cfg.shap.n_instances,
            },
        }


_SECTIONS = {
    "input": {"path", "timestamp_column", "value_column", "synthetic_hours",
              "synthetic_seed"},
    "preprocess": {"forward_fill", "outlier_3sigma"},
    "arima": {"p", "d", "q", "horizon"},
    "seasonal": {"n_changepoints", "daily_order", "weekly_order",
                 "changepoint_prior_scale", "seasonality_prior_scale", "horizon"},
    "lstm": {"units1", "units2", "dropout1_gene", "dropout2_gene", "window",
             "epochs", "batch_size", "learning_rate"},
    "ga": {"population_size", "generations", "tournament_k", "sbx_eta",
           "base_mutation_prob", "strategy", "balance_hours"},
    "tune": {"lstm_generations", "lstm_population", "seasonal_generations",
             "seasonal_population", "changepoint_range", "seasonality_range"},
    "explain": {"forest_trees", "forest_depth", "boost_rounds", "boost_depth",
                "boost_learning_rate", "n_coalitions", "n_background",
                "n_instances"},
}
_TOP_LEVEL = {"seed", "split_fraction", "evaluation_horizon", "output_dir",
              *_SECTIONS}


def _section(raw: dict, name: str) -> dict:
    sec = raw.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(name, "must be a JSON object")
    for key in sec:
        if key not in _SECTIONS[name]:
            raise ConfigError(f"{name}.{key}", "unknown field")
    return sec


def _get(sec: dict, field_name: str, default, kind, label: str):
    value = sec.get(field_name, default)
    if kind is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    elif kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif kind is bool:
        ok = isinstance(value, bool)
    else:
        ok = isinstance(value, kind)
    if not ok:
        raise ConfigError(label, f"expected {kind.__name__}")
    return value


def _get_range(sec: dict, field_name: str, default, label: str) -> tuple[float, float]:
    value = sec.get(field_name, list(default))
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)
    ):
        raise ConfigError(label, "expected [lo, hi]")
    return float(value[0]), float(value[1])


def _build(section_name: str, builder, **kwargs):
    try:
        return builder(**kwargs)
    except ValueError as exc:
        raise ConfigError(section_name, str(exc)) from None


def parse_config(raw: dict, seed_override: int | None = None) -> PipelineConfig:
    """Validate a parsed JSON object into a PipelineConfig.

    seed_override replaces the file's seed after validation; load_config
    uses it to apply the --seed flag / WARDWATT_SEED precedence.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be a JSON object")
    for key in raw:
        if key not in _TOP_LEVEL:
            raise ConfigError(key, "unknown field")

    inp = _section(raw, "input")
    path = inp.get("path")
    if path is not None and not isinstance(path, str):
        raise ConfigError("input.path", "expected a string or null")

    pre = _section(raw, "preprocess")
    out_raw = pre.get("outlier_3sigma", {})
    if not isinstance(out_raw, dict):
        raise ConfigError("preprocess.outlier_3sigma", "must be a JSON object")
    for key in out_raw:
        if key not in ("arima", "seasonal", "lstm"):
            raise ConfigError(f"preprocess.outlier_3sigma.{key}", "unknown field")
    defaults = OutlierFlags()
    outliers = _build(
        "preprocess.outlier_3sigma",
        OutlierFlags,
        arima=_get(out_raw, "arima", defaults.arima, bool,
                   "preprocess.outlier_3sigma.arima"),
        seasonal=_get(out_raw, "seasonal", defaults.seasonal, bool,
                      "preprocess.outlier_3sigma.seasonal"),
        lstm=_get(out_raw, "lstm", defaults.lstm, bool,
                  "preprocess.outlier_3sigma.lstm"),
    )

    ar = _section(raw, "arima")
    order = _build(
        "arima",
        ArimaOrder,
        p=_get(ar, "p", 2, int, "arima.p"),
        d=_get(ar, "d", 1, int, "arima.d"),
        q=_get(ar, "q", 2, int, "arima.q"),
    )

    se = _section(raw, "seasonal")
    st_defaults = StConfig()
    st = _build(
        "seasonal",
        StConfig,
        n_changepoints=_get(se, "n_changepoints", st_defaults.n_changepoints, int,
                            "seasonal.n_changepoints"),
        daily_order=_get(se, "daily_order", st_defaults.daily_order, int,
                         "seasonal.daily_order"),
        weekly_order=_get(se, "weekly_order", st_defaults.weekly_order, int,
                          "seasonal.weekly_order"),
        changepoint_prior_scale=_get(
            se, "changepoint_prior_scale", st_defaults.changepoint_prior_scale,
            float, "seasonal.changepoint_prior_scale"),
        seasonality_prior_scale=_get(
            se, "seasonality_prior_scale", st_defaults.seasonality_prior_scale,
            float, "seasonal.seasonality_prior_scale"),
    )

    ls = _section(raw, "lstm")
    hp = _build(
        "lstm",
        LstmHyperparams,
        units1=_get(ls, "units1", 50, int, "lstm.units1"),
        units2=_get(ls, "units2", 50, int, "lstm.units2"),
        dropout1_gene=_get(ls, "dropout1_gene", 2, int, "lstm.dropout1_gene"),
        dropout2_gene=_get(ls, "dropout2_gene", 2, int, "lstm.dropout2_gene"),
    )
    seed = _get(raw, "seed", 0, int, "seed")
    if seed_override is not None:
        seed = seed_override
    train_defaults = TrainConfig()
    train_cfg = _build(
        "lstm",
        TrainConfig,
        epochs=_get(ls, "epochs", train_defaults.epochs, int, "lstm.epochs"),
        batch_size=_get(ls, "batch_size", train_defaults.batch_size, int,
                        "lstm.batch_size"),
        learning_rate=_get(ls, "learning_rate", train_defaults.learning_rate,
                           float, "lstm.learning_rate"),
        seed=seed,
    )

    ga_raw = _section(raw, "ga")
    ga_defaults = GaConfig()
    strategy = _get(ga_raw, "strategy", "steady", str, "ga.strategy")
    ga_cfg = _build(
        "ga",
        GaConfig,
        population_size=_get(ga_raw, "population_size",
                             ga_defaults.population_size, int,
                             "ga.population_size"),
        generations=_get(ga_raw, "generations", ga_defaults.generations, int,
                         "ga.generations"),
        tournament_k=_get(ga_raw, "tournament_k", ga_defaults.tournament_k, int,
                          "ga.tournament_k"),
        sbx_eta=_get(ga_raw, "sbx_eta", ga_defaults.sbx_eta, float, "ga.sbx_eta"),
        base_mutation_prob=_get(ga_raw, "base_mutation_prob",
                                ga_defaults.base_mutation_prob, float,
                                "ga.base_mutation_prob"),
        seed=seed,
    )

    tu = _section(raw, "tune")
    tune_defaults = TuneConfig()
    tune = _build(
        "tune",
        TuneConfig,
        lstm_generations=_get(tu, "lstm_generations",
                              tune_defaults.lstm_generations, int,
                              "tune.lstm_generations"),
        lstm_population=_get(tu, "lstm_population",
                             tune_defaults.lstm_population, int,
                             "tune.lstm_population"),
        seasonal_generations=_get(tu, "seasonal_generations",
                                  tune_defaults.seasonal_generations, int,
                                  "tune.seasonal_generations"),
        seasonal_population=_get(tu, "seasonal_population",
                                 tune_defaults.seasonal_population, int,
                                 "tune.seasonal_population"),
        changepoint_range=_get_range(tu, "changepoint_range",
                                     tune_defaults.changepoint_range,
                                     "tune.changepoint_range"),
        seasonality_range=_get_range(tu, "seasonality_range",
                                     tune_defaults.seasonality_range,
                                     "tune.seasonality_range"),
    )

    ex = _section(raw, "explain")
    ex_defaults = ExplainConfig()
    shap_cfg = _build(
        "explain",
        ShapConfig,
        n_coalitions=_get(ex, "n_coalitions", 2048, int, "explain.n_coalitions"),
        n_background=_get(ex, "n_background", 100, int, "explain.n_background"),
        n_instances=_get(ex, "n_instances", 100, int, "explain.n_instances"),
        seed=seed,
    )
    explain_cfg = _build(
        "explain",
        ExplainConfig,
        forest_trees=_get(ex, "forest_trees", ex_defaults.forest_trees, int,
                          "explain.forest_trees"),
        forest_depth=_get(ex, "forest_depth", ex_defaults.forest_depth, int,
                          "explain.forest_depth"),
        boost_rounds=_get(ex, "boost_rounds", ex_defaults.boost_rounds, int,
                          "explain.boost_rounds"),
        boost_depth=_get(ex, "boost_depth", ex_defaults.boost_depth, int,
                         "explain.boost_depth"),
        boost_learning_rate=_get(ex, "boost_learning_rate",
                                 ex_defaults.boost_learning_rate, float,
                                 "explain.boost_learning_rate"),
        shap=shap_cfg,
    )

    return PipelineConfig(
        seed=seed,
        split_fraction=_get(raw, "split_fraction", 0.8, float, "split_fraction"),
        evaluation_horizon=_get(raw, "evaluation_horizon", 48, int,
                                "evaluation_horizon"),
        output_dir=_get(raw, "output_dir", "out", str, "output_dir"),
        input_path=path,
        timestamp_column=_get(inp, "timestamp_column", "timestamp", str,
                              "input.timestamp_column"),
        value_column=_get(inp, "value_column", "demand_kw", str,
                          "input.value_column"),
        synthetic_hours=_get(inp, "synthetic_hours", 1440, int,
                             "input.synthetic_hours"),
        synthetic_seed=_get(inp, "synthetic_seed", 7, int, "input.synthetic_seed"),
        forward_fill=_get(pre, "forward_fill", True, bool,
                          "preprocess.forward_fill"),
        outliers=outliers,
        arima_order=order,
        arima_horizon=_get(ar, "horizon", 48, int, "arima.horizon"),
        st_config=st,
        seasonal_horizon=_get(se, "horizon", 720, int, "seasonal.horizon"),
        lstm_hp=hp,
        lstm_window=_get(ls, "window", 72, int, "lstm.window"),
        train_cfg=train_cfg,
        ga_cfg=ga_cfg,
        ga_strategy=strategy,
        balance_hours=_get(ga_raw, "balance_hours", 50, int, "ga.balance_hours"),
        tune=tune,
        explain_cfg=explain_cfg,
    )


def load_config(path, cli_seed: int | None = None) -> PipelineConfig:
    """Read and validate a JSON config file.

    The resolved seed follows resolve_seed precedence, where the config
    file only participates when it sets "seed" explicitly. The input path
    (when not null) must exist at load time so stages fail before doing
    any work.
    """
    try:
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be a JSON object")
    config_seed = raw.get("seed")
    if config_seed is not None and (
        isinstance(config_seed, bool) or not isinstance(config_seed, int)
    ):
        raise ConfigError("seed", "expected int")
    cfg = parse_config(raw, seed_override=resolve_seed(cli_seed, config_seed))
    if cfg.input_path is not None and not os.path.exists(cfg.input_path):
        raise ConfigError("input.path", f"file not found: {cfg.input_path}")
    return cfg


def resolve_seed(cli_seed: int | None, config_seed: int | None) -> int:
    """Seed precedence: --seed flag, then config, then WARDWATT_SEED, then 0."""
    if cli_seed is not None:
        return cli_seed
    if config_seed is not None:
        return config_seed
    env = os.environ.get("WARDWATT_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError("WARDWATT_SEED", f"not an integer: {env!r}") from None
    return 0
