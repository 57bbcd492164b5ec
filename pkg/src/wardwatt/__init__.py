"""Hourly energy-demand forecasting, load balancing, and attribution.

Three forecasters (ARIMA, an additive trend+seasonality model, a
from-scratch LSTM), a genetic-algorithm load balancer, surrogate-model
attribution, and a CLI that drives the whole pipeline from one config.

The numeric hot paths (LSTM layer passes, tree split scans, tree
evaluation) run through a compiled extension when it is available and a
pure-numpy fallback otherwise; `kernel_backend()` reports which one is
active (env var WARDWATT_KERNELS forces the choice).
"""

from ._kernels import BACKEND as _BACKEND
from ._kernels import available_backends
from .arima import (
    ArimaModel,
    ArimaOrder,
    fit_arima,
    forecast_arima,
    one_step_predictions,
)
from .config import PipelineConfig, load_config, parse_config, resolve_seed
from .errors import (
    ConfigError,
    DataGapWarning,
    DegenerateScaleError,
    FitError,
    IngestError,
    PreprocessError,
    ShapError,
    StageError,
    TrainingDivergenceError,
    WardwattError,
)
from .explain import (
    BoostedSurrogate,
    ExplainConfig,
    ForestSurrogate,
    RegressionTree,
    ShapConfig,
    ShapReport,
    fit_cart,
    fit_forest,
    fit_gbt,
    kernel_shap,
    shap_report,
)
from .ga import (
    BalanceResult,
    GaConfig,
    LstmTuneData,
    adaptive_mutate,
    init_population,
    load_balance_fitness,
    run_steady_state,
    run_worst_replacement,
    sbx_crossover,
    tournament_select,
    tune_lstm,
)
from .lstm import (
    LstmHyperparams,
    LstmNetwork,
    TrainConfig,
    gradient_check,
    init_network,
    network_from_dict,
    network_to_dict,
    predict_multi,
    predict_rows,
    train,
)
from .seasonal import (
    StConfig,
    StModel,
    build_design,
    decompose,
    fit_st,
    forecast_st,
    load_ds_y,
    tune_st,
)
from .series import (
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
from .synthetic import GENERATOR_VERSION, facility_columns, generate_demand

__version__ = "0.1.0"


def kernel_backend() -> str:
    """Name of the active kernel backend: "compiled" or "python"."""
    return _BACKEND
