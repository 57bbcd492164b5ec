"""Surrogate-model attribution for the forecasters.

Workflow: build 24-lag feature rows from the series, label each row with
the forecaster's own one-step prediction, fit a tree-ensemble surrogate
(bagged trees for the statistical models, boosted trees for the LSTM),
then attribute surrogate predictions to the lag features with kernel
SHAP. Rankings are mean absolute attributions over a seeded sample of
explained rows.

kernel_shap enumerates all coalitions exactly up to 12 features and
switches to paired coalition sampling above that. The efficiency
identity base + sum(phi) = f(x) holds exactly in both modes because the
last attribution is eliminated through that constraint rather than
estimated.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import best_split_scan, tree_predict
from .errors import ShapError
from .series import TimeSeries, _readonly, make_lag_matrix

LAG_WINDOW = 24
EXACT_SHAP_LIMIT = 12
WLS_RIDGE = 1e-10


# ---------------------------------------------------------------------------
# regression trees


@dataclass(frozen=True, eq=False)
class RegressionTree:
    """Array-encoded binary regression tree.

    Node i is a leaf when feature[i] < 0 (prediction value[i]); otherwise
    rows with row[feature[i]] <= threshold[i] descend to left[i] and the
    rest to right[i]. Node 0 is the root.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    max_depth: int | None
    min_samples_leaf: int

    def __post_init__(self):
        feat = np.array(self.feature, dtype=np.int64, copy=True)
        thr = np.array(self.threshold, dtype=np.float64, copy=True)
        left = np.array(self.left, dtype=np.int64, copy=True)
        right = np.array(self.right, dtype=np.int64, copy=True)
        val = np.array(self.value, dtype=np.float64, copy=True)
        n = len(feat)
        if not (len(thr) == len(left) == len(right) == len(val) == n) or n == 0:
            raise ValueError("node arrays must be nonempty and equally long")
        internal = feat >= 0
        if np.any((left[internal] < 0) | (right[internal] < 0)):
            raise ValueError("every internal node needs two children")
        if not np.all(np.isfinite(val[~internal])):
            raise ValueError("leaf values must be finite")
        for name, arr in (
            ("feature", feat), ("threshold", thr), ("left", left),
            ("right", right), ("value", val),
        ):
            object.__setattr__(self, name, _readonly(arr))

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def predict(self, rows) -> np.ndarray:
        rows = np.ascontiguousarray(rows, dtype=np.float64)
        if rows.ndim != 2:
            raise ValueError("rows must be a 2-D array")
        return tree_predict(
            self.feature, self.threshold, self.left, self.right, self.value, rows
        )


def _check_training_data(features, targets) -> tuple[np.ndarray, np.ndarray]:
    rows = np.ascontiguousarray(features, dtype=np.float64)
    y = np.ascontiguousarray(targets, dtype=np.float64)
    if rows.ndim != 2 or y.ndim != 1 or len(rows) != len(y):
        raise ValueError("need (n, m) features with n aligned targets")
    if len(rows) == 0:
        raise ValueError("cannot fit on empty data")
    if not (np.all(np.isfinite(rows)) and np.all(np.isfinite(y))):
        raise ValueError("training data must be finite")
    return rows, y


def fit_cart(
    features,
    targets,
    max_depth: int | None = None,
    min_samples_leaf: int = 1,
    rng: np.random.Generator | None = None,
    features_per_split: int | None = None,
) -> RegressionTree:
    """Greedy variance-reduction tree.

    Splits at midpoints between sorted distinct values; each side keeps at
    least min_samples_leaf rows. Ties between candidate splits go to the
    lowest feature index, then the lowest threshold. Zero-gain splits are
    taken while the node is impure, so unlimited depth drives training
    error to zero whenever rows are distinct. features_per_split draws a
    random feature subset per split from rng (the bagging hook); both
    default to considering every feature.
    """
    rows, y = _check_training_data(features, targets)
    if min_samples_leaf < 1:
        raise ValueError("min_samples_leaf must be >= 1")
    if max_depth is not None and max_depth < 0:
        raise ValueError("max_depth must be >= 0 when given")
    n_features = rows.shape[1]
    if features_per_split is not None and not 1 <= features_per_split <= n_features:
        raise ValueError("features_per_split must lie in [1, n_features]")
    subset = features_per_split if features_per_split not in (None, n_features) else None
    if subset is not None and rng is None:
        raise ValueError("feature subsetting needs an rng")

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    # (row indices, depth, slot); LIFO with right pushed first keeps the
    # node layout deterministic.
    stack = [(np.arange(len(rows)), 0, new_node())]
    while stack:
        idx, depth, slot = stack.pop()
        node_y = y[idx]
        value[slot] = float(node_y.mean())
        if (
            len(idx) < 2 * min_samples_leaf
            or (max_depth is not None and depth >= max_depth)
            or node_y.min() == node_y.max()
        ):
            continue
        if subset is None:
            candidates = range(n_features)
        else:
            candidates = np.sort(rng.choice(n_features, size=subset, replace=False))
        best = (np.inf, -1, 0.0)
        for f in candidates:
            order = np.argsort(rows[idx, f], kind="stable")
            thr, score, found = best_split_scan(
                rows[idx[order], f], node_y[order], min_samples_leaf
            )
            if found and score < best[0]:
                best = (score, int(f), thr)
        if best[1] < 0:
            continue  # no feature admits a legal split
        _, f, thr = best
        go_left = rows[idx, f] <= thr
        feature[slot] = f
        threshold[slot] = thr
        left[slot] = new_node()
        right[slot] = new_node()
        stack.append((idx[~go_left], depth + 1, right[slot]))
        stack.append((idx[go_left], depth + 1, left[slot]))

    return RegressionTree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        value=np.array(value),
        max_depth=max_depth,
        min_samples_leaf=min_samples_leaf,
    )


@dataclass(frozen=True, eq=False)
class ForestSurrogate:
    """Bagged trees; the prediction is the plain mean over trees."""

    trees: tuple[RegressionTree, ...]
    n_trees: int
    features_per_split: int
    seed: int

    def __post_init__(self):
        if len(self.trees) != self.n_trees or self.n_trees < 1:
            raise ValueError("tree count must match n_trees >= 1")

    def predict(self, rows) -> np.ndarray:
        rows = np.ascontiguousarray(rows, dtype=np.float64)
        total = self.trees[0].predict(rows)
        for tree in self.trees[1:]:
            total = total + tree.predict(rows)
        return total / self.n_trees


def fit_forest(
    features,
    targets,
    n_trees: int = 100,
    max_depth: int | None = 8,
    features_per_split: int | None = None,
    seed: int = 0,
    bootstrap: bool = True,
) -> ForestSurrogate:
    """Bootstrap-aggregated trees with per-split random feature subsets.

    Each tree sees a same-size sample drawn with replacement (bootstrap
    can be turned off to recover plain CART behaviour for n_trees=1).
    features_per_split defaults to ceil(n_features / 3). Fully
    deterministic for a given seed: every tree gets its own child stream.
    """
    rows, y = _check_training_data(features, targets)
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    n_features = rows.shape[1]
    if features_per_split is None:
        features_per_split = math.ceil(n_features / 3)
    if not 1 <= features_per_split <= n_features:
        raise ValueError("features_per_split must lie in [1, n_features]")
    streams = np.random.SeedSequence(seed).spawn(n_trees)
    trees = []
    for stream in streams:
        rng = np.random.default_rng(stream)
        if bootstrap:
            sample = rng.integers(0, len(rows), size=len(rows))
        else:
            sample = np.arange(len(rows))
        trees.append(
            fit_cart(
                rows[sample],
                y[sample],
                max_depth=max_depth,
                min_samples_leaf=1,
                rng=rng,
                features_per_split=features_per_split,
            )
        )
    return ForestSurrogate(
        trees=tuple(trees),
        n_trees=n_trees,
        features_per_split=features_per_split,
        seed=seed,
    )


@dataclass(frozen=True, eq=False)
class BoostedSurrogate:
    """Additive stagewise trees: base + lr * sum of residual fits."""

    base_prediction: float
    trees: tuple[RegressionTree, ...]
    learning_rate: float

    def predict(self, rows) -> np.ndarray:
        rows = np.ascontiguousarray(rows, dtype=np.float64)
        total = np.full(len(rows), self.base_prediction)
        for tree in self.trees:
            total = total + self.learning_rate * tree.predict(rows)
        return total


def fit_gbt(
    features,
    targets,
    n_rounds: int = 200,
    max_depth: int | None = 4,
    learning_rate: float = 0.1,
    seed: int = 0,
) -> BoostedSurrogate:
    """Squared-error gradient boosting over depth-limited trees.

    Round t fits a tree to the current residuals and the model adds
    lr * tree. Training MSE is non-increasing per round for lr <= 1.
    n_rounds=0 yields the constant mean predictor. The fit itself is
    deterministic; seed is accepted for interface symmetry with the
    forest and reserved for subsampling variants.
    """
    rows, y = _check_training_data(features, targets)
    if n_rounds < 0:
        raise ValueError("n_rounds must be >= 0")
    if not 0.0 < learning_rate <= 1.0:
        raise ValueError("learning rate must lie in (0, 1]")
    del seed
    base = float(y.mean())
    residual = y - base
    trees = []
    for _ in range(n_rounds):
        tree = fit_cart(rows, residual, max_depth=max_depth, min_samples_leaf=1)
        residual = residual - learning_rate * tree.predict(rows)
        trees.append(tree)
    return BoostedSurrogate(
        base_prediction=base, trees=tuple(trees), learning_rate=learning_rate
    )


# ---------------------------------------------------------------------------
# kernel SHAP


def _coalition_weight(m: int, size: int) -> float:
    return (m - 1) / (math.comb(m, size) * size * (m - size))


def _exact_coalitions(m: int) -> tuple[np.ndarray, np.ndarray]:
    codes = np.arange(1, 2**m - 1, dtype=np.uint32)
    masks = (codes[:, None] >> np.arange(m)) & 1
    masks = masks.astype(bool)
    sizes = masks.sum(axis=1)
    weights = np.array([_coalition_weight(m, int(s)) for s in sizes])
    return masks, weights


def _sampled_coalitions(
    m: int, n_coalitions: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    # Sizes are drawn with probability proportional to the total kernel
    # weight at that size, so unit WLS weights are already correct; each
    # draw is paired with its complement to cancel odd/even size noise.
    sizes = np.arange(1, m)
    probs = (m - 1) / (sizes * (m - sizes))
    probs = probs / probs.sum()
    n_pairs = max(1, n_coalitions // 2)
    masks = np.zeros((2 * n_pairs, m), dtype=bool)
    drawn = rng.choice(sizes, size=n_pairs, p=probs)
    for row, size in enumerate(drawn):
        members = rng.choice(m, size=int(size), replace=False)
        masks[2 * row, members] = True
        masks[2 * row + 1] = ~masks[2 * row]
    return masks, np.ones(len(masks))


def _masked_predictions(predict, x, background, masks) -> np.ndarray:
    blended = np.where(masks[:, None, :], x[None, None, :], background[None, :, :])
    flat = blended.reshape(-1, len(x))
    out = np.asarray(predict(flat), dtype=np.float64).reshape(len(masks), -1)
    return out.mean(axis=1)


def kernel_shap(
    predict,
    instance,
    background,
    n_coalitions: int = 2048,
    seed=0,
) -> tuple[np.ndarray, float]:
    """Attribute predict(instance) to its features, Shapley style.

    predict must accept an (n, m) batch and return n values. Absent
    features are marginalized by substituting background rows. Up to 12
    features every proper coalition is enumerated and weighted by
    (m-1) / (C(m,|z|) |z| (m-|z|)); above that, n_coalitions paired
    coalitions are sampled size-proportionally to the same kernel. The
    last feature's value comes from the efficiency constraint
    sum(phi) = f(x) - base, so local accuracy is exact by construction.
    The reduced least squares carries a 1e-10 ridge; a system singular
    beyond that raises ShapError.

    Returns (attributions, base_value) with base_value the mean
    prediction over the background.
    """
    x = np.ascontiguousarray(instance, dtype=np.float64)
    bg = np.ascontiguousarray(background, dtype=np.float64)
    if x.ndim != 1 or len(x) == 0:
        raise ValueError("instance must be a nonempty 1-D row")
    if bg.ndim != 2 or len(bg) == 0 or bg.shape[1] != len(x):
        raise ValueError("background must be a nonempty (n, m) array matching the instance")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(bg))):
        raise ValueError("instance and background must be finite")
    if n_coalitions < 2:
        raise ValueError("n_coalitions must be >= 2")
    m = len(x)
    base = float(np.mean(np.asarray(predict(bg), dtype=np.float64)))
    fx = float(np.asarray(predict(x[None, :]), dtype=np.float64).reshape(-1)[0])
    if m == 1:
        return np.array([fx - base]), base
    if m <= EXACT_SHAP_LIMIT:
        masks, weights = _exact_coalitions(m)
    else:
        masks, weights = _sampled_coalitions(m, n_coalitions, np.random.default_rng(seed))
    v = _masked_predictions(predict, x, bg, masks)
    # Eliminate phi[m-1] via the efficiency constraint and solve the
    # reduced weighted least squares for the remaining coefficients.
    z = masks.astype(np.float64)
    design = z[:, :-1] - z[:, -1:]
    response = v - base - z[:, -1] * (fx - base)
    weighted = design * weights[:, None]
    gram = weighted.T @ design + WLS_RIDGE * np.eye(m - 1)
    moment = weighted.T @ response
    try:
        head = np.linalg.solve(gram, moment)
    except np.linalg.LinAlgError:
        raise ShapError("coalition regression is singular") from None
    if not np.all(np.isfinite(head)):
        raise ShapError("coalition regression produced non-finite attributions")
    phi = np.append(head, (fx - base) - head.sum())
    return phi, base


# ---------------------------------------------------------------------------
# report assembly


@dataclass(frozen=True)
class ShapConfig:
    """Sampling budget knobs for the attribution pass."""

    n_coalitions: int = 2048
    n_background: int = 100
    n_instances: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.n_coalitions < 2:
            raise ValueError("n_coalitions must be >= 2")
        if self.n_background < 1 or self.n_instances < 1:
            raise ValueError("background and instance counts must be >= 1")


@dataclass(frozen=True)
class ExplainConfig:
    """Surrogate and attribution settings for shap_report."""

    forest_trees: int = 100
    forest_depth: int = 8
    boost_rounds: int = 200
    boost_depth: int = 4
    boost_learning_rate: float = 0.1
    holdout_fraction: float = 0.25
    min_r2: float = 0.7
    shap: ShapConfig = field(default_factory=ShapConfig)

    def __post_init__(self):
        if self.forest_trees < 1 or self.boost_rounds < 0:
            raise ValueError("surrogate sizes must be positive")
        if not 0.0 < self.holdout_fraction < 1.0:
            raise ValueError("holdout fraction must lie strictly between 0 and 1")


@dataclass(frozen=True, eq=False)
class ShapReport:
    """Mean-|attribution| ranking plus the raw per-instance matrix.

    per_instance_values has one row per explained instance, columns
    aligned with feature_names; lag_1 is the most recent hour. For every
    row base_value + sum(attributions) equals the surrogate prediction.
    """

    model_kind: str
    feature_names: tuple[str, ...]
    per_instance_values: np.ndarray
    predictions: np.ndarray
    explained_rows: np.ndarray
    base_value: float
    mean_abs: np.ndarray
    surrogate_r2: float
    warning: str | None = None

    def __post_init__(self):
        values = np.array(self.per_instance_values, dtype=np.float64, copy=True)
        preds = np.array(self.predictions, dtype=np.float64, copy=True)
        rows = np.array(self.explained_rows, dtype=np.int64, copy=True)
        mean_abs = np.array(self.mean_abs, dtype=np.float64, copy=True)
        if values.ndim != 2 or values.shape[1] != len(self.feature_names):
            raise ValueError("attribution matrix must be (instances, features)")
        if len(preds) != len(values) or len(rows) != len(values):
            raise ValueError("need one prediction and row index per instance")
        if len(mean_abs) != len(self.feature_names) or np.any(mean_abs < 0):
            raise ValueError("mean_abs must be one non-negative value per feature")
        object.__setattr__(self, "per_instance_values", _readonly(values))
        object.__setattr__(self, "predictions", _readonly(preds))
        object.__setattr__(self, "explained_rows", _readonly(rows))
        object.__setattr__(self, "mean_abs", _readonly(mean_abs))

    def ranking(self) -> list[tuple[str, float]]:
        """Features by descending mean |attribution|; ties keep lag order."""
        order = np.argsort(-self.mean_abs, kind="stable")
        return [(self.feature_names[i], float(self.mean_abs[i])) for i in order]

    def to_json_dict(self) -> dict:
        return {
            "model_kind": self.model_kind,
            "base_value": self.base_value,
            "surrogate_r2": self.surrogate_r2,
            "warning": self.warning,
            "features": [
                {"name": name, "mean_abs_shap": score}
                for name, score in self.ranking()
            ],
        }


def write_shap_instances(report: ShapReport, path) -> None:
    """Per-instance attribution CSV: row index, prediction, one feature column each."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["row", "prediction", *report.feature_names])
        for i in range(len(report.explained_rows)):
            writer.writerow(
                [
                    int(report.explained_rows[i]),
                    repr(float(report.predictions[i])),
                    *(repr(float(v)) for v in report.per_instance_values[i]),
                ]
            )


def _forecaster_targets(model_kind: str, model, series: TimeSeries, lag) -> np.ndarray:
    """One-step predictions of the fitted forecaster at each lag-row target time."""
    if model_kind == "arima":
        from .arima import one_step_predictions

        warmup = model.order.p + model.order.d
        if warmup > lag.window:
            raise ValueError("model warmup exceeds the lag window")
        preds = one_step_predictions(model, series)
        return preds[lag.window - warmup :]
    if model_kind == "seasonal-trend":
        return model.predict(series.timestamps[lag.window :])
    from .lstm import predict_rows

    net, scaler = model
    scaled = scaler.transform(series.values)
    window = lag.window
    rows = np.lib.stride_tricks.sliding_window_view(scaled[:-1], window)
    return scaler.inverse(predict_rows(net, np.ascontiguousarray(rows)))


def shap_report(
    model_kind: str,
    series: TimeSeries,
    cfg: ExplainConfig = ExplainConfig(),
    model=None,
) -> ShapReport:
    """Explain a fitted forecaster through a tree surrogate.

    model_kind picks the surrogate family: bagged trees for "arima" and
    "seasonal-trend", boosted trees for "lstm". model is the fitted
    forecaster itself (for "lstm": the (network, scaler) pair). The
    surrogate trains on the chronological head of the lag rows and is
    scored on the held-out tail; an R^2 below cfg.min_r2 attaches a
    warning to the report instead of failing. The seasonal surrogate sees
    the model's trend/daily/weekly component values as three extra
    features after the 24 lags.
    """
    kinds = ("arima", "seasonal-trend", "lstm")
    if model_kind not in kinds:
        raise ValueError(f"model_kind must be one of {kinds}")
    if model is None:
        raise ValueError("shap_report needs the fitted forecaster")
    series.require_observed("explain")
    lag = make_lag_matrix(series, window=LAG_WINDOW)
    n = len(lag.targets)
    if n < 8:
        raise ValueError("need at least 8 lag rows to fit a surrogate")
    # column j holds lag_{j+1}: the j+1 hours old value
    features = np.ascontiguousarray(lag.rows[:, ::-1])
    names = [f"lag_{j}" for j in range(1, LAG_WINDOW + 1)]
    targets = np.asarray(
        _forecaster_targets(model_kind, model, series, lag), dtype=np.float64
    )
    if len(targets) != n:
        raise ValueError("forecaster predictions do not align with the lag rows")
    if model_kind == "seasonal-trend":
        stamps = series.timestamps[LAG_WINDOW:]
        extra = np.column_stack(
            [model.trend_at(stamps), model.daily_at(stamps), model.weekly_at(stamps)]
        )
        features = np.hstack([features, extra])
        names += ["trend", "daily", "weekly"]

    split = min(max(int(round((1.0 - cfg.holdout_fraction) * n)), 1), n - 1)
    if model_kind == "lstm":
        surrogate = fit_gbt(
            features[:split],
            targets[:split],
            n_rounds=cfg.boost_rounds,
            max_depth=cfg.boost_depth,
            learning_rate=cfg.boost_learning_rate,
            seed=cfg.shap.seed,
        )
    else:
        surrogate = fit_forest(
            features[:split],
            targets[:split],
            n_trees=cfg.forest_trees,
            max_depth=cfg.forest_depth,
            seed=cfg.shap.seed,
        )
    held_pred = surrogate.predict(features[split:])
    held_true = targets[split:]
    ss_res = float(np.sum((held_true - held_pred) ** 2))
    ss_tot = float(np.sum((held_true - held_true.mean()) ** 2))
    if ss_tot > 0.0:
        r2 = 1.0 - ss_res / ss_tot
    else:
        r2 = 1.0 if ss_res < 1e-12 else -np.inf
    warning = None
    if r2 < cfg.min_r2:
        warning = (
            f"surrogate holdout R^2 {r2:.3f} below {cfg.min_r2}; "
            "attributions describe the surrogate, not the forecaster"
        )

    rng = np.random.default_rng(cfg.shap.seed)
    bg_rows = rng.choice(split, size=min(cfg.shap.n_background, split), replace=False)
    background = features[bg_rows]
    explained = np.sort(rng.choice(n, size=min(cfg.shap.n_instances, n), replace=False))
    values = np.empty((len(explained), features.shape[1]))
    base = 0.0
    for i, row in enumerate(explained):
        phi, base = kernel_shap(
            surrogate.predict,
            features[row],
            background,
            n_coalitions=cfg.shap.n_coalitions,
            seed=[cfg.shap.seed, int(row)],
        )
        values[i] = phi
    return ShapReport(
        model_kind=model_kind,
        feature_names=tuple(names),
        per_instance_values=values,
        predictions=surrogate.predict(features[explained]),
        explained_rows=explained,
        base_value=base,
        mean_abs=np.abs(values).mean(axis=0),
        surrogate_r2=float(r2),
        warning=warning,
    )
