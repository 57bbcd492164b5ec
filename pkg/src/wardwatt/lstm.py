"""Two-layer LSTM regressor for next-hour demand, trained by BPTT + Adam.

Architecture: scalar input -> LSTM(units1, full sequence out) -> inverted
dropout -> LSTM(units2, last step out) -> inverted dropout -> Dense(25,
ReLU) -> Dense(1, linear). Gate weights are fused per layer as a
(input+hidden, 4*hidden) matrix over [x_t, h_prev] with column blocks
ordered (input, forget, cell, output); the recurrences run through the
kernel backend (compiled when available).

Dropout rates come from integer genes: rate = gene / 10. All gradients
are exact (no truncation); gradient_check verifies them against central
finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import TrainingDivergenceError
from .series import Forecast, LagMatrix, ScalerParams, _readonly

DENSE_UNITS = 25

UNIT_BOUNDS = (20, 100)
DROPOUT_GENE_BOUNDS = (1, 5)

WEIGHTS_FORMAT_VERSION = 1


@dataclass(frozen=True)
class LstmHyperparams:
    """Layer sizes and dropout genes.

    The tuner searches units over UNIT_BOUNDS (enforced by its search
    space); the type itself accepts any positive sizes so small
    verification networks are constructible.
    """

    units1: int
    units2: int
    dropout1_gene: int
    dropout2_gene: int

    def __post_init__(self):
        for name in ("units1", "units2"):
            units = getattr(self, name)
            if not isinstance(units, int) or units < 1:
                raise ValueError(f"{name} must be a positive integer")
        for name in ("dropout1_gene", "dropout2_gene"):
            gene = getattr(self, name)
            if not isinstance(gene, int) or not (
                DROPOUT_GENE_BOUNDS[0] <= gene <= DROPOUT_GENE_BOUNDS[1]
            ):
                raise ValueError(f"{name} must be an integer in {DROPOUT_GENE_BOUNDS}")

    @property
    def dropout1(self) -> float:
        return self.dropout1_gene / 10.0

    @property
    def dropout2(self) -> float:
        return self.dropout2_gene / 10.0


@dataclass(frozen=True)
class TrainConfig:
    """Adam training settings (beta1=0.9, beta2=0.999, eps=1e-8 fixed)."""

    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning rate must be >= 0")


_PARAM_KEYS = ("w1", "b1", "w2", "b2", "wd", "bd", "wo", "bo")


@dataclass(frozen=True, eq=False)
class LstmNetwork:
    """Immutable parameter bundle; training returns a new network."""

    hyperparams: LstmHyperparams
    window: int
    seed: int
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    wd: np.ndarray
    bd: np.ndarray
    wo: np.ndarray
    bo: np.ndarray

    def __post_init__(self):
        hp = self.hyperparams
        if self.window < 1:
            raise ValueError("window must be >= 1")
        expected = {
            "w1": (1 + hp.units1, 4 * hp.units1),
            "b1": (4 * hp.units1,),
            "w2": (hp.units1 + hp.units2, 4 * hp.units2),
            "b2": (4 * hp.units2,),
            "wd": (hp.units2, DENSE_UNITS),
            "bd": (DENSE_UNITS,),
            "wo": (DENSE_UNITS,),
            "bo": (1,),
        }
        for key, shape in expected.items():
            arr = np.array(getattr(self, key), dtype=np.float64, copy=True)
            if arr.shape != shape:
                raise ValueError(f"{key} must have shape {shape}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{key} holds non-finite values")
            object.__setattr__(self, key, _readonly(arr))

    def params(self) -> dict:
        """Writable copies of all parameter arrays, keyed by name."""
        return {key: np.array(getattr(self, key)) for key in _PARAM_KEYS}


def _glorot(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def init_network(hp: LstmHyperparams, seed: int, window: int = 24) -> LstmNetwork:
    """Scaled-uniform weight init; biases zero except forget gates at 1.

    Each gate block of a fused matrix shares the same fan pair
    (input+hidden -> hidden), so the whole block is drawn with one bound.
    Draw order: w1, w2, dense, head.
    """
    rng = np.random.default_rng(seed)
    u1, u2 = hp.units1, hp.units2
    w1 = _glorot(rng, (1 + u1, 4 * u1), 1 + u1, u1)
    w2 = _glorot(rng, (u1 + u2, 4 * u2), u1 + u2, u2)
    wd = _glorot(rng, (u2, DENSE_UNITS), u2, DENSE_UNITS)
    wo = _glorot(rng, (DENSE_UNITS,), DENSE_UNITS, 1)
    b1 = np.zeros(4 * u1)
    b1[u1 : 2 * u1] = 1.0
    b2 = np.zeros(4 * u2)
    b2[u2 : 2 * u2] = 1.0
    return LstmNetwork(
        hyperparams=hp,
        window=window,
        seed=seed,
        w1=w1,
        b1=b1,
        w2=w2,
        b2=b2,
        wd=wd,
        bd=np.zeros(DENSE_UNITS),
        wo=wo,
        bo=np.zeros(1),
    )


def dropout_mask(shape, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted-dropout mask: zeros with probability rate, else 1/(1-rate).

    Multiplying an activation by the mask keeps its expectation unchanged.
    """
    if not 0.0 <= rate < 1.0:
        raise ValueError("dropout rate must lie in [0, 1)")
    if rate == 0.0:
        return np.ones(shape)
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


def _forward_pass(params: dict, rates, rows: np.ndarray, training: bool, rng):
    """Batch forward; rows is (B, window). Returns (preds, cache)."""
    B, T = rows.shape
    x = np.ascontiguousarray(rows.T).reshape(T, B, 1)
    h1, c1, g1 = K.lstm_layer_forward(x, params["w1"], params["b1"])
    mask1 = None
    h1d = h1
    if training and rates[0] > 0.0:
        mask1 = dropout_mask(h1.shape, rates[0], rng)
        h1d = np.ascontiguousarray(h1 * mask1)
    h2, c2, g2 = K.lstm_layer_forward(h1d, params["w2"], params["b2"])
    last = h2[-1]
    mask2 = None
    last_d = last
    if training and rates[1] > 0.0:
        mask2 = dropout_mask(last.shape, rates[1], rng)
        last_d = last * mask2
    zd = last_d @ params["wd"] + params["bd"]
    hd = np.maximum(zd, 0.0)
    preds = hd @ params["wo"] + params["bo"][0]
    cache = {
        "x": x,
        "h1": h1,
        "c1": c1,
        "g1": g1,
        "mask1": mask1,
        "h1d": h1d,
        "h2": h2,
        "c2": c2,
        "g2": g2,
        "mask2": mask2,
        "last_d": last_d,
        "zd": zd,
        "hd": hd,
    }
    return preds, cache


def _backward_pass(params: dict, cache: dict, dpreds: np.ndarray) -> dict:
    """Exact gradients of the cached forward pass w.r.t. all parameters."""
    hd = cache["hd"]
    grads = {
        "wo": hd.T @ dpreds,
        "bo": np.array([dpreds.sum()]),
    }
    dhd = np.outer(dpreds, params["wo"])
    dzd = dhd * (cache["zd"] > 0.0)
    grads["wd"] = cache["last_d"].T @ dzd
    grads["bd"] = dzd.sum(axis=0)
    dlast = dzd @ params["wd"].T
    if cache["mask2"] is not None:
        dlast = dlast * cache["mask2"]
    dh2 = np.zeros_like(cache["h2"])
    dh2[-1] = dlast
    dh1d, grads["w2"], grads["b2"] = K.lstm_layer_backward(
        cache["h1d"], params["w2"], cache["g2"], cache["c2"], cache["h2"], dh2
    )
    if cache["mask1"] is not None:
        dh1d = dh1d * cache["mask1"]
    _, grads["w1"], grads["b1"] = K.lstm_layer_backward(
        cache["x"], params["w1"], cache["g1"], cache["c1"], cache["h1"], dh1d
    )
    return grads


def _rates(net: LstmNetwork) -> tuple[float, float]:
    return net.hyperparams.dropout1, net.hyperparams.dropout2


def forward(net: LstmNetwork, window, training_mode: bool = False, rng=None):
    """Predict the next scaled value from one window.

    Returns (prediction, cache); the cache feeds _backward_pass and tests.
    With training_mode the dropout layers are live and need an rng.
    """
    values = np.asarray(window, dtype=np.float64)
    if values.ndim != 1 or len(values) != net.window:
        raise ValueError(f"window must hold exactly {net.window} values")
    if not np.all(np.isfinite(values)):
        raise ValueError("window must be finite")
    if training_mode and rng is None:
        raise ValueError("training mode needs an rng for dropout")
    preds, cache = _forward_pass(
        net.params(), _rates(net), values[None, :], training_mode, rng
    )
    return float(preds[0]), cache


def predict_rows(net: LstmNetwork, rows) -> np.ndarray:
    """One-step predictions for a batch of windows, dropout off.

    Row width sets the recurrence length and may differ from the training
    window: the network reads each row as a sequence, so shorter or longer
    contexts still produce a prediction (training and rollout keep their
    exact-width checks).
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] < 1:
        raise ValueError("rows must be a nonempty 2-D window batch")
    preds, _ = _forward_pass(net.params(), _rates(net), rows, False, None)
    return preds


def train(
    net: LstmNetwork, data: LagMatrix, cfg: TrainConfig
) -> tuple[LstmNetwork, np.ndarray]:
    """Adam-train on shuffled mini-batches; returns (network, epoch losses).

    The loss trace holds one MSE per epoch (sample-weighted over its
    batches, each measured before that batch's update). Shuffling and
    dropout share one seeded stream, so a run's prefix is reproducible:
    epoch one of a two-epoch run matches a one-epoch run exactly. A
    non-finite epoch loss raises TrainingDivergenceError naming the epoch.
    """
    if data.window != net.window:
        raise ValueError(
            f"network expects {net.window}-value windows, data has {data.window}"
        )
    rng = np.random.default_rng(cfg.seed)
    params = net.params()
    rates = _rates(net)
    adam_m = {k: np.zeros_like(v) for k, v in params.items()}
    adam_v = {k: np.zeros_like(v) for k, v in params.items()}
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0
    n = len(data)
    losses = np.empty(cfg.epochs)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        sse = 0.0
        for lo in range(0, n, cfg.batch_size):
            batch = order[lo : lo + cfg.batch_size]
            rows = data.rows[batch]
            targets = data.targets[batch]
            preds, cache = _forward_pass(params, rates, rows, True, rng)
            residual = preds - targets
            sse += float(residual @ residual)
            dpreds = (2.0 / len(batch)) * residual
            grads = _backward_pass(params, cache, dpreds)
            step += 1
            scale1 = 1.0 - beta1**step
            scale2 = 1.0 - beta2**step
            for key in _PARAM_KEYS:
                g = grads[key]
                adam_m[key] = beta1 * adam_m[key] + (1.0 - beta1) * g
                adam_v[key] = beta2 * adam_v[key] + (1.0 - beta2) * (g * g)
                m_hat = adam_m[key] / scale1
                v_hat = adam_v[key] / scale2
                params[key] -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
        losses[epoch - 1] = sse / n
        if not math.isfinite(losses[epoch - 1]):
            raise TrainingDivergenceError("training loss is not finite", epoch=epoch)
    trained = LstmNetwork(
        hyperparams=net.hyperparams, window=net.window, seed=net.seed, **params
    )
    return trained, losses


def predict_multi(
    net: LstmNetwork,
    seed_window,
    horizon: int,
    scaler: ScalerParams,
    start: np.datetime64 | None = None,
) -> Forecast:
    """Roll the one-step model forward ``horizon`` hours.

    seed_window holds the last `window` scaled observations; every
    prediction is appended to the window for the next step (so later
    steps run on model output). Values are inverse-scaled into the
    returned Forecast. Dropout stays off.
    """
    values = np.asarray(seed_window, dtype=np.float64)
    if values.ndim != 1 or len(values) != net.window:
        raise ValueError(f"seed window must hold exactly {net.window} values")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    params = net.params()
    rates = _rates(net)
    window = values.copy()
    preds = np.empty(horizon)
    for step in range(horizon):
        out, _ = _forward_pass(params, rates, window[None, :], False, None)
        preds[step] = out[0]
        window = np.concatenate([window[1:], out])
    return Forecast(
        values=scaler.inverse(preds), model="lstm", start=start, scaler=scaler
    )


def gradient_check(
    net: LstmNetwork,
    window,
    target: float,
    step: float = 1e-5,
    param_budget: int = 200,
    seed: int = 0,
) -> float:
    """Max relative error between BPTT and finite-difference gradients.

    Loss is the squared error of one sample. Central differences with the
    given step are compared coordinate-wise on all parameters (or a seeded
    random subset of at least ``param_budget`` when the network is
    larger); relative error is |ga - gn| / max(|ga|, |gn|, 1e-8).
    """
    values = np.asarray(window, dtype=np.float64)
    params = net.params()
    rates = (0.0, 0.0)  # deterministic path: dropout off

    def loss_at(p: dict) -> float:
        preds, _ = _forward_pass(p, rates, values[None, :], False, None)
        return float((preds[0] - target) ** 2)

    preds, cache = _forward_pass(params, rates, values[None, :], False, None)
    dpreds = np.array([2.0 * (preds[0] - target)])
    grads = _backward_pass(params, cache, dpreds)

    sizes = {key: params[key].size for key in _PARAM_KEYS}
    total = sum(sizes.values())
    if total <= param_budget:
        chosen = np.arange(total)
    else:
        chosen = np.random.default_rng(seed).choice(total, param_budget, replace=False)
    offsets = {}
    base = 0
    for key in _PARAM_KEYS:
        offsets[key] = base
        base += sizes[key]

    worst = 0.0
    for flat in chosen:
        for key in _PARAM_KEYS:
            if offsets[key] <= flat < offsets[key] + sizes[key]:
                idx = np.unravel_index(flat - offsets[key], params[key].shape)
                original = params[key][idx]
                params[key][idx] = original + step
                up = loss_at(params)
                params[key][idx] = original - step
                down = loss_at(params)
                params[key][idx] = original
                numeric = (up - down) / (2.0 * step)
                analytic = grads[key][idx]
                denom = max(abs(analytic), abs(numeric), 1e-8)
                worst = max(worst, abs(analytic - numeric) / denom)
                break
    return worst


def network_to_dict(net: LstmNetwork) -> dict:
    """Versioned JSON-ready dump: layer name -> row-major weight lists."""
    return {
        "format_version": WEIGHTS_FORMAT_VERSION,
        "window": net.window,
        "seed": net.seed,
        "hyperparams": {
            "units1": net.hyperparams.units1,
            "units2": net.hyperparams.units2,
            "dropout1_gene": net.hyperparams.dropout1_gene,
            "dropout2_gene": net.hyperparams.dropout2_gene,
        },
        "weights": {
            "lstm1.weights": net.w1.tolist(),
            "lstm1.bias": net.b1.tolist(),
            "lstm2.weights": net.w2.tolist(),
            "lstm2.bias": net.b2.tolist(),
            "dense.weights": net.wd.tolist(),
            "dense.bias": net.bd.tolist(),
            "head.weights": net.wo.tolist(),
            "head.bias": net.bo.tolist(),
        },
    }


def network_from_dict(payload: dict) -> LstmNetwork:
    """Inverse of network_to_dict; rejects unknown format versions."""
    version = payload.get("format_version")
    if version != WEIGHTS_FORMAT_VERSION:
        raise ValueError(f"unsupported weights format version {version!r}")
    hp = LstmHyperparams(**payload["hyperparams"])
    weights = payload["weights"]
    return LstmNetwork(
        hyperparams=hp,
        window=int(payload["window"]),
        seed=int(payload["seed"]),
        w1=np.array(weights["lstm1.weights"]),
        b1=np.array(weights["lstm1.bias"]),
        w2=np.array(weights["lstm2.weights"]),
        b2=np.array(weights["lstm2.bias"]),
        wd=np.array(weights["dense.weights"]),
        bd=np.array(weights["dense.bias"]),
        wo=np.array(weights["head.weights"]),
        bo=np.array(weights["head.bias"]),
    )
