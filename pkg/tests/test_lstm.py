"""Recurrent forecaster: init, forward, BPTT training, rollout."""

import math

import numpy as np
import pytest

from wardwatt.errors import TrainingDivergenceError
from wardwatt.lstm import (
    DENSE_UNITS,
    WEIGHTS_FORMAT_VERSION,
    LstmHyperparams,
    LstmNetwork,
    TrainConfig,
    dropout_mask,
    forward,
    gradient_check,
    init_network,
    network_from_dict,
    network_to_dict,
    predict_multi,
    predict_rows,
    train,
)
from wardwatt.series import LagMatrix, ScalerParams

HP_SMALL = LstmHyperparams(units1=2, units2=2, dropout1_gene=1, dropout2_gene=1)


def _zero_net(bias=0.0, window=4):
    """All weights zero; the prediction is exactly the output bias."""
    hp = LstmHyperparams(units1=1, units2=1, dropout1_gene=1, dropout2_gene=1)
    return LstmNetwork(
        hyperparams=hp, window=window, seed=0,
        w1=np.zeros((2, 4)), b1=np.zeros(4),
        w2=np.zeros((2, 4)), b2=np.zeros(4),
        wd=np.zeros((1, DENSE_UNITS)), bd=np.zeros(DENSE_UNITS),
        wo=np.zeros(DENSE_UNITS), bo=np.array([bias]),
    )


def _sine_data(n=220, window=12, seed=0):
    rng = np.random.default_rng(seed)
    t = np.arange(n, dtype=np.float64)
    vals = 0.5 + 0.4 * np.sin(2.0 * np.pi * t / 24.0) + rng.normal(scale=0.01, size=n)
    rows = np.lib.stride_tricks.sliding_window_view(vals, window)[:-1]
    return LagMatrix(rows, vals[window:], window)


# -------------------------------------------------------------- hyperparams


def test_hyperparams_validation():
    with pytest.raises(ValueError, match="units1"):
        LstmHyperparams(units1=0, units2=2, dropout1_gene=1, dropout2_gene=1)
    with pytest.raises(ValueError, match="dropout2_gene"):
        LstmHyperparams(units1=2, units2=2, dropout1_gene=1, dropout2_gene=6)
    with pytest.raises(ValueError, match="dropout1_gene"):
        LstmHyperparams(units1=2, units2=2, dropout1_gene=0, dropout2_gene=1)
    hp = LstmHyperparams(units1=50, units2=30, dropout1_gene=2, dropout2_gene=5)
    assert hp.dropout1 == pytest.approx(0.2)
    assert hp.dropout2 == pytest.approx(0.5)


# --------------------------------------------------------------------- init


def test_init_shapes():
    hp = LstmHyperparams(units1=50, units2=30, dropout1_gene=2, dropout2_gene=2)
    net = init_network(hp, seed=1)
    assert net.w1.shape == (51, 200) and net.b1.shape == (200,)
    assert net.w2.shape == (80, 120) and net.b2.shape == (120,)
    assert net.wd.shape == (30, DENSE_UNITS)
    assert net.wo.shape == (DENSE_UNITS,) and net.bo.shape == (1,)
    assert net.window == 24  # default


def test_init_is_bitwise_deterministic():
    a = init_network(HP_SMALL, seed=9)
    b = init_network(HP_SMALL, seed=9)
    for key in ("w1", "b1", "w2", "b2", "wd", "bd", "wo", "bo"):
        np.testing.assert_array_equal(getattr(a, key), getattr(b, key))
    c = init_network(HP_SMALL, seed=10)
    assert not np.array_equal(a.w1, c.w1)


def test_init_scaled_uniform_bound():
    hp = LstmHyperparams(units1=50, units2=50, dropout1_gene=1, dropout2_gene=1)
    net = init_network(hp, seed=3)
    bound = math.sqrt(6.0 / (51 + 50))  # ~0.2437 for the first fused matrix
    assert np.max(np.abs(net.w1)) <= bound
    assert np.max(np.abs(net.w1)) > 0.9 * bound  # the draw fills the range


def test_init_forget_gate_bias_is_one():
    net = init_network(HP_SMALL, seed=0)
    u = HP_SMALL.units1
    np.testing.assert_array_equal(net.b1[u : 2 * u], 1.0)
    np.testing.assert_array_equal(net.b1[:u], 0.0)
    np.testing.assert_array_equal(net.b1[2 * u :], 0.0)
    np.testing.assert_array_equal(net.bd, 0.0)


def test_network_arrays_are_frozen_and_validated():
    net = init_network(HP_SMALL, seed=0)
    with pytest.raises(ValueError):
        net.w1[0, 0] = 1.0
    with pytest.raises(ValueError, match="shape"):
        LstmNetwork(
            hyperparams=HP_SMALL, window=4, seed=0,
            w1=np.zeros((2, 8)), b1=np.zeros(8),  # needs (1 + units1, 4 * units1)
            w2=np.zeros((4, 8)), b2=np.zeros(8),
            wd=np.zeros((2, DENSE_UNITS)), bd=np.zeros(DENSE_UNITS),
            wo=np.zeros(DENSE_UNITS), bo=np.zeros(1),
        )


# ------------------------------------------------------------------ forward


def test_forward_of_zero_network_is_the_output_bias():
    net = _zero_net(bias=0.37)
    pred, _ = forward(net, [1.0, -2.0, 3.0, 0.5])
    assert pred == pytest.approx(0.37, abs=1e-15)


def test_forward_single_unit_hand_unrolled():
    hp = LstmHyperparams(units1=1, units2=1, dropout1_gene=1, dropout2_gene=1)
    w1 = np.array([[0.3, -0.2, 0.5, 0.1], [0.05, 0.4, -0.3, 0.2]])
    b1 = np.array([0.01, -0.02, 0.03, 0.04])
    w2 = np.array([[0.2, 0.1, -0.4, 0.3], [-0.1, 0.25, 0.15, -0.05]])
    b2 = np.array([0.0, 0.1, -0.1, 0.05])
    wd = np.zeros((1, DENSE_UNITS))
    wd[0, 0] = 1.0
    bd = np.zeros(DENSE_UNITS)
    bd[0] = -0.01
    wo = np.zeros(DENSE_UNITS)
    wo[0] = 2.0
    net = LstmNetwork(hyperparams=hp, window=2, seed=0, w1=w1, b1=b1,
                      w2=w2, b2=b2, wd=wd, bd=bd, wo=wo, bo=np.array([0.5]))

    def sig(z):
        return 1.0 / (1.0 + math.exp(-z))

    def cell(x, h, c, w, b):
        z = np.array([x, h]) @ w + b
        c_t = sig(z[1]) * c + sig(z[0]) * math.tanh(z[2])
        return sig(z[3]) * math.tanh(c_t), c_t

    h1 = c1 = h2 = c2 = 0.0
    for x in (0.7, -0.4):
        h1, c1 = cell(x, h1, c1, w1, b1)
        h2, c2 = cell(h1, h2, c2, w2, b2)
    want = 2.0 * max(h2 - 0.01, 0.0) + 0.5
    pred, _ = forward(net, [0.7, -0.4])
    assert pred == pytest.approx(want, abs=1e-12)


def test_forward_validation():
    net = _zero_net()
    with pytest.raises(ValueError, match="exactly 4"):
        forward(net, [1.0, 2.0])
    with pytest.raises(ValueError, match="finite"):
        forward(net, [1.0, np.nan, 2.0, 3.0])
    with pytest.raises(ValueError, match="needs an rng"):
        forward(net, [1.0, 2.0, 3.0, 4.0], training_mode=True)


def test_forward_is_deterministic_with_dropout_off():
    net = init_network(HP_SMALL, seed=2, window=6)
    window = np.linspace(0.0, 1.0, 6)
    a, _ = forward(net, window)
    b, _ = forward(net, window)
    assert a == b


def test_predict_rows_matches_forward():
    net = init_network(HP_SMALL, seed=4, window=5)
    rng = np.random.default_rng(0)
    rows = rng.uniform(size=(7, 5))
    batch = predict_rows(net, rows)
    singles = [forward(net, row)[0] for row in rows]
    np.testing.assert_allclose(batch, singles, atol=1e-12)


def test_predict_rows_accepts_other_context_widths():
    # the recurrence is length-agnostic; only train/rollout pin the width
    net = init_network(HP_SMALL, seed=4, window=24)
    rows = np.random.default_rng(1).uniform(size=(6, 10))
    preds = predict_rows(net, rows)
    assert preds.shape == (6,)
    assert np.all(np.isfinite(preds))
    with pytest.raises(ValueError, match="2-D"):
        predict_rows(net, np.ones(10))


# ------------------------------------------------------------------ dropout


def test_dropout_mask_basics():
    rng = np.random.default_rng(0)
    np.testing.assert_array_equal(dropout_mask((50,), 0.0, rng), np.ones(50))
    mask = dropout_mask((1000,), 0.4, rng)
    assert set(np.round(np.unique(mask), 12)) <= {0.0, round(1 / 0.6, 12)}
    with pytest.raises(ValueError, match="rate"):
        dropout_mask((10,), 1.0, rng)


def test_dropout_mask_is_unbiased():
    # inverted scaling keeps the expectation at one: check within 3 SE
    rng = np.random.default_rng(123)
    rate = 0.3
    n = 10_000
    mean = float(dropout_mask((n,), rate, rng).mean())
    se = math.sqrt(rate / (1.0 - rate) / n)
    assert abs(mean - 1.0) <= 3.0 * se


# ----------------------------------------------------------------- training


def test_train_with_zero_learning_rate_moves_nothing():
    data = _sine_data()
    net = init_network(HP_SMALL, seed=1, window=12)
    trained, losses = train(net, data, TrainConfig(epochs=3, learning_rate=0.0))
    for key in ("w1", "b1", "w2", "b2", "wd", "bd", "wo", "bo"):
        np.testing.assert_array_equal(getattr(trained, key), getattr(net, key))
    assert losses.shape == (3,)
    assert np.all(np.isfinite(losses)) and np.all(losses > 0)


def test_train_is_bitwise_reproducible():
    data = _sine_data()
    cfg = TrainConfig(epochs=4, seed=7)
    net = init_network(HP_SMALL, seed=1, window=12)
    a, losses_a = train(net, data, cfg)
    b, losses_b = train(net, data, cfg)
    np.testing.assert_array_equal(losses_a, losses_b)
    for key in ("w1", "w2", "wd", "wo"):
        np.testing.assert_array_equal(getattr(a, key), getattr(b, key))


def test_train_prefix_reproducibility():
    # epoch one of a longer run is exactly the one-epoch run
    data = _sine_data()
    net = init_network(HP_SMALL, seed=1, window=12)
    _, one = train(net, data, TrainConfig(epochs=1, seed=5))
    _, three = train(net, data, TrainConfig(epochs=3, seed=5))
    assert three[0] == one[0]


def test_train_reduces_sine_loss():
    data = _sine_data(n=260)
    net = init_network(HP_SMALL, seed=0, window=12)
    _, losses = train(net, data, TrainConfig(epochs=50, learning_rate=5e-3, seed=0))
    assert losses[-1] <= 0.1 * losses[0]


def test_train_divergence_names_the_epoch():
    # the network's outputs are bounded, so a target whose squared error
    # overflows float64 forces a non-finite epoch loss immediately
    rows = np.random.default_rng(0).uniform(size=(8, 4))
    data = LagMatrix(rows, np.full(8, 1e200), 4)
    net = init_network(HP_SMALL, seed=0, window=4)
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(TrainingDivergenceError, match="epoch 1") as info:
            train(net, data, TrainConfig(epochs=3))
    assert info.value.epoch == 1


def test_train_window_mismatch_is_an_error():
    data = _sine_data(window=12)
    net = init_network(HP_SMALL, seed=0, window=24)
    with pytest.raises(ValueError, match="24-value windows"):
        train(net, data, TrainConfig(epochs=1))


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=-0.1)


# ------------------------------------------------------------------ rollout


def test_predict_multi_horizon_one_matches_forward():
    net = init_network(HP_SMALL, seed=3, window=6)
    scaler = ScalerParams(100.0, 300.0)
    window = np.linspace(0.2, 0.8, 6)
    fc = predict_multi(net, window, horizon=1, scaler=scaler)
    pred, _ = forward(net, window)
    assert fc.values[0] == pytest.approx(scaler.inverse(np.array([pred]))[0], abs=1e-12)
    assert fc.model == "lstm" and fc.scaler is scaler


def test_predict_multi_constant_network_fixed_point():
    net = _zero_net(bias=0.25)
    scaler = ScalerParams(0.0, 200.0)
    fc = predict_multi(net, [0.1, 0.9, 0.4, 0.6], horizon=24, scaler=scaler)
    np.testing.assert_allclose(fc.values, 50.0, atol=1e-12)  # 0.25 unscaled


def test_predict_multi_feeds_its_own_output():
    # horizon 2: the second input window must end with the first output
    net = init_network(HP_SMALL, seed=8, window=4)
    scaler = ScalerParams(0.0, 1.0)
    window = np.array([0.3, 0.5, 0.2, 0.7])
    fc = predict_multi(net, window, horizon=2, scaler=scaler)
    first, _ = forward(net, window)
    rolled = np.concatenate([window[1:], [first]])
    second, _ = forward(net, rolled)
    np.testing.assert_allclose(fc.values, [first, second], atol=1e-12)


def test_predict_multi_validation():
    net = _zero_net()
    scaler = ScalerParams(0.0, 1.0)
    with pytest.raises(ValueError, match="seed window"):
        predict_multi(net, [0.1, 0.2], horizon=3, scaler=scaler)
    with pytest.raises(ValueError, match="horizon"):
        predict_multi(net, [0.1, 0.2, 0.3, 0.4], horizon=0, scaler=scaler)


# ----------------------------------------------------------------- gradients


def test_gradient_check_small_network():
    net = init_network(HP_SMALL, seed=0, window=8)
    window = np.linspace(0.1, 0.9, 8)
    worst = gradient_check(net, window, target=0.5)
    assert worst < 1e-4


def test_gradient_at_zero_residual_is_zero():
    net = init_network(HP_SMALL, seed=1, window=6)
    window = np.linspace(0.2, 0.7, 6)
    pred, _ = forward(net, window)
    # with target == prediction the loss sits at its minimum in bo
    eps = 1e-6
    hi = _shift_bo(net, +eps)
    lo = _shift_bo(net, -eps)
    loss_hi = (forward(hi, window)[0] - pred) ** 2
    loss_lo = (forward(lo, window)[0] - pred) ** 2
    assert abs(loss_hi - loss_lo) / (2 * eps) < 1e-9


def _shift_bo(net, delta):
    payload = network_to_dict(net)
    payload["weights"]["head.bias"] = [net.bo[0] + delta]
    return network_from_dict(payload)


def test_backward_is_linear_in_the_upstream_gradient():
    from wardwatt.lstm import _backward_pass, _forward_pass

    net = init_network(HP_SMALL, seed=2, window=5)
    params = net.params()
    rows = np.random.default_rng(3).uniform(size=(4, 5))
    _, cache = _forward_pass(params, (0.0, 0.0), rows, False, None)
    d = np.array([0.5, -1.0, 2.0, 0.25])
    g1 = _backward_pass(params, cache, d)
    g2 = _backward_pass(params, cache, 2.0 * d)
    for key in g1:
        np.testing.assert_array_equal(2.0 * g1[key], g2[key])


# ------------------------------------------------------------- persistence


def test_weights_round_trip_bitwise():
    net = init_network(HP_SMALL, seed=11, window=9)
    payload = network_to_dict(net)
    assert payload["format_version"] == WEIGHTS_FORMAT_VERSION
    back = network_from_dict(payload)
    assert back.window == 9 and back.hyperparams == net.hyperparams
    for key in ("w1", "b1", "w2", "b2", "wd", "bd", "wo", "bo"):
        np.testing.assert_array_equal(getattr(back, key), getattr(net, key))


def test_unknown_weights_version_is_rejected():
    payload = network_to_dict(init_network(HP_SMALL, seed=0))
    payload["format_version"] = 99
    with pytest.raises(ValueError, match="version"):
        network_from_dict(payload)
