"""Pure numpy implementations of the hot kernels.

Reference semantics for the compiled module: both backends implement the
same four functions with identical signatures and (up to float rounding)
identical results. Keep the arithmetic order in sync with _compiled.pyx;
the parity tests compare the two at 1e-10.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # exp overflow for very negative z resolves to 0.0, which is correct.
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-z))


def lstm_layer_forward(x, w, b):
    """Run one LSTM layer over a batch of sequences.

    x: (T, B, I) inputs; w: (I+H, 4H) fused gate weights over [x_t, h_prev]
    with column blocks ordered (input, forget, cell, output); b: (4H,).
    Initial hidden and cell states are zero.

    Returns (h, c, gates): hidden states (T, B, H), cell states (T, B, H),
    and post-activation gate values (T, B, 4H) cached for backprop.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    T, B, I = x.shape
    H = w.shape[1] // 4
    h = np.empty((T, B, H))
    c = np.empty((T, B, H))
    gates = np.empty((T, B, 4 * H))
    hin = np.empty((B, I + H))
    h_prev = np.zeros((B, H))
    c_prev = np.zeros((B, H))
    for t in range(T):
        hin[:, :I] = x[t]
        hin[:, I:] = h_prev
        z = hin @ w + b
        gi = _sigmoid(z[:, :H])
        gf = _sigmoid(z[:, H : 2 * H])
        gg = np.tanh(z[:, 2 * H : 3 * H])
        go = _sigmoid(z[:, 3 * H :])
        c_t = gf * c_prev + gi * gg
        h_t = go * np.tanh(c_t)
        gates[t, :, :H] = gi
        gates[t, :, H : 2 * H] = gf
        gates[t, :, 2 * H : 3 * H] = gg
        gates[t, :, 3 * H :] = go
        c[t] = c_t
        h[t] = h_t
        h_prev, c_prev = h_t, c_t
    return h, c, gates


def lstm_layer_backward(x, w, gates, c, h, dh):
    """Backpropagate through one LSTM layer.

    Arguments mirror lstm_layer_forward's inputs and outputs; dh is the
    upstream gradient w.r.t. every hidden state (T, B, H). Returns
    (dx, dw, db).
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    T, B, I = x.shape
    H = w.shape[1] // 4
    dx = np.empty((T, B, I))
    dw = np.zeros_like(w)
    db = np.zeros(4 * H)
    dh_rec = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    hin = np.empty((B, I + H))
    dz = np.empty((B, 4 * H))
    for t in range(T - 1, -1, -1):
        gi = gates[t, :, :H]
        gf = gates[t, :, H : 2 * H]
        gg = gates[t, :, 2 * H : 3 * H]
        go = gates[t, :, 3 * H :]
        tc = np.tanh(c[t])
        dh_t = dh[t] + dh_rec
        do = tc * dh_t
        dc = go * (1.0 - tc * tc) * dh_t + dc_next
        di = gg * dc
        dg = gi * dc
        c_prev = c[t - 1] if t > 0 else 0.0
        df = c_prev * dc
        dc_next = gf * dc
        dz[:, :H] = di * gi * (1.0 - gi)
        dz[:, H : 2 * H] = df * gf * (1.0 - gf)
        dz[:, 2 * H : 3 * H] = dg * (1.0 - gg * gg)
        dz[:, 3 * H :] = do * go * (1.0 - go)
        hin[:, :I] = x[t]
        hin[:, I:] = h[t - 1] if t > 0 else 0.0
        dw += hin.T @ dz
        db += dz.sum(axis=0)
        dhin = dz @ w.T
        dx[t] = dhin[:, :I]
        dh_rec = dhin[:, I:]
    return dx, dw, db


def best_split_scan(values, targets, min_leaf):
    """Best binary split of one sorted feature column.

    values must be ascending; targets aligned. Considers split points
    between distinct neighbours leaving at least min_leaf samples per
    side; the score is the summed child SSE (lower is better), so the
    winner maximizes variance reduction. Ties go to the lowest threshold.

    Returns (threshold, score, found).
    """
    n = len(values)
    if n < 2 * min_leaf:
        return 0.0, np.inf, False
    s1 = np.cumsum(targets)
    s2 = np.cumsum(targets * targets)
    total1 = s1[-1]
    total2 = s2[-1]
    ks = np.arange(min_leaf, n - min_leaf + 1)
    distinct = values[ks] > values[ks - 1]
    if not distinct.any():
        return 0.0, np.inf, False
    l1 = s1[ks - 1]
    l2 = s2[ks - 1]
    r1 = total1 - l1
    r2 = total2 - l2
    score = (l2 - l1 * l1 / ks) + (r2 - r1 * r1 / (n - ks))
    score = np.where(distinct, score, np.inf)
    best = int(np.argmin(score))  # first occurrence: lowest threshold wins ties
    k = int(ks[best])
    return float((values[k - 1] + values[k]) / 2.0), float(score[best]), True


def tree_predict(feature, threshold, left, right, value, x):
    """Evaluate an array-encoded regression tree on a batch of rows.

    feature[i] < 0 marks node i as a leaf with prediction value[i];
    otherwise rows with x[:, feature[i]] <= threshold[i] descend to
    left[i], the rest to right[i]. Node 0 is the root.
    """
    n = x.shape[0]
    node = np.zeros(n, dtype=np.int64)
    active = feature[node] >= 0
    while active.any():
        idx = np.flatnonzero(active)
        at = node[idx]
        go_left = x[idx, feature[at]] <= threshold[at]
        node[idx] = np.where(go_left, left[at], right[at])
        active = feature[node] >= 0
    return value[node]
