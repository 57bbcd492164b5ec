# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: LSTM layer recurrences, CART split scan, tree predict.

Same contracts as _numpy_impl; keep arithmetic order in sync so the two
backends agree to float rounding. Matrix products go through BLAS via
scipy's exported dgemm.
"""

from libc.math cimport exp, tanh, INFINITY
from scipy.linalg.cython_blas cimport dgemm

import numpy as np

BACKEND_NAME = "compiled"


cdef inline double _sigmoid(double z):
    return 1.0 / (1.0 + exp(-z))


cdef inline void _gemm(char* ta, char* tb, int m, int n, int k,
                       const double* a, int lda, const double* b, int ldb,
                       double beta, double* c):
    # Row-major C(m,n) = op(A)(m,k) @ op(B)(k,n) + beta*C using the
    # column-major BLAS identity C^T = op(B)^T op(A)^T. lda/ldb are the
    # stored column counts of a and b. BLAS never writes a or b; its
    # signature just predates const, hence the casts.
    cdef double alpha = 1.0
    dgemm(tb, ta, &n, &m, &k, &alpha, <double*>b, &ldb, <double*>a, &lda,
          &beta, c, &n)


def lstm_layer_forward(x_in, w_in, b_in):
    """See _numpy_impl.lstm_layer_forward."""
    cdef const double[:, :, ::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef const double[:, ::1] w = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef const double[::1] b = np.ascontiguousarray(b_in, dtype=np.float64)
    cdef int T = x.shape[0], B = x.shape[1], I = x.shape[2]
    cdef int H4 = w.shape[1], H = w.shape[1] // 4, D = I + H
    h_arr = np.empty((T, B, H))
    c_arr = np.empty((T, B, H))
    g_arr = np.empty((T, B, H4))
    hin_arr = np.empty((B, D))
    z_arr = np.empty((B, H4))
    cdef double[:, :, ::1] h = h_arr
    cdef double[:, :, ::1] c = c_arr
    cdef double[:, :, ::1] g = g_arr
    cdef double[:, ::1] hin = hin_arr
    cdef double[:, ::1] z = z_arr
    cdef int t, bi, j
    cdef double gi, gf, gg, go, cc, cprev
    for t in range(T):
        for bi in range(B):
            for j in range(I):
                hin[bi, j] = x[t, bi, j]
            for j in range(H):
                hin[bi, I + j] = h[t - 1, bi, j] if t > 0 else 0.0
        _gemm(b"N", b"N", B, H4, D, &hin[0, 0], D, &w[0, 0], H4, 0.0, &z[0, 0])
        for bi in range(B):
            for j in range(H):
                gi = _sigmoid(z[bi, j] + b[j])
                gf = _sigmoid(z[bi, H + j] + b[H + j])
                gg = tanh(z[bi, 2 * H + j] + b[2 * H + j])
                go = _sigmoid(z[bi, 3 * H + j] + b[3 * H + j])
                cprev = c[t - 1, bi, j] if t > 0 else 0.0
                cc = gf * cprev + gi * gg
                c[t, bi, j] = cc
                h[t, bi, j] = go * tanh(cc)
                g[t, bi, j] = gi
                g[t, bi, H + j] = gf
                g[t, bi, 2 * H + j] = gg
                g[t, bi, 3 * H + j] = go
    return h_arr, c_arr, g_arr


def lstm_layer_backward(x_in, w_in, gates_in, c_in, h_in, dh_in):
    """See _numpy_impl.lstm_layer_backward."""
    cdef const double[:, :, ::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef const double[:, ::1] w = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef const double[:, :, ::1] g = np.ascontiguousarray(gates_in, dtype=np.float64)
    cdef const double[:, :, ::1] c = np.ascontiguousarray(c_in, dtype=np.float64)
    cdef const double[:, :, ::1] h = np.ascontiguousarray(h_in, dtype=np.float64)
    cdef const double[:, :, ::1] dh = np.ascontiguousarray(dh_in, dtype=np.float64)
    cdef int T = x.shape[0], B = x.shape[1], I = x.shape[2]
    cdef int H4 = w.shape[1], H = w.shape[1] // 4, D = I + H
    dx_arr = np.empty((T, B, I))
    dw_arr = np.zeros((D, H4))
    db_arr = np.zeros(H4)
    hin_arr = np.empty((B, D))
    dz_arr = np.empty((B, H4))
    dhin_arr = np.empty((B, D))
    dhrec_arr = np.zeros((B, H))
    dcnext_arr = np.zeros((B, H))
    cdef double[:, :, ::1] dx = dx_arr
    cdef double[:, ::1] dw = dw_arr
    cdef double[::1] db = db_arr
    cdef double[:, ::1] hin = hin_arr
    cdef double[:, ::1] dz = dz_arr
    cdef double[:, ::1] dhin = dhin_arr
    cdef double[:, ::1] dhrec = dhrec_arr
    cdef double[:, ::1] dcnext = dcnext_arr
    cdef int t, bi, j
    cdef double gi, gf, gg, go, tc, dht, do, dc, di, dg, df, cprev
    for t in range(T - 1, -1, -1):
        for bi in range(B):
            for j in range(H):
                gi = g[t, bi, j]
                gf = g[t, bi, H + j]
                gg = g[t, bi, 2 * H + j]
                go = g[t, bi, 3 * H + j]
                tc = tanh(c[t, bi, j])
                dht = dh[t, bi, j] + dhrec[bi, j]
                do = tc * dht
                dc = go * (1.0 - tc * tc) * dht + dcnext[bi, j]
                di = gg * dc
                dg = gi * dc
                cprev = c[t - 1, bi, j] if t > 0 else 0.0
                df = cprev * dc
                dcnext[bi, j] = gf * dc
                dz[bi, j] = di * gi * (1.0 - gi)
                dz[bi, H + j] = df * gf * (1.0 - gf)
                dz[bi, 2 * H + j] = dg * (1.0 - gg * gg)
                dz[bi, 3 * H + j] = do * go * (1.0 - go)
                db[j] += dz[bi, j]
                db[H + j] += dz[bi, H + j]
                db[2 * H + j] += dz[bi, 2 * H + j]
                db[3 * H + j] += dz[bi, 3 * H + j]
            for j in range(I):
                hin[bi, j] = x[t, bi, j]
            for j in range(H):
                hin[bi, I + j] = h[t - 1, bi, j] if t > 0 else 0.0
        _gemm(b"T", b"N", D, H4, B, &hin[0, 0], D, &dz[0, 0], H4, 1.0, &dw[0, 0])
        _gemm(b"N", b"T", B, D, H4, &dz[0, 0], H4, &w[0, 0], H4, 0.0, &dhin[0, 0])
        for bi in range(B):
            for j in range(I):
                dx[t, bi, j] = dhin[bi, j]
            for j in range(H):
                dhrec[bi, j] = dhin[bi, I + j]
    return dx_arr, dw_arr, db_arr


def best_split_scan(values_in, targets_in, int min_leaf):
    """See _numpy_impl.best_split_scan."""
    cdef const double[::1] values = np.ascontiguousarray(values_in, dtype=np.float64)
    cdef const double[::1] targets = np.ascontiguousarray(targets_in, dtype=np.float64)
    cdef int n = values.shape[0]
    if n < 2 * min_leaf:
        return 0.0, INFINITY, False
    cdef double total1 = 0.0, total2 = 0.0
    cdef int i
    for i in range(n):
        total1 += targets[i]
        total2 += targets[i] * targets[i]
    cdef double l1 = 0.0, l2 = 0.0, r1, r2, sc
    cdef double best_score = INFINITY, best_threshold = 0.0
    cdef bint found = False
    cdef int k
    for i in range(min_leaf):
        l1 += targets[i]
        l2 += targets[i] * targets[i]
    for k in range(min_leaf, n - min_leaf + 1):
        # running sums currently cover the first k elements
        if values[k] > values[k - 1]:
            r1 = total1 - l1
            r2 = total2 - l2
            sc = (l2 - l1 * l1 / k) + (r2 - r1 * r1 / (n - k))
            if sc < best_score:
                best_score = sc
                best_threshold = (values[k - 1] + values[k]) / 2.0
                found = True
        if k < n - min_leaf:
            l1 += targets[k]
            l2 += targets[k] * targets[k]
    if not found:
        return 0.0, INFINITY, False
    return best_threshold, best_score, True


def tree_predict(feature_in, threshold_in, left_in, right_in, value_in, x_in):
    """See _numpy_impl.tree_predict."""
    cdef const long long[::1] feature = np.ascontiguousarray(feature_in, dtype=np.int64)
    cdef const double[::1] threshold = np.ascontiguousarray(threshold_in, dtype=np.float64)
    cdef const long long[::1] left = np.ascontiguousarray(left_in, dtype=np.int64)
    cdef const long long[::1] right = np.ascontiguousarray(right_in, dtype=np.int64)
    cdef const double[::1] value = np.ascontiguousarray(value_in, dtype=np.float64)
    cdef const double[:, ::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef int n = x.shape[0]
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef int i
    cdef long long node
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if x[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out_arr
