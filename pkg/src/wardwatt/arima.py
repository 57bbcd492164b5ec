"""ARIMA(p, d, q) forecasting fit by conditional sum of squares.

The differenced series is modelled as
    w[t] = c + sum_i phi[i] w[t-i] + sum_j theta[j] e[t-j] + e[t]
with presample residuals set to zero and the sum of squared e[t] over
t >= p minimized by a derivative-free simplex search. Candidate
coefficient vectors whose AR or MA polynomials have roots on or inside
the unit circle are rejected with an infinite objective, so the returned
model is always stationary and invertible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import FitError
from .series import HOUR, Forecast, TimeSeries, _readonly


@dataclass(frozen=True)
class ArimaOrder:
    """Autoregressive, differencing, and moving-average orders."""

    p: int
    d: int
    q: int

    def __post_init__(self):
        for name in ("p", "d", "q"):
            component = getattr(self, name)
            if not isinstance(component, int) or component < 0:
                raise ValueError(f"order component {name} must be an integer >= 0")

    @property
    def n_params(self) -> int:
        # AR and MA coefficients plus the intercept.
        return self.p + self.q + 1


@dataclass(frozen=True, eq=False)
class ArimaModel:
    """Fitted coefficients plus the training tail needed to forecast.

    ``last_observations`` holds the final p + d original-scale values
    (enough to rebuild the differenced history and the undifferencing
    anchors); ``last_residuals`` the final q residuals on the differenced
    scale. ``intercept`` acts as drift on the differenced scale.
    """

    order: ArimaOrder
    ar_coeffs: np.ndarray
    ma_coeffs: np.ndarray
    intercept: float
    residual_variance: float
    last_observations: np.ndarray
    last_residuals: np.ndarray
    last_timestamp: np.datetime64 | None = None

    def __post_init__(self):
        ar = np.array(self.ar_coeffs, dtype=np.float64, copy=True).reshape(-1)
        ma = np.array(self.ma_coeffs, dtype=np.float64, copy=True).reshape(-1)
        obs = np.array(self.last_observations, dtype=np.float64, copy=True).reshape(-1)
        res = np.array(self.last_residuals, dtype=np.float64, copy=True).reshape(-1)
        if len(ar) != self.order.p or len(ma) != self.order.q:
            raise ValueError("coefficient lengths must match the order")
        if len(obs) != self.order.p + self.order.d:
            raise ValueError("last_observations must hold exactly p + d values")
        if len(res) != self.order.q:
            raise ValueError("last_residuals must hold exactly q values")
        if not _lag_poly_roots_outside(ar, negate=True):
            raise ValueError("AR polynomial roots must lie outside the unit circle")
        if not _lag_poly_roots_outside(ma, negate=False):
            raise ValueError("MA polynomial roots must lie outside the unit circle")
        if not self.residual_variance > 0.0:
            raise ValueError("residual variance must be positive")
        object.__setattr__(self, "ar_coeffs", _readonly(ar))
        object.__setattr__(self, "ma_coeffs", _readonly(ma))
        object.__setattr__(self, "last_observations", _readonly(obs))
        object.__setattr__(self, "last_residuals", _readonly(res))

    def params_dict(self) -> dict:
        """JSON-ready parameter dump for audit."""
        return {
            "order": {"p": self.order.p, "d": self.order.d, "q": self.order.q},
            "ar_coeffs": self.ar_coeffs.tolist(),
            "ma_coeffs": self.ma_coeffs.tolist(),
            "intercept": self.intercept,
            "residual_variance": self.residual_variance,
        }


def difference(values, d: int) -> np.ndarray:
    """Apply d rounds of first differencing."""
    vals = np.asarray(values, dtype=np.float64)
    if d < 0:
        raise ValueError("differencing order must be >= 0")
    if len(vals) <= d:
        raise ValueError(f"need more than {d} values to difference {d} times")
    return np.diff(vals, n=d) if d else vals.copy()


def difference_anchors(values, d: int) -> np.ndarray:
    """First value at each differencing level, for undifference()."""
    vals = np.asarray(values, dtype=np.float64)
    anchors = np.empty(d)
    for level in range(d):
        anchors[level] = vals[0]
        vals = np.diff(vals)
    return anchors


def undifference(diffs, anchors) -> np.ndarray:
    """Invert difference(): undifference(difference(x, d), anchors) == x.

    ``anchors`` are the per-level first values from difference_anchors().
    """
    out = np.asarray(diffs, dtype=np.float64)
    anchors = np.asarray(anchors, dtype=np.float64)
    for level in range(len(anchors) - 1, -1, -1):
        out = np.concatenate([[anchors[level]], out]).cumsum()
    return out


def _lag_poly_roots_outside(coeffs: np.ndarray, negate: bool) -> bool:
    # AR: 1 - c1 z - ... - ck z^k; MA: 1 + c1 z + ... + ck z^k.
    # Feasible iff every root is strictly outside the unit circle.
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if len(coeffs) == 0 or not np.any(coeffs):
        return True
    signed = -coeffs if negate else coeffs
    roots = np.roots(np.concatenate([signed[::-1], [1.0]]))
    return bool(np.all(np.abs(roots) > 1.0))


def _css_residuals(w: np.ndarray, phi: np.ndarray, theta: np.ndarray, c: float):
    """Residuals of the conditional recursion; e[t] = 0 for t < p."""
    n = len(w)
    p = len(phi)
    q = len(theta)
    e = np.zeros(n)
    if p:
        # rows[k] = (w[t-1], ..., w[t-p]) for t = p + k
        lagged = np.lib.stride_tricks.sliding_window_view(w[: n - 1], p)
        ar_part = c + lagged[:, ::-1] @ phi
    else:
        ar_part = np.full(n - p, c)
    if q == 0:
        e[p:] = w[p:] - ar_part
        return e
    theta_list = theta.tolist()
    for t in range(p, n):
        acc = ar_part[t - p]
        for j, th in enumerate(theta_list):
            if t - 1 - j >= 0:
                acc += th * e[t - 1 - j]
        e[t] = w[t] - acc
    return e


def css_objective(w: np.ndarray, phi, theta, c: float) -> float:
    """Sum of squared conditional residuals; +inf outside the feasible set."""
    phi = np.asarray(phi, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    if not _lag_poly_roots_outside(phi, negate=True):
        return np.inf
    if not _lag_poly_roots_outside(theta, negate=False):
        return np.inf
    e = _css_residuals(w, phi, theta, c)
    tail = e[len(phi):]
    return float(tail @ tail)


def fit_arima(
    series: TimeSeries,
    order: ArimaOrder = ArimaOrder(2, 1, 2),
    optimizer_budget: int | None = None,
) -> ArimaModel:
    """Fit by CSS minimization from a zero-coefficient start.

    The simplex search keeps its best vertex, so the returned objective
    never exceeds the zero-start objective. ``optimizer_budget`` caps the
    iteration count (default 400 per free parameter, at least 2000).
    """
    series.require_observed("arima fit")
    p, d, q = order.p, order.d, order.q
    w = difference(series.values, d)
    if len(w) < 10 * order.n_params:
        raise ValueError(
            f"need at least {10 * order.n_params} points after differencing, "
            f"got {len(w)}"
        )
    if optimizer_budget is None:
        budget = max(2000, 400 * order.n_params)
    else:
        budget = optimizer_budget
    if budget < 1:
        raise ValueError("optimizer budget must be positive")

    def objective(x):
        return css_objective(w, x[:p], x[p : p + q], x[p + q])

    x0 = np.zeros(order.n_params)
    result = minimize(
        objective,
        x0,
        method="Nelder-Mead",
        options={
            "maxiter": budget,
            "maxfev": budget,
            "xatol": 1e-8,
            "fatol": 1e-10,
            "adaptive": order.n_params > 3,
        },
    )
    best = result.x
    if not np.isfinite(objective(best)):
        raise FitError("simplex search ended outside the feasible region")
    phi = best[:p]
    theta = best[p : p + q]
    c = float(best[p + q])
    e = _css_residuals(w, phi, theta, c)
    css = float(e[p:] @ e[p:])
    # Floor keeps the variance positive on deterministic inputs (exact fits).
    variance = max(css / max(1, len(w) - p), 1e-12)
    tail = p + d
    return ArimaModel(
        order=order,
        ar_coeffs=phi,
        ma_coeffs=theta,
        intercept=c,
        residual_variance=variance,
        last_observations=series.values[len(series) - tail :],
        last_residuals=e[len(e) - q :] if q else np.empty(0),
        last_timestamp=series.end,
    )


def forecast_arima(model: ArimaModel, horizon: int = 48) -> Forecast:
    """Iterate the fitted recursion ``horizon`` steps, then undifference.

    Future residuals are zero; the forecast path re-enters the original
    scale anchored at the last observed values.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    p, d, q = model.order.p, model.order.d, model.order.q
    w_hist = list(difference(model.last_observations, d)) if p else []
    e_hist = list(model.last_residuals)
    preds = np.empty(horizon)
    for step in range(horizon):
        acc = model.intercept
        for i in range(p):
            acc += model.ar_coeffs[i] * w_hist[-1 - i]
        for j in range(q):
            if j < len(e_hist):
                acc += model.ma_coeffs[j] * e_hist[-1 - j]
        preds[step] = acc
        if p:
            w_hist.append(acc)
        e_hist.append(0.0)
    values = preds
    if d:
        tail = model.last_observations
        for level in range(d):
            # anchor at the last value of each differencing level
            anchor = np.diff(tail, n=d - 1 - level)[-1]
            values = anchor + np.cumsum(values)
    start = None if model.last_timestamp is None else model.last_timestamp + HOUR
    return Forecast(values=values, model="arima", start=start)


def one_step_predictions(model: ArimaModel, series: TimeSeries) -> np.ndarray:
    """In-sample one-step-ahead predictions on the original scale.

    Returns predictions for series positions d + p onward (earlier points
    lack the conditioning history), aligned with values[d + p :].
    """
    series.require_observed("one-step prediction")
    p, d = model.order.p, model.order.d
    w = difference(series.values, d)
    e = _css_residuals(w, model.ar_coeffs, model.ma_coeffs, model.intercept)
    fitted_w = (w - e)[p:]
    preds = fitted_w.copy()
    level = series.values
    for j in range(d):
        # add back the previous value at each differencing level
        preds += level[p + d - 1 - j : len(level) - 1]
        level = np.diff(level)
    return preds
