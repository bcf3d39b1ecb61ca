"""Small ARIMA forecaster fit by conditional least squares.

Only what the predictors need: difference the series d times, regress
the current value on an intercept, p AR lags, and q lagged residuals
(residuals from a preliminary long-AR fit), then forecast one step and
integrate back.  Deterministic for a fixed input.
"""

from __future__ import annotations

import numpy as np


def difference(series: np.ndarray, d: int) -> np.ndarray:
    out = np.asarray(series, dtype=float)
    for _ in range(d):
        out = np.diff(out)
    return out


def _fit_cls(z: np.ndarray, p: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares fit of z_t on [1, z_{t-1..t-p}, e_{t-1..t-q}].

    Returns (coефs, residual history aligned with z).  With q = 0 this
    is plain conditional least squares for an AR(p) with intercept.
    """
    n = len(z)
    resid = np.zeros(n)
    if q > 0:
        # Preliminary long AR fit supplies residual estimates.
        m = min(max(p + q, 2), max(n // 2, 1))
        if n > m:
            xl = np.column_stack(
                [np.ones(n - m)] + [z[m - i:n - i] for i in range(1, m + 1)])
            beta_l = np.linalg.lstsq(xl, z[m:], rcond=None)[0]
            resid[m:] = z[m:] - xl @ beta_l

    k = max(p, q)
    rows = n - k
    if rows < 1:
        return np.zeros(1 + p + q), resid
    cols = [np.ones(rows)]
    for i in range(1, p + 1):
        cols.append(z[k - i:n - i])
    for j in range(1, q + 1):
        cols.append(resid[k - j:n - j])
    x = np.column_stack(cols)
    beta = np.linalg.lstsq(x, z[k:], rcond=None)[0]
    return beta, resid


def arima_fit_forecast(series, order: tuple[int, int, int] = (1, 1, 0),
                       horizon: int = 1) -> float:
    """Forecast `horizon` steps ahead; returns the final step's value."""
    p, d, q = order
    if min(p, d, q) < 0 or horizon < 1:
        raise ValueError("orders and horizon must be non-negative")
    s = np.asarray(series, dtype=float)
    if not np.all(np.isfinite(s)):
        raise ValueError("series contains non-finite values")
    if len(s) < p + d + q + 1:
        raise ValueError(
            f"series of length {len(s)} too short for ARIMA{order}; "
            f"need at least {p + d + q + 1} points")

    # Integration tails: last value at each differencing level.
    tails = []
    work = s
    for _ in range(d):
        tails.append(work[-1])
        work = np.diff(work)
    z = work

    beta, resid = _fit_cls(z, p, q)
    zh = list(z)
    eh = list(resid)
    fz = []
    for _ in range(horizon):
        val = beta[0]
        for i in range(1, p + 1):
            val += beta[i] * zh[-i]
        for j in range(1, q + 1):
            val += beta[p + j] * eh[-j]
        zh.append(val)
        eh.append(0.0)
        fz.append(val)

    # Integrate back one differencing level at a time.
    for tail in reversed(tails):
        acc = tail
        vals = []
        for f in fz:
            acc = acc + f
            vals.append(acc)
        fz = vals
    return float(fz[-1])
