"""Weighted least-squares line fits used by the density and decay probes."""

import math

import numpy as np


def wls_line(x, y, sigma=None):
    """Fit y = a + b x by weighted least squares.

    Returns (a, b, se_b, r2). Zero/absent sigmas fall back to equal
    weights; r2 is the weighted coefficient of determination.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2:
        raise ValueError("need at least two points")
    if sigma is None:
        w = np.ones_like(x)
    else:
        sigma = np.asarray(sigma, dtype=float)
        pos = sigma[sigma > 0]
        floor = pos.min() if len(pos) else 1.0
        w = 1.0 / np.maximum(sigma, floor) ** 2
    sw = w.sum()
    xbar = np.dot(w, x) / sw
    ybar = np.dot(w, y) / sw
    sxx = np.dot(w, (x - xbar) ** 2)
    if sxx == 0:
        raise ValueError("degenerate x grid")
    b = np.dot(w, (x - xbar) * (y - ybar)) / sxx
    a = ybar - b * xbar
    resid = y - (a + b * x)
    rss = np.dot(w, resid ** 2)
    tss = np.dot(w, (y - ybar) ** 2)
    r2 = 1.0 if tss == 0 else 1.0 - rss / tss
    n = len(x)
    if n > 2 and rss > 0:
        se_b = math.sqrt(rss / (n - 2) / sxx)
    else:
        se_b = 0.0
    return float(a), float(b), float(se_b), float(r2)


def weighted_rss(x, y, sigma, model_x):
    """Weighted residual sum of squares of the WLS line fit of y against
    model_x(x); used for AIC-style comparisons of equal-size models."""
    mx = model_x(np.asarray(x, dtype=float))
    a, b, _, _ = wls_line(mx, y, sigma)
    sigma = np.asarray(sigma, dtype=float)
    pos = sigma[sigma > 0]
    floor = pos.min() if len(pos) else 1.0
    w = 1.0 / np.maximum(sigma, floor) ** 2
    resid = np.asarray(y, dtype=float) - (a + b * mx)
    return float(np.dot(w, resid ** 2))


def aic_linear(x, y, sigma, model_x):
    """AIC (up to a constant shared by equal-parameter models) for a WLS
    line fit of y on model_x(x)."""
    n = len(x)
    rss = max(weighted_rss(x, y, sigma, model_x), 1e-300)
    return n * math.log(rss / n) + 4.0
