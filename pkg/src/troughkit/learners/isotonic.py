"""Isotonic calibration: pool-adjacent-violators fit, stepwise-linear apply."""

from __future__ import annotations

import numpy as np

from .._accel import njit


@njit
def _pava(y, w):
    """Nondecreasing least-squares fit of y with weights w."""
    n = y.shape[0]
    vals = np.empty(n)
    wts = np.empty(n)
    sizes = np.empty(n, dtype=np.int64)
    top = -1
    for i in range(n):
        top += 1
        vals[top] = y[i]
        wts[top] = w[i]
        sizes[top] = 1
        while top > 0 and vals[top - 1] > vals[top]:
            tw = wts[top - 1] + wts[top]
            vals[top - 1] = (wts[top - 1] * vals[top - 1] + wts[top] * vals[top]) / tw
            wts[top - 1] = tw
            sizes[top - 1] += sizes[top]
            top -= 1
    out = np.empty(n)
    pos = 0
    for b in range(top + 1):
        for _ in range(sizes[b]):
            out[pos] = vals[b]
            pos += 1
    return out


def pava(y, weights=None) -> np.ndarray:
    """Nondecreasing least-squares projection of a sequence."""
    y = np.asarray(y, dtype=np.float64)
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=np.float64)
    if len(y) == 0:
        return y.copy()
    return _pava(y, w)


class IsotonicCalibrator:
    """Maps raw scores to probabilities via a fitted nondecreasing curve.

    Between breakpoints the curve interpolates linearly; outside the fitted
    score range it clamps to the end values.  Outputs are clipped to [0, 1].
    """

    def __init__(self, scores, probs):
        self.scores_ = np.asarray(scores, dtype=np.float64)
        self.probs_ = np.asarray(probs, dtype=np.float64)

    def predict(self, scores) -> np.ndarray:
        s = np.asarray(scores, dtype=np.float64)
        return np.clip(np.interp(s, self.scores_, self.probs_), 0.0, 1.0)


def fit_isotonic(scores, outcomes) -> IsotonicCalibrator:
    """Fit the nondecreasing least-squares curve of outcomes on scores.

    Tied scores are merged (weighted by multiplicity) before pooling so the
    fit is a function of the score.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(outcomes, dtype=np.float64)
    if len(s) < 2:
        raise ValueError(f"need at least 2 points to calibrate, got {len(s)}")
    order = np.argsort(s, kind="stable")
    s, y = s[order], y[order]
    ux, inverse, counts = np.unique(s, return_inverse=True, return_counts=True)
    sums = np.bincount(inverse, weights=y)
    fitted = pava(sums / counts, counts)
    return IsotonicCalibrator(ux, np.clip(fitted, 0.0, 1.0))
