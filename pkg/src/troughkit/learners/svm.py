"""Linear soft-margin SVM trained in the dual by pairwise optimization.

Minimizes (1/2)||w||^2 + C * sum_i hinge(y_i (w.x_i + b)) via
maximal-violating-pair working-set selection on the dual, with the linear
kernel carried as an explicit weight vector.  The bias is recovered
exactly afterwards: given w, the primal is piecewise linear in b and its
minimizer is an order statistic of the hinge breakpoints.
"""

from __future__ import annotations

import numpy as np

from .._accel import njit


@njit
def _smo(X, y, C, tol, max_iter):
    """Dual solve; y in {-1,+1}. Returns (alpha, w, kkt_gap)."""
    n, d = X.shape
    alpha = np.zeros(n)
    w = np.zeros(d)
    grad = -np.ones(n)  # gradient of (1/2)a^T Q a - 1^T a
    gap = np.inf
    for _ in range(max_iter):
        g_max = -np.inf
        g_min = np.inf
        i = -1
        j = -1
        for t in range(n):
            g = -y[t] * grad[t]
            if ((y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0)) and g > g_max:
                g_max = g
                i = t
            if ((y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C)) and g < g_min:
                g_min = g
                j = t
        gap = g_max - g_min
        if i < 0 or j < 0 or gap < tol:
            break
        kii = 0.0
        kjj = 0.0
        kij = 0.0
        for c in range(d):
            kii += X[i, c] * X[i, c]
            kjj += X[j, c] * X[j, c]
            kij += X[i, c] * X[j, c]
        eta = max(kii + kjj - 2.0 * kij, 1e-12)
        delta = gap / eta
        # box clipping along the feasible direction
        delta = min(delta, C - alpha[i] if y[i] > 0 else alpha[i])
        delta = min(delta, alpha[j] if y[j] > 0 else C - alpha[j])
        if delta <= 0.0:
            break
        alpha[i] += y[i] * delta
        alpha[j] -= y[j] * delta
        for c in range(d):
            w[c] += delta * (X[i, c] - X[j, c])
        for t in range(n):
            dot = 0.0
            for c in range(d):
                dot += X[t, c] * (X[i, c] - X[j, c])
            grad[t] += y[t] * delta * dot
    return alpha, w, gap


def _exact_bias(scores, y):
    """argmin_b sum_i hinge(y_i (scores_i + b)): an order statistic.

    The subgradient increases by one unit at every breakpoint y_i - s_i,
    starting from -(number of positives); the minimum therefore spans the
    interval between the n_pos-th and (n_pos+1)-th smallest breakpoints.
    """
    breaks = np.sort(y - scores, kind="stable")
    n_pos = int(np.sum(y > 0))
    lo = breaks[n_pos - 1]
    hi = breaks[n_pos] if n_pos < len(breaks) else lo
    return 0.5 * (lo + hi)


class LinearSVM:
    def __init__(self, w, b, C):
        self.w = np.asarray(w, dtype=np.float64)
        self.b = float(b)
        self.C = float(C)

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.w + self.b

    def objective_value(self, X, y01) -> float:
        """The primal objective evaluated at (w, b), by definition."""
        y = np.where(np.asarray(y01) > 0, 1.0, -1.0)
        margins = y * self.decision_function(X)
        return 0.5 * float(self.w @ self.w) + self.C * float(np.maximum(0.0, 1.0 - margins).sum())


def fit_linear_svm(X, y01, C: float, tol: float = 1e-6, max_iter: int = 500_000) -> LinearSVM:
    """Train on binary 0/1 labels; decision score is w.x + b."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y01 = np.asarray(y01)
    if len(np.unique(y01)) < 2:
        raise ValueError("need both classes present to fit an SVM")
    y = np.where(y01 > 0, 1.0, -1.0)
    alpha, w, _ = _smo(X, y, float(C), float(tol), int(max_iter))
    b = _exact_bias(X @ w, y)
    return LinearSVM(w, b, C)
