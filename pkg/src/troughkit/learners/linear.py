"""L1-regularized least squares with a cross-validated penalty path."""

from __future__ import annotations

import numpy as np

from .._accel import njit


@njit
def _cd_lasso(Xs, y_c, w, lam, max_iter, tol):
    """Cyclic coordinate descent on standardized columns, warm-started w."""
    n, d = Xs.shape
    resid = y_c.copy()
    for j in range(d):
        if w[j] != 0.0:
            for r in range(n):
                resid[r] -= Xs[r, j] * w[j]
    for _ in range(max_iter):
        max_delta = 0.0
        for j in range(d):
            rho = 0.0
            for r in range(n):
                rho += Xs[r, j] * resid[r]
            rho = rho / n + w[j]  # columns have unit second moment
            new_w = 0.0
            if rho > lam:
                new_w = rho - lam
            elif rho < -lam:
                new_w = rho + lam
            delta = new_w - w[j]
            if delta != 0.0:
                for r in range(n):
                    resid[r] -= Xs[r, j] * delta
                w[j] = new_w
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        if max_delta < tol:
            break
    return w


class LassoModel:
    def __init__(self, coef, intercept, lam, cv_mse=None, lambdas=None):
        self.coef_ = np.asarray(coef, dtype=np.float64)
        self.intercept_ = float(intercept)
        self.lambda_ = float(lam)
        self.cv_mse_ = cv_mse
        self.lambdas_ = lambdas

    def predict(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.coef_ + self.intercept_


def _standardize(X, y):
    xm = X.mean(axis=0)
    xs = np.sqrt(((X - xm) ** 2).mean(axis=0))
    xs = np.maximum(xs, 1e-12)
    ym = y.mean()
    return (X - xm) / xs, y - ym, xm, xs, ym


def _lambda_path(Xs, y_c, n_points=50, decades=4.0):
    lam_max = np.abs(Xs.T @ y_c).max() / len(y_c)
    lam_max = max(lam_max, 1e-12)
    return np.geomspace(lam_max, lam_max * 10.0**-decades, n_points)


def fit_lasso_path(X, y, lambdas=None, max_iter=1000, tol=1e-7):
    """Coefficients along a decreasing penalty path (standardized internally)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    Xs, y_c, xm, xs, ym = _standardize(X, y)
    if lambdas is None:
        lambdas = _lambda_path(Xs, y_c)
    w = np.zeros(X.shape[1])
    coefs = []
    for lam in lambdas:
        w = _cd_lasso(Xs, y_c, w, lam, max_iter, tol)
        coefs.append(w.copy())
    return np.asarray(lambdas), coefs, (xm, xs, ym)


def fit_lasso_cv(X, y, folds: int = 5, n_lambdas: int = 50, decades: float = 4.0) -> LassoModel:
    """Pick the penalty by K-fold mean squared error, then refit on all rows.

    Folds are contiguous blocks so time-ordered rows stay together.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(y)
    if n < 2 * folds:
        raise ValueError(f"need at least {2 * folds} rows for {folds}-fold CV")
    if np.ptp(y) == 0.0:
        raise ValueError("degenerate constant target")
    Xs_all, yc_all, _, _, _ = _standardize(X, y)
    lambdas = _lambda_path(Xs_all, yc_all, n_lambdas, decades)

    bounds = np.linspace(0, n, folds + 1).astype(int)
    mse = np.zeros((folds, len(lambdas)))
    for k in range(folds):
        lo, hi = bounds[k], bounds[k + 1]
        mask = np.ones(n, dtype=bool)
        mask[lo:hi] = False
        _, coefs, (xm, xs, ym) = fit_lasso_path(X[mask], y[mask], lambdas)
        Xv = (X[lo:hi] - xm) / xs
        for i, w in enumerate(coefs):
            pred = Xv @ w + ym
            mse[k, i] = ((y[lo:hi] - pred) ** 2).mean()
    mean_mse = mse.mean(axis=0)
    best = int(np.argmin(mean_mse))

    _, coefs, (xm, xs, ym) = fit_lasso_path(X, y, lambdas[: best + 1])
    w_std = coefs[-1]
    coef = w_std / xs
    intercept = ym - float(xm @ coef)
    return LassoModel(coef, intercept, lambdas[best], cv_mse=mean_mse, lambdas=lambdas)
