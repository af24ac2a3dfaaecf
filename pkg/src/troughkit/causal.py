"""Comparative treatment-effect estimation with cross-fitted nuisances.

Two estimators share the machinery.  The partially linear route regresses
outcome and treatment residuals on each other after flexible nuisance
fits, giving a constant effect.  The average-partial-effect route models
the outcome as a function of treatment and confounders jointly, and
averages the treatment gradient with a bias-correction term that makes
the score insensitive to first-order nuisance error; its point estimate
is the median of the per-observation scores, with bootstrap inference,
because near-zero fitted treatment variances throw heavy-tailed outliers
into the correction term.

Nuisances are chosen per fold by a horse race between gradient boosting
and the cross-validated lasso, judged by out-of-sample R-squared on the
tail of each training block.  Confounders exclude the treatment's sibling
features and any feature whose parent is a mechanistic component of the
treatment's parent.  Every estimate carries an omitted-variable bias
bound and an adjusted confidence interval; `robust` means the adjusted
interval still excludes zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np
import pandas as pd
from scipy import stats as sps

from . import learners
from .featlab import FeatureSpec

# parents that are arithmetic functions of other parents
MECHANISTIC_MAP = {
    "vrp": {"vix", "realized_volatility"},
}

VARIANCE_FLOOR_FRAC = 1e-4
FD_STEP_FRAC = 0.1
BOOTSTRAP_DEFAULT = 1000
HORSE_RACE_VAL_FRAC = 0.2


@dataclass(frozen=True)
class CausalEstimate:
    treatment: str
    theta: float
    stderr: float
    p_value: float
    bias_phi: float
    adj_ci_lower: float
    adj_ci_upper: float
    benchmark_r2_y: float
    benchmark_r2_d: float
    robust: bool

    def to_row(self) -> dict:
        return {
            "treatment": self.treatment,
            "coeff": self.theta,
            "p_value": self.p_value,
            "bias_phi": self.bias_phi,
            "adj_ci_lower": self.adj_ci_lower,
            "adj_ci_upper": self.adj_ci_upper,
            "benchmark_r2_y": self.benchmark_r2_y,
            "benchmark_r2_d": self.benchmark_r2_d,
            "robust": self.robust,
        }


@dataclass
class ScoreSample:
    """Per-observation orthogonal-score pieces on out-of-fold data."""

    naive: np.ndarray  # finite-difference treatment gradient of the outcome model
    correction: np.ndarray  # (D - m)/v * (Y - l)

    @property
    def psi(self) -> np.ndarray:
        return self.naive + self.correction


# ---------------------------------------------------------------------------
# exclusion map


def build_exclusion(treatment: str, feature_names: Sequence[str], mechanistic_map=None) -> List[str]:
    """Confounder columns for a treatment: drop siblings and components.

    Removes every feature sharing the treatment's parent indicator, and
    every feature whose parent is a mechanistic component of it.
    """
    mech = MECHANISTIC_MAP if mechanistic_map is None else mechanistic_map
    spec = FeatureSpec.parse(treatment)
    banned_parents = {spec.parent} | set(mech.get(spec.parent, ()))
    confounders = []
    for name in feature_names:
        if name == treatment:
            continue
        if FeatureSpec.parse(name).parent in banned_parents:
            continue
        confounders.append(name)
    return confounders


# ---------------------------------------------------------------------------
# nuisance horse race


def _out_of_sample_r2(pred, truth) -> float:
    truth = np.asarray(truth, dtype=np.float64)
    denom = ((truth - truth.mean()) ** 2).sum()
    if denom <= 0:
        raise ValueError("degenerate target: zero variance on the validation split")
    return 1.0 - float(((truth - pred) ** 2).sum() / denom)


def horse_race(X_train, y_train, X_val, y_val, folds: int = 3):
    """Fit boosting and lasso on the train split; keep the higher-R2 model.

    Returns (model, winner_r2, both_r2s).  Ties go to the boosted model.
    """
    gbm = learners.fit_gbm(X_train, y_train)
    lasso = learners.fit_lasso_cv(X_train, y_train, folds=folds)
    r2_gbm = _out_of_sample_r2(gbm.predict(X_val), y_val)
    r2_lasso = _out_of_sample_r2(lasso.predict(X_val), y_val)
    if r2_gbm >= r2_lasso:
        return gbm, r2_gbm, (r2_gbm, r2_lasso)
    return lasso, r2_lasso, (r2_gbm, r2_lasso)


def _fold_blocks(n: int, k: int):
    bounds = np.linspace(0, n, k + 1).astype(int)
    return [(bounds[i], bounds[i + 1]) for i in range(k)]


def _train_val_split(complement: np.ndarray):
    cut = max(1, int(round(len(complement) * (1.0 - HORSE_RACE_VAL_FRAC))))
    cut = min(cut, len(complement) - 1)
    return complement[:cut], complement[cut:]


# ---------------------------------------------------------------------------
# partially linear estimator


def dml_plr(y, d, X, k_folds: int = 5, seed: int = 0) -> tuple:
    """Cross-fitted residual-on-residual effect with pooled sandwich errors.

    Returns (theta, stderr, p_value, r2_y, r2_d, diagnostics).
    """
    y = np.asarray(y, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = len(y)
    l_hat = np.empty(n)
    m_hat = np.empty(n)
    r2_y_folds, r2_d_folds = [], []
    fold_of = np.empty(n, dtype=int)
    for k, (lo, hi) in enumerate(_fold_blocks(n, k_folds)):
        fold_of[lo:hi] = k
        complement = np.concatenate([np.arange(0, lo), np.arange(hi, n)])
        tr, va = _train_val_split(complement)
        model_l, r2_l, _ = horse_race(X[tr], y[tr], X[va], y[va])
        model_m, r2_m, _ = horse_race(X[tr], d[tr], X[va], d[va])
        l_hat[lo:hi] = model_l.predict(X[lo:hi])
        m_hat[lo:hi] = model_m.predict(X[lo:hi])
        r2_y_folds.append(r2_l)
        r2_d_folds.append(r2_m)
    u = d - m_hat
    e = y - l_hat
    denom = float((u * u).mean())
    if denom < 1e-12 * max(float(d.var()), 1e-12):
        raise ValueError("near-zero residual treatment variance; effect not identified")
    theta = float((u * e).sum() / (u * u).sum())
    psi = u * (e - theta * u)
    stderr = math.sqrt(float((psi**2).mean()) / n) / denom
    p_value = float(2.0 * sps.norm.sf(abs(theta) / stderr)) if stderr > 0 else 0.0
    diagnostics = {"fold_of": fold_of, "residual_d": u, "residual_y": e}
    r2_y = float(np.clip(np.mean(r2_y_folds), 0.0, 1.0))
    r2_d = float(np.clip(np.mean(r2_d_folds), 0.0, 0.999999))
    return theta, stderr, p_value, r2_y, r2_d, diagnostics


# ---------------------------------------------------------------------------
# average partial effect


def gaussian_logdensity_grad(d, m, v):
    """Treatment-direction gradient of the Gaussian conditional log-density."""
    v = np.asarray(v, dtype=np.float64)
    if (v <= 0).any():
        raise ValueError("variance must be positive")
    return -(np.asarray(d, dtype=np.float64) - np.asarray(m, dtype=np.float64)) / v


def ape_score(d, y, l_val, dl_dd, m, v, theta: float) -> np.ndarray:
    """Orthogonal score: treatment gradient minus theta plus bias correction."""
    return dl_dd - theta + (d - m) / v * (y - l_val)


def _fd_gradient(model, d, X, h: float) -> np.ndarray:
    """Central finite difference of the outcome model along the treatment."""
    up = np.column_stack([d + h, X])
    dn = np.column_stack([d - h, X])
    return (model.predict(up) - model.predict(dn)) / (2.0 * h)


def dml_ape(
    y,
    d,
    X,
    k_folds: int = 5,
    seed: int = 0,
    n_bootstrap: int = BOOTSTRAP_DEFAULT,
    fd_step_frac: float = FD_STEP_FRAC,
    variance_floor_frac: float = VARIANCE_FLOOR_FRAC,
) -> tuple:
    """Median-of-scores average partial effect with bootstrap inference.

    Returns (theta, stderr, p_value, ci, r2_y, r2_d, ScoreSample, diagnostics).
    """
    y = np.asarray(y, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = len(y)
    if y.min() == y.max():
        raise ValueError("outcome labels are single-class; effect not identified")
    h = fd_step_frac * float(d.std())
    if h <= 0:
        raise ValueError("constant treatment; effect not identified")
    v_floor = variance_floor_frac * float(d.var())

    naive = np.empty(n)
    corr = np.empty(n)
    r2_y_folds, r2_d_folds = [], []
    fold_of = np.empty(n, dtype=int)
    dx = np.column_stack([d, X])
    for k, (lo, hi) in enumerate(_fold_blocks(n, k_folds)):
        fold_of[lo:hi] = k
        complement = np.concatenate([np.arange(0, lo), np.arange(hi, n)])
        tr, va = _train_val_split(complement)
        model_l, r2_l, _ = horse_race(dx[tr], y[tr], dx[va], y[va])
        model_m, r2_m, _ = horse_race(X[tr], d[tr], X[va], d[va])
        resid2 = (d[complement] - model_m.predict(X[complement])) ** 2
        pos_tr = np.searchsorted(complement, tr)
        pos_va = np.searchsorted(complement, va)
        try:
            model_v, _, _ = horse_race(X[tr], resid2[pos_tr], X[va], resid2[pos_va])
        except ValueError:  # constant squared residuals on the tail
            model_v = learners.fit_gbm(X[tr], resid2[pos_tr])
        l_val = model_l.predict(dx[lo:hi])
        dl = _fd_gradient(model_l, d[lo:hi], X[lo:hi], h)
        m_val = model_m.predict(X[lo:hi])
        v_val = np.maximum(model_v.predict(X[lo:hi]), v_floor)
        naive[lo:hi] = dl
        corr[lo:hi] = (d[lo:hi] - m_val) / v_val * (y[lo:hi] - l_val)
        r2_y_folds.append(r2_l)
        r2_d_folds.append(r2_m)

    sample = ScoreSample(naive=naive, correction=corr)
    scores = sample.psi
    theta = float(np.median(scores))

    rng = np.random.default_rng(seed)
    boots = np.empty(n_bootstrap)
    for b in range(n_bootstrap):
        boots[b] = np.median(scores[rng.integers(0, n, size=n)])
    stderr = float(np.std(boots, ddof=1)) if n_bootstrap > 1 else 0.0
    ci = (float(np.percentile(boots, 2.5)), float(np.percentile(boots, 97.5)))
    frac_le = float((boots <= 0).mean())
    frac_ge = float((boots >= 0).mean())
    p_value = max(2.0 * min(frac_le, frac_ge), 2.0 / n_bootstrap)
    diagnostics = {"fold_of": fold_of, "bootstrap_medians": boots}
    r2_y = float(np.clip(np.mean(r2_y_folds), 0.0, 1.0))
    r2_d = float(np.clip(np.mean(r2_d_folds), 0.0, 0.999999))
    return theta, stderr, p_value, ci, r2_y, r2_d, sample, diagnostics


# ---------------------------------------------------------------------------
# orthogonality diagnostics


def orthogonality_check(y, d, X, l_fn, m, v, theta: float, delta: float = 0.05, ref_scale: float = 1.0):
    """First-order sensitivity of the mean score to nuisance perturbations.

    Perturbs the outcome model by t*r(x)*d, the treatment mean by t*r(x),
    and the variance by a factor (1 + t*r(x)), with r a fixed smooth
    function; reports the fitted slope of the mean score at t=0 for each,
    alongside the same slope for the non-orthogonal naive score (gradient
    average without the correction term).
    """
    y = np.asarray(y, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    x1 = X[:, 0] if X.ndim == 2 else X
    r = ref_scale * (1.0 + 0.5 * np.cos(x1))
    h = FD_STEP_FRAC * float(d.std())
    l_val = l_fn(d, X)
    dl = (l_fn(d + h, X) - l_fn(d - h, X)) / (2.0 * h)
    ts = np.array([-2.0 * delta, -delta, delta, 2.0 * delta])

    def slope(mean_fn):
        vals = np.array([mean_fn(t) for t in ts])
        return float(np.polyfit(ts, vals, 1)[0])

    def mean_l(t):
        lv = l_val + t * r * d
        dlv = dl + t * r
        return float(np.mean(ape_score(d, y, lv, dlv, m, v, theta)))

    def mean_m(t):
        return float(np.mean(ape_score(d, y, l_val, dl, m + t * r, v, theta)))

    def mean_v(t):
        return float(np.mean(ape_score(d, y, l_val, dl, m, v * (1.0 + t * r), theta)))

    def mean_naive(t):
        return float(np.mean(dl + t * r - theta))

    return {
        "l": slope(mean_l),
        "m": slope(mean_m),
        "v": slope(mean_v),
        "naive_l": slope(mean_naive),
    }


# ---------------------------------------------------------------------------
# sensitivity to unobserved confounding


def sensitivity(theta: float, stderr: float, r2_y: float, r2_d: float, df: int):
    """Omitted-variable bias bound and the bias-adjusted interval.

    Returns (bias, adj_ci_lower, adj_ci_upper, robust).
    """
    if not (0.0 <= r2_y < 1.0) or not (0.0 <= r2_d < 1.0):
        raise ValueError("benchmark R-squared values must lie in [0, 1)")
    if df < 1:
        raise ValueError("degrees of freedom must be positive")
    bias = stderr * math.sqrt(r2_y * r2_d / (1.0 - r2_d)) * math.sqrt(df)
    half = 1.96 * stderr + bias
    lo, hi = theta - half, theta + half
    robust = (lo > 0.0) or (hi < 0.0)
    return bias, lo, hi, robust


# ---------------------------------------------------------------------------
# treatment-level driver and framework comparison


def estimate_treatment(
    matrix: pd.DataFrame,
    labels: pd.Series,
    treatment: str,
    framework: str = "ape",
    k_folds: int = 5,
    seed: int = 0,
    n_bootstrap: int = BOOTSTRAP_DEFAULT,
    mechanistic_map=None,
) -> CausalEstimate:
    """Run one treatment through a framework with exclusions and sensitivity."""
    feature_cols = [c for c in matrix.columns if c != "label"]
    if treatment not in feature_cols:
        raise ValueError(f"unknown treatment {treatment!r}: not a matrix column")
    confounders = build_exclusion(treatment, feature_cols, mechanistic_map)
    y = labels.reindex(matrix.index).to_numpy(dtype=np.float64)
    d = matrix[treatment].to_numpy(dtype=np.float64)
    X = matrix[confounders].to_numpy(dtype=np.float64)
    n = len(y)
    df = max(n - len(confounders) - 1, 1)
    if framework == "plr":
        theta, stderr, p, r2y, r2d, _ = dml_plr(y, d, X, k_folds, seed)
    elif framework == "ape":
        theta, stderr, p, _, r2y, r2d, _, _ = dml_ape(y, d, X, k_folds, seed, n_bootstrap)
    else:
        raise ValueError(f"framework must be 'plr' or 'ape', got {framework!r}")
    bias, lo, hi, robust = sensitivity(theta, stderr, r2y, r2d, df)
    return CausalEstimate(
        treatment=treatment,
        theta=theta,
        stderr=stderr,
        p_value=p,
        bias_phi=bias,
        adj_ci_lower=lo,
        adj_ci_upper=hi,
        benchmark_r2_y=r2y,
        benchmark_r2_d=r2d,
        robust=robust and p < 0.05,
    )


def compare_frameworks(
    estimates_plr: Dict[str, CausalEstimate], estimates_ape: Dict[str, CausalEstimate]
) -> pd.DataFrame:
    """Per-treatment verdict on how conclusions move between frameworks."""
    rows = []
    for name in sorted(set(estimates_plr) & set(estimates_ape)):
        a, b = estimates_plr[name], estimates_ape[name]
        if a.robust and b.robust:
            verdict = "sign reversal" if a.theta * b.theta < 0 else "consistent"
        elif a.robust and not b.robust:
            verdict = "lost robustness"
        elif b.robust and not a.robust:
            verdict = "gained robustness"
        else:
            verdict = "consistent"
        rows.append(
            {
                "treatment": name,
                "plr_theta": a.theta,
                "plr_p": a.p_value,
                "plr_robust": a.robust,
                "ape_theta": b.theta,
                "ape_p": b.p_value,
                "ape_robust": b.robust,
                "verdict": verdict,
            }
        )
    return pd.DataFrame(rows)
