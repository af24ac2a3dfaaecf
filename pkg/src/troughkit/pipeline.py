"""Nested chronological cross-validation, calibration, and diagnostics.

Per outer fold the training pipeline is: oversample the minority class,
fit the scaler, rank features with a forest and keep the top N, then fit
the linear classifier (all on training rows only).  The inner loop picks
(N, C) by the one-standard-error rule; pooled out-of-fold raw scores feed
the isotonic calibrator; the delivered pipeline is refit on all rows with
the selected hyperparameters.

Also here: ranking and probability metrics with their rolling variants,
exact SHAP values for the linear model, and the covariate-shift /
interpretation-stability diagnostics.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats as sps

from . import learners
from .learners import serialize

DEFAULT_N_GRID = (10, 15, 20, 25, 30)
DEFAULT_C_GRID = (0.01, 0.1, 1.0)
SMOTE_K = 5
SMOTE_FACTOR = 1.0
FOREST_TREES = 200


# ---------------------------------------------------------------------------
# metrics


def roc_auc(scores, labels) -> float:
    """Probability a random positive outranks a random negative; ties half."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_auc needs both classes present")
    ranks = sps.rankdata(s, method="average")
    return float((ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def brier(probs, labels) -> float:
    p = np.asarray(probs, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if ((p < 0) | (p > 1)).any():
        raise ValueError("probabilities outside [0, 1]")
    return float(((p - y) ** 2).mean())


def rolling_brier(probs: pd.Series, labels: pd.Series, window: int = 63) -> pd.Series:
    p = probs.astype(float)
    y = labels.reindex(probs.index).astype(float)
    if ((p < 0) | (p > 1)).any():
        raise ValueError("probabilities outside [0, 1]")
    return ((p - y) ** 2).rolling(window, min_periods=window).mean().rename("rolling_brier")


def calibration_bins(probs, labels, n_bins: int = 10) -> pd.DataFrame:
    """Equal-width reliability bins: mean prob, observed rate, count."""
    p = np.asarray(probs, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    idx = np.clip(np.digitize(p, edges[1:-1]), 0, n_bins - 1)
    rows = []
    for b in range(n_bins):
        mask = idx == b
        rows.append(
            {
                "bin_lo": edges[b],
                "bin_hi": edges[b + 1],
                "mean_prob": p[mask].mean() if mask.any() else np.nan,
                "event_rate": y[mask].mean() if mask.any() else np.nan,
                "count": int(mask.sum()),
            }
        )
    return pd.DataFrame(rows)


def one_se_select(candidates: Sequence[Tuple[float, float, int]]) -> int:
    """Index of the simplest candidate within one stderr of the best mean.

    Candidates are (mean score, stderr, complexity rank); lower rank means
    simpler.  Ties on rank resolve to the earliest candidate.
    """
    if not candidates:
        raise ValueError("no candidates")
    means = np.array([c[0] for c in candidates], dtype=float)
    best = int(np.argmax(means))
    floor = means[best] - candidates[best][1]
    eligible = [i for i, c in enumerate(candidates) if c[0] >= floor]
    return min(eligible, key=lambda i: (candidates[i][2], i))


# ---------------------------------------------------------------------------
# cross-validation plan


@dataclass(frozen=True)
class CvPlan:
    """Expanding-window chronological folds over n rows."""

    n_rows: int
    n_folds: int

    def splits(self):
        bounds = np.linspace(0, self.n_rows, self.n_folds + 2).astype(int)
        for k in range(1, self.n_folds + 1):
            train = np.arange(0, bounds[k])
            val = np.arange(bounds[k], bounds[k + 1])
            if len(train) and len(val):
                yield train, val


def _stream_seed(master: int, *tags: int) -> int:
    return int(np.random.SeedSequence([int(master), *[int(t) for t in tags]]).generate_state(1)[0])


# ---------------------------------------------------------------------------
# fold fitting


@dataclass
class FoldModel:
    scaler: learners.Scaler
    feature_names: List[str]
    feature_positions: np.ndarray
    svm: learners.LinearSVM

    def raw_scores(self, X: np.ndarray) -> np.ndarray:
        return self.svm.decision_function(self.scaler.transform(X)[:, self.feature_positions])


def _prepare_split(
    X: np.ndarray,
    y: np.ndarray,
    seed: int,
    smote_factor: float = SMOTE_FACTOR,
    smote_k: int = SMOTE_K,
    forest_trees: int = FOREST_TREES,
):
    """Augment, scale, and rank features once per training split."""
    pos = X[y == 1]
    neg_count = int((y == 0).sum())
    synthetic = learners.smote(pos, smote_factor, smote_k, _stream_seed(seed, 1), neg_count)
    X_aug = np.vstack([X, synthetic])
    y_aug = np.concatenate([y, np.ones(len(synthetic))])
    scaler = learners.Scaler().fit(X_aug)
    Xs = scaler.transform(X_aug)
    forest = learners.fit_forest(Xs, y_aug, seed=_stream_seed(seed, 2), n_trees=forest_trees)
    order = np.argsort(-forest.gini_importance(), kind="stable")
    return scaler, Xs, y_aug, order


def fit_fold(
    X: np.ndarray,
    y: np.ndarray,
    columns: Sequence[str],
    n_features: int,
    C: float,
    seed: int,
    smote_factor: float = SMOTE_FACTOR,
    smote_k: int = SMOTE_K,
    forest_trees: int = FOREST_TREES,
) -> FoldModel:
    """The per-fold training pipeline with fixed hyperparameters."""
    scaler, Xs, y_aug, order = _prepare_split(X, y, seed, smote_factor, smote_k, forest_trees)
    keep = np.sort(order[:n_features])
    svm = learners.fit_linear_svm(Xs[:, keep], y_aug, C)
    return FoldModel(scaler, [columns[i] for i in keep], keep, svm)


# ---------------------------------------------------------------------------
# trained pipeline container


@dataclass
class TrainedPipeline:
    columns: List[str]  # full matrix column order expected at predict time
    scaler: learners.Scaler
    feature_names: List[str]
    feature_positions: np.ndarray
    svm: learners.LinearSVM
    calibrator: learners.IsotonicCalibrator
    hyperparams: dict
    background_mean: np.ndarray  # scaled selected-feature means on train rows
    train_end: Optional[str] = None

    def predict_raw(self, X) -> np.ndarray:
        X = self._as_matrix(X)
        return self.svm.decision_function(self.scaler.transform(X)[:, self.feature_positions])

    def predict_proba(self, X) -> np.ndarray:
        return self.calibrator.predict(self.predict_raw(X))

    def shap_values(self, X, background_mean=None) -> np.ndarray:
        """Exact per-row, per-feature attributions for the linear score."""
        X = self._as_matrix(X)
        Xs = self.scaler.transform(X)[:, self.feature_positions]
        mean = self.background_mean if background_mean is None else np.asarray(background_mean)
        return self.svm.w * (Xs - mean)

    def _as_matrix(self, X) -> np.ndarray:
        if isinstance(X, pd.DataFrame):
            missing = [c for c in self.columns if c not in X.columns]
            if missing:
                raise ValueError(f"matrix is missing expected columns, first: {missing[0]!r}")
            return X[self.columns].to_numpy(dtype=np.float64)
        return np.asarray(X, dtype=np.float64)

    # -- flat key-value serialization

    def save(self, path) -> None:
        items = {
            "kind": "trained_pipeline",
            "columns": ",".join(self.columns),
            "feature_names": ",".join(self.feature_names),
            "feature_positions": ",".join(str(int(i)) for i in self.feature_positions),
            "scaler.mean": serialize.encode_floats(self.scaler.mean_),
            "scaler.std": serialize.encode_floats(self.scaler.std_),
            "svm.w": serialize.encode_floats(self.svm.w),
            "svm.b": repr(self.svm.b),
            "svm.c": repr(self.svm.C),
            "iso.scores": serialize.encode_floats(self.calibrator.scores_),
            "iso.probs": serialize.encode_floats(self.calibrator.probs_),
            "background_mean": serialize.encode_floats(self.background_mean),
            "train_end": self.train_end or "",
        }
        for key, value in self.hyperparams.items():
            items[f"hyper.{key}"] = repr(value)
        serialize.write_kv(path, items)

    @classmethod
    def load(cls, path) -> "TrainedPipeline":
        items = serialize.read_kv(path)
        if items.get("kind") != "trained_pipeline":
            raise ValueError(f"{path}: not a trained pipeline file")
        scaler = learners.Scaler()
        scaler.mean_ = serialize.decode_floats(items["scaler.mean"])
        scaler.std_ = serialize.decode_floats(items["scaler.std"])
        svm = learners.LinearSVM(
            serialize.decode_floats(items["svm.w"]), float(items["svm.b"]), float(items["svm.c"])
        )
        calibrator = learners.IsotonicCalibrator(
            serialize.decode_floats(items["iso.scores"]), serialize.decode_floats(items["iso.probs"])
        )
        hyper = {}
        for key, value in items.items():
            if key.startswith("hyper."):
                num = float(value)
                hyper[key[len("hyper.") :]] = int(num) if num == int(num) else num
        return cls(
            columns=items["columns"].split(","),
            scaler=scaler,
            feature_names=items["feature_names"].split(","),
            feature_positions=np.array([int(t) for t in items["feature_positions"].split(",")]),
            svm=svm,
            calibrator=calibrator,
            hyperparams=hyper,
            background_mean=serialize.decode_floats(items["background_mean"]),
            train_end=items.get("train_end") or None,
        )


# ---------------------------------------------------------------------------
# nested cross-validation


@dataclass
class FoldRecord:
    """Everything needed to recompute one outer fold from scratch."""

    outer_index: int
    train_rows: np.ndarray
    val_rows: np.ndarray
    n_features: int
    C: float
    seed: int
    model: FoldModel
    inner_stats: list = field(default_factory=list)


def _candidate_grid(n_grid, c_grid, max_features: int):
    grid = [(n, c) for n in n_grid if n <= max_features for c in c_grid]
    ranked = sorted(grid)  # complexity: fewer features first, then lower C
    rank = {cand: i for i, cand in enumerate(ranked)}
    return grid, rank


def run_nested_cv(
    matrix: pd.DataFrame,
    labels: pd.Series,
    seed: int,
    outer_folds: int = 5,
    inner_folds: int = 3,
    n_grid: Sequence[int] = DEFAULT_N_GRID,
    c_grid: Sequence[float] = DEFAULT_C_GRID,
    smote_factor: float = SMOTE_FACTOR,
    smote_k: int = SMOTE_K,
    forest_trees: int = FOREST_TREES,
):
    """Nested CV on a chronological matrix; returns the refit pipeline,
    out-of-fold raw scores/probabilities, and per-fold records."""
    columns = [c for c in matrix.columns if c != "label"]
    X = matrix[columns].to_numpy(dtype=np.float64)
    y = labels.reindex(matrix.index).to_numpy(dtype=np.float64)
    n = len(matrix)
    grid, complexity = _candidate_grid(n_grid, c_grid, len(columns))
    if not grid:
        raise ValueError("empty hyperparameter grid")

    all_stats = {cand: [] for cand in grid}
    oof_scores = np.full(n, np.nan)
    records: List[FoldRecord] = []

    for o_idx, (o_train, o_val) in enumerate(CvPlan(n, outer_folds).splits()):
        if y[o_train].sum() <= smote_k:
            warnings.warn(f"outer fold {o_idx}: too few positives in training window, skipped")
            continue
        # inner loop: score every candidate on expanding inner splits
        fold_stats = {cand: [] for cand in grid}
        for i_idx, (i_train, i_val) in enumerate(CvPlan(len(o_train), inner_folds).splits()):
            y_tr, y_va = y[o_train[i_train]], y[o_train[i_val]]
            if y_tr.sum() <= smote_k or len(np.unique(y_va)) < 2:
                warnings.warn(f"outer fold {o_idx} inner {i_idx}: single-class or thin window, skipped")
                continue
            split_seed = _stream_seed(seed, o_idx, i_idx)
            scaler, Xs_aug, y_aug, order = _prepare_split(
                X[o_train[i_train]], y_tr, split_seed, smote_factor, smote_k, forest_trees
            )
            X_val_s = scaler.transform(X[o_train[i_val]])
            for cand in grid:
                n_feat, c_reg = cand
                keep = np.sort(order[:n_feat])
                svm = learners.fit_linear_svm(Xs_aug[:, keep], y_aug, c_reg)
                auc = roc_auc(svm.decision_function(X_val_s[:, keep]), y_va)
                fold_stats[cand].append(auc)
                all_stats[cand].append(auc)
        stats = []
        for cand in grid:
            aucs = fold_stats[cand]
            if aucs:
                se = float(np.std(aucs, ddof=1) / np.sqrt(len(aucs))) if len(aucs) > 1 else 0.0
                stats.append((float(np.mean(aucs)), se, complexity[cand]))
            else:
                stats.append((-np.inf, 0.0, complexity[cand]))
        chosen = grid[one_se_select(stats)]

        fold_seed = _stream_seed(seed, o_idx, 1000)
        model = fit_fold(
            X[o_train], y[o_train], columns, chosen[0], chosen[1], fold_seed, smote_factor, smote_k, forest_trees
        )
        oof_scores[o_val] = model.raw_scores(X[o_val])
        records.append(
            FoldRecord(o_idx, o_train, o_val, chosen[0], chosen[1], fold_seed, model, stats)
        )

    if not records:
        raise ValueError("every outer fold was skipped; not enough positive labels")

    # final hyperparameters from the pooled inner scores
    pooled = []
    for cand in grid:
        aucs = all_stats[cand]
        if aucs:
            se = float(np.std(aucs, ddof=1) / np.sqrt(len(aucs))) if len(aucs) > 1 else 0.0
            pooled.append((float(np.mean(aucs)), se, complexity[cand]))
        else:
            pooled.append((-np.inf, 0.0, complexity[cand]))
    final_n, final_c = grid[one_se_select(pooled)]

    final_seed = _stream_seed(seed, 999_999)
    final_model = fit_fold(X, y, columns, final_n, final_c, final_seed, smote_factor, smote_k, forest_trees)

    scored = ~np.isnan(oof_scores)
    calibrator = learners.fit_isotonic(oof_scores[scored], y[scored])
    pipeline = TrainedPipeline(
        columns=columns,
        scaler=final_model.scaler,
        feature_names=final_model.feature_names,
        feature_positions=final_model.feature_positions,
        svm=final_model.svm,
        calibrator=calibrator,
        hyperparams={
            "n_features": final_n,
            "svm_c": final_c,
            "outer_folds": outer_folds,
            "inner_folds": inner_folds,
            "seed": seed,
        },
        background_mean=final_model.scaler.transform(X)[:, final_model.feature_positions].mean(axis=0),
        train_end=str(matrix.index[-1].date()),
    )
    oof = pd.DataFrame(
        {
            "raw_score": oof_scores,
            "prob": np.where(scored, calibrator.predict(oof_scores), np.nan),
            "label": y,
        },
        index=matrix.index,
    )
    return pipeline, oof, records


# ---------------------------------------------------------------------------
# drift diagnostics


def drift_diagnostics(matrix: pd.DataFrame, split_date, pipeline: Optional[TrainedPipeline] = None) -> dict:
    """Covariate-shift and interpretation-stability report across a split.

    Per-feature two-sample Kolmogorov-Smirnov statistics between the rows
    before and after `split_date`; when a pipeline is given, mean-|SHAP|
    rankings on the two halves plus their Spearman rank correlation.
    """
    cols = [c for c in matrix.columns if c != "label"]
    first = matrix.loc[matrix.index <= pd.Timestamp(split_date), cols]
    second = matrix.loc[matrix.index > pd.Timestamp(split_date), cols]
    if len(first) == 0 or len(second) == 0:
        raise ValueError("both sides of the split must be nonempty")
    ks = {}
    for c in cols:
        a, b = first[c].to_numpy(), second[c].to_numpy()
        if np.array_equal(a, b):
            ks[c] = 0.0
        else:
            ks[c] = float(sps.ks_2samp(a, b, method="asymp").statistic)
    report = {"ks": pd.Series(ks).sort_values(ascending=False)}
    if pipeline is not None:
        shap_a = np.abs(pipeline.shap_values(first)).mean(axis=0)
        shap_b = np.abs(pipeline.shap_values(second)).mean(axis=0)
        names = pipeline.feature_names
        rank_corr = float(sps.spearmanr(shap_a, shap_b).statistic) if len(names) > 1 else 1.0
        report["shap_first"] = pd.Series(shap_a, index=names).sort_values(ascending=False)
        report["shap_second"] = pd.Series(shap_b, index=names).sort_values(ascending=False)
        report["shap_rank_correlation"] = rank_corr
    return report
