"""CART ensembles: bagged forest classifier and least-squares boosting.

One variance-reduction tree kernel serves both models.  For binary 0/1
targets the variance criterion selects the same splits as Gini impurity
(gini = 2 * variance), so the forest's impurity-decrease importances are
Gini importances after normalization.

Randomness (bootstrap rows, per-node feature subsets) is injected from
outside the kernels as index arrays and a pre-drawn uniform pool, so the
jitted and fallback paths consume identical streams.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .._accel import njit

_NO_FEATURE = -1


@njit
def _grow_tree(X, y, samples, max_depth, min_leaf, mtry, pool, feature, threshold, left, right, value, importances):
    """Grow one tree in place; returns the number of nodes used."""
    d = X.shape[1]
    stack = np.empty((samples.shape[0] * 2 + 2, 3), dtype=np.int64)
    feat_idx = np.empty(d, dtype=np.int64)
    vals_buf = np.empty(samples.shape[0])
    order_buf = np.empty(samples.shape[0], dtype=np.int64)
    n_nodes = 1
    top = 0
    stack[0, 0] = 0
    stack[0, 1] = samples.shape[0]
    stack[0, 2] = 0  # depth; node id is implicit via a parallel stack slot
    node_of = np.empty(samples.shape[0] * 2 + 2, dtype=np.int64)
    node_of[0] = 0
    pool_pos = 0
    while top >= 0:
        start = stack[top, 0]
        end = stack[top, 1]
        depth = stack[top, 2]
        node = node_of[top]
        top -= 1
        m = end - start
        s = 0.0
        ss = 0.0
        for q in range(start, end):
            v = y[samples[q]]
            s += v
            ss += v * v
        mean = s / m
        sse = ss - s * s / m
        feature[node] = _NO_FEATURE
        value[node] = mean
        if depth >= max_depth or m < 2 * min_leaf or sse <= 1e-12:
            continue
        # feature subset: partial Fisher-Yates over column indices
        for c in range(d):
            feat_idx[c] = c
        best_gain = 0.0
        best_f = -1
        best_thr = 0.0
        for pick in range(mtry):
            r = pool[pool_pos % pool.shape[0]]
            pool_pos += 1
            swap = pick + int(r * (d - pick))
            if swap >= d:
                swap = d - 1
            tmp = feat_idx[pick]
            feat_idx[pick] = feat_idx[swap]
            feat_idx[swap] = tmp
            f = feat_idx[pick]
            vals = vals_buf[:m]
            for q in range(m):
                vals[q] = X[samples[start + q], f]
            if m <= 48:  # insertion sort dodges per-node alloc churn
                order = order_buf[:m]
                for q in range(m):
                    v = vals[q]
                    p = q
                    while p > 0 and vals[order[p - 1]] > v:
                        order[p] = order[p - 1]
                        p -= 1
                    order[p] = q
            else:
                order = np.argsort(vals)
            # prefix scan over sorted node rows
            sl = 0.0
            ssl = 0.0
            for k in range(1, m):
                row = samples[start + order[k - 1]]
                v = y[row]
                sl += v
                ssl += v * v
                if vals[order[k]] <= vals[order[k - 1]]:
                    continue
                if k < min_leaf or m - k < min_leaf:
                    continue
                sr = s - sl
                ssr = ss - ssl
                gain = sse - (ssl - sl * sl / k) - (ssr - sr * sr / (m - k))
                if gain > best_gain + 1e-15:
                    best_gain = gain
                    best_f = f
                    best_thr = 0.5 * (vals[order[k - 1]] + vals[order[k]])
        if best_f < 0:
            continue
        # partition samples[start:end] by the chosen split
        i = start
        j = end - 1
        while i <= j:
            if X[samples[i], best_f] <= best_thr:
                i += 1
            else:
                tmp2 = samples[i]
                samples[i] = samples[j]
                samples[j] = tmp2
                j -= 1
        split = i
        if split == start or split == end:  # numeric ties; refuse the split
            continue
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        importances[best_f] += best_gain
        top += 1
        stack[top, 0] = start
        stack[top, 1] = split
        stack[top, 2] = depth + 1
        node_of[top] = n_nodes
        top += 1
        stack[top, 0] = split
        stack[top, 1] = end
        stack[top, 2] = depth + 1
        node_of[top] = n_nodes + 1
        n_nodes += 2
    return n_nodes


@njit
def _predict_tree(X, feature, threshold, left, right, value, out):
    for r in range(X.shape[0]):
        node = 0
        while feature[node] != _NO_FEATURE:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] += value[node]


def _fit_one_tree(X, y, samples, max_depth, min_leaf, mtry, pool, importances):
    cap = 2 * len(samples) + 2
    feature = np.empty(cap, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.zeros(cap, dtype=np.int64)
    right = np.zeros(cap, dtype=np.int64)
    value = np.zeros(cap)
    n = _grow_tree(X, y, samples, max_depth, min_leaf, mtry, pool, feature, threshold, left, right, value, importances)
    return feature[:n].copy(), threshold[:n].copy(), left[:n].copy(), right[:n].copy(), value[:n].copy()


class ForestModel:
    """Bagged trees on binary labels; predictions are leaf-mean averages."""

    def __init__(self, trees, importances):
        self.trees = trees
        total = importances.sum()
        self.importances_ = importances / total if total > 0 else importances

    def gini_importance(self) -> np.ndarray:
        return self.importances_

    def predict_proba(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        out = np.zeros(X.shape[0])
        for t in self.trees:
            _predict_tree(X, *t, out)
        return out / len(self.trees)


def fit_forest(
    X,
    y,
    seed: int,
    n_trees: int = 200,
    min_leaf: int = 1,
    max_depth: Optional[int] = None,
) -> ForestModel:
    """Bootstrap forest with sqrt(d) feature subsampling per split."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    mtry = max(1, int(round(math.sqrt(d))))
    depth_cap = int(max_depth) if max_depth is not None else n + 1
    rng = np.random.default_rng(seed)
    importances = np.zeros(d)
    trees = []
    for _ in range(n_trees):
        samples = rng.integers(0, n, size=n).astype(np.int64)
        pool = rng.random(2 * n * mtry + 1024)
        trees.append(_fit_one_tree(X, y, samples, depth_cap, min_leaf, mtry, pool, importances))
    return ForestModel(trees, importances)


class BoostedRegressor:
    """Least-squares gradient boosting with depth-limited trees."""

    def __init__(self, init, trees, learning_rate):
        self.init_ = init
        self.trees = trees
        self.learning_rate = learning_rate

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        out = np.zeros(X.shape[0])
        for t in self.trees:
            _predict_tree(X, *t, out)
        return self.init_ + self.learning_rate * out


def fit_gbm(X, y, n_rounds: int = 100, depth: int = 3, learning_rate: float = 0.1, min_leaf: int = 1) -> BoostedRegressor:
    """Deterministic boosting: every round fits the current residuals."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    if n < 2:
        raise ValueError("need at least 2 rows to boost")
    init = float(y.mean())
    pred = np.full(n, init)
    samples_proto = np.arange(n, dtype=np.int64)
    pool = np.full(1024, 0.0)  # mtry == d: subset selection consumes order only
    importances = np.zeros(d)
    trees = []
    for _ in range(n_rounds):
        resid = y - pred
        samples = samples_proto.copy()
        tree = _fit_one_tree(X, resid, samples, depth, min_leaf, d, pool, importances)
        trees.append(tree)
        upd = np.zeros(n)
        _predict_tree(X, *tree, upd)
        pred += learning_rate * upd
    return BoostedRegressor(init, trees, learning_rate)
