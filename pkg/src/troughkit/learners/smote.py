"""Synthetic minority oversampling by convex interpolation to neighbors."""

from __future__ import annotations

import numpy as np


def smote(rows, factor: float, k: int, seed: int, majority_count: int) -> np.ndarray:
    """Synthesize minority rows on segments toward k-nearest neighbors.

    Produces ``round(factor * (majority_count - len(rows)))`` rows, so a
    factor of 1.0 balances the classes.  Each synthetic row interpolates a
    minority row toward one of its `k` nearest minority neighbors
    (Euclidean) with a uniform weight in [0, 1).
    """
    X = np.asarray(rows, dtype=np.float64)
    m = X.shape[0]
    if m <= k:
        raise ValueError(f"need more than k={k} minority rows, got {m}")
    n_new = int(round(factor * max(majority_count - m, 0)))
    if n_new <= 0:
        return np.empty((0, X.shape[1]))

    # k nearest neighbors among the minority rows, excluding self
    d2 = ((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2)
    np.fill_diagonal(d2, np.inf)
    nn = np.argsort(d2, axis=1, kind="stable")[:, :k]

    rng = np.random.default_rng(seed)
    base = rng.integers(0, m, size=n_new)
    pick = rng.integers(0, k, size=n_new)
    lam = rng.random(n_new)
    neighbors = nn[base, pick]
    return X[base] + lam[:, None] * (X[neighbors] - X[base])
