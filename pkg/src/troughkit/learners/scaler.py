"""Column-wise standardization fitted on training rows only."""

from __future__ import annotations

import numpy as np

STD_FLOOR = 1e-12


class Scaler:
    """Per-column mean/stdev scaler; constant columns map to zero."""

    def __init__(self):
        self.mean_ = None
        self.std_ = None

    def fit(self, X) -> "Scaler":
        X = np.asarray(X, dtype=np.float64)
        self.mean_ = X.mean(axis=0)
        self.std_ = np.maximum(X.std(axis=0, ddof=0), STD_FLOOR)
        return self

    def transform(self, X) -> np.ndarray:
        if self.mean_ is None:
            raise RuntimeError("scaler not fitted")
        return (np.asarray(X, dtype=np.float64) - self.mean_) / self.std_

    def fit_transform(self, X) -> np.ndarray:
        return self.fit(X).transform(X)
