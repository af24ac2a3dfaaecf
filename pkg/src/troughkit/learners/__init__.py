"""From-scratch learners used by the nowcasting pipeline and causal layer."""

from __future__ import annotations

import numpy as np
import pandas as pd

from .gnb import NaiveBayesModel, fit_gnb
from .isotonic import IsotonicCalibrator, fit_isotonic, pava
from .linear import LassoModel, fit_lasso_cv, fit_lasso_path
from .scaler import Scaler
from .smote import smote
from .svm import LinearSVM, fit_linear_svm
from .trees import BoostedRegressor, ForestModel, fit_forest, fit_gbm

__all__ = [
    "BoostedRegressor",
    "ForestModel",
    "IsotonicCalibrator",
    "LassoModel",
    "LinearSVM",
    "NaiveBayesModel",
    "Scaler",
    "fit_forest",
    "fit_gbm",
    "fit_gnb",
    "fit_isotonic",
    "fit_lasso_cv",
    "fit_lasso_path",
    "fit_linear_svm",
    "heuristic_vix",
    "pava",
    "smote",
]


def heuristic_vix(vix_series, threshold: float = 40.0):
    """Rule-based benchmark score: 1 where VIX strictly exceeds the bar."""
    if isinstance(vix_series, pd.Series):
        return (vix_series > threshold).astype(float)
    return (np.asarray(vix_series, dtype=np.float64) > threshold).astype(float)
