"""Feature transforms, rank scaling, and lookback aggregation.

A feature name encodes its own recipe, e.g. ``gex_oi_roc63_scaled_std``:
parent indicator ``gex_oi``, transform ``roc63``, then the rolling
percentile-rank scaling (``_scaled``), then the ``std`` aggregate over the
lookback window.  Transforms are ``roc63`` (63-day rate of change),
``trend_z`` (deviation from the trailing 63-day mean in stdev units),
``wave_cA3`` (level-3 wavelet approximation of the trailing 256-day
window), or absent.  Scaling maps each value to twice its percentile rank
minus one within the trailing 252 days, so every scaled series lives in
[-1, 1].  The aggregates over the trailing lookback window are mean,
population stdev, OLS slope on the window index, and last value.

Every stage is causal: the value at date t never reads data after t.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import pandas as pd

from ._accel import njit
from .indicators import INDICATOR_NAMES

ROC_EPS = 1e-12
TRANSFORMS = ("roc63", "trend_z", "wave_cA3")
AGGREGATES = ("mean", "std", "trend", "last")

# Daubechies-4 orthonormal low-pass filter (reconstruction order).
_DB4_LO = np.array(
    [
        0.23037781330885523,
        0.7148465705525415,
        0.6308807679295904,
        -0.02798376941698385,
        -0.18703481171888114,
        0.030841381835986965,
        0.032883011666982945,
        -0.010597401784997278,
    ]
)
_DB4_HI = np.array([(-1.0) ** k * _DB4_LO[len(_DB4_LO) - 1 - k] for k in range(len(_DB4_LO))])
WAVE_LEVELS = 3
WAVE_PAD = len(_DB4_LO) * 2**WAVE_LEVELS  # reflection pad isolating the right edge


@dataclass(frozen=True)
class FeatureSpec:
    """Parsed feature recipe; `name` round-trips through `parse`."""

    parent: str
    transform: Optional[str]  # one of TRANSFORMS or None
    aggregate: str  # one of AGGREGATES

    @property
    def name(self) -> str:
        mid = f"_{self.transform}" if self.transform else ""
        return f"{self.parent}{mid}_scaled_{self.aggregate}"

    @classmethod
    def parse(cls, name: str, parents=tuple(INDICATOR_NAMES)) -> "FeatureSpec":
        for parent in sorted(parents, key=len, reverse=True):
            if not name.startswith(parent + "_"):
                continue
            rest = name[len(parent) + 1 :]
            for transform in TRANSFORMS:
                for agg in AGGREGATES:
                    if rest == f"{transform}_scaled_{agg}":
                        return cls(parent, transform, agg)
            for agg in AGGREGATES:
                if rest == f"scaled_{agg}":
                    return cls(parent, None, agg)
        raise ValueError(f"feature name {name!r} does not parse against known parents")


# ---------------------------------------------------------------------------
# transforms


def roc(series: pd.Series, lag: int = 63) -> pd.Series:
    """Rate of change against the value `lag` days back, guarded at zero."""
    if lag >= len(series):
        raise ValueError(f"lag {lag} must be shorter than the series ({len(series)})")
    prev = series.shift(lag)
    return (series - prev) / (prev.abs() + ROC_EPS)


def trend_z(series: pd.Series, window: int = 63) -> pd.Series:
    """Deviation from the trailing mean in trailing stdev units."""
    mean = series.rolling(window, min_periods=window).mean()
    std = series.rolling(window, min_periods=window).std(ddof=0)
    z = (series - mean) / std
    return z.where(std >= 1e-12, 0.0).where(mean.notna())


@njit
def _dwt_lowpass(x, lo):
    n = x.shape[0]
    half = n // 2
    L = lo.shape[0]
    out = np.empty(half)
    for i in range(half):
        s = 0.0
        for k in range(L):
            s += lo[k] * x[(2 * i + k) % n]
        out[i] = s
    return out


@njit
def _idwt_lowpass(ca, lo, n):
    L = lo.shape[0]
    x = np.zeros(n)
    for i in range(ca.shape[0]):
        v = ca[i]
        for k in range(L):
            x[(2 * i + k) % n] += v * lo[k]
    return x


@njit
def _wave_final_value(window_vals, lo, pad, levels):
    """Level-`levels` approximation of the window, value at its last slot.

    The window is extended on the right by reflection so the periodized
    transform does not wrap the trailing value onto the window start.
    """
    n = window_vals.shape[0]
    total = n + pad
    buf = np.empty(total)
    buf[:n] = window_vals
    for j in range(pad):
        buf[n + j] = window_vals[n - 2 - j]
    cur = buf
    for _ in range(levels):
        cur = _dwt_lowpass(cur, lo)
    m = cur.shape[0]
    for _ in range(levels):
        m *= 2
        cur = _idwt_lowpass(cur, lo, m)
    return cur[n - 1]


@njit
def _wave_series_kernel(x, lo, window, pad, levels):
    n = x.shape[0]
    out = np.full(n, np.nan)
    for t in range(window - 1, n):
        ok = True
        for j in range(t - window + 1, t + 1):
            if np.isnan(x[j]):
                ok = False
                break
        if ok:
            out[t] = _wave_final_value(x[t - window + 1 : t + 1], lo, pad, levels)
    return out


def wave_cA3(series: pd.Series, window: int = 256) -> pd.Series:
    """Causal wavelet smoothing: per-date level-3 approximation value."""
    vals = np.asarray(series.to_numpy(), dtype=np.float64)
    out = _wave_series_kernel(vals, _DB4_LO, window, WAVE_PAD, WAVE_LEVELS)
    return pd.Series(out, index=series.index, name=series.name)


@njit
def _rolling_rank_kernel(x, window):
    n = x.shape[0]
    out = np.full(n, np.nan)
    for t in range(window - 1, n):
        v = x[t]
        if np.isnan(v):
            continue
        count = 0
        ok = True
        for j in range(t - window + 1, t + 1):
            if np.isnan(x[j]):
                ok = False
                break
            if x[j] <= v:
                count += 1
        if ok:
            out[t] = 2.0 * (count / window) - 1.0
    return out


def rolling_rank(series: pd.Series, window: int = 252) -> pd.Series:
    """Trailing percentile rank (ties count at or below), mapped to [-1, 1]."""
    vals = np.asarray(series.to_numpy(), dtype=np.float64)
    return pd.Series(_rolling_rank_kernel(vals, window), index=series.index, name=series.name)


@njit
def _aggregate_kernel(x, L):
    n = x.shape[0]
    out = np.full((n, 4), np.nan)
    denom = 0.0
    ibar = (L - 1) / 2.0
    for i in range(L):
        denom += (i - ibar) ** 2
    for t in range(L - 1, n):
        ok = True
        s = 0.0
        for j in range(t - L + 1, t + 1):
            if np.isnan(x[j]):
                ok = False
                break
            s += x[j]
        if not ok:
            continue
        mean = s / L
        var = 0.0
        cov = 0.0
        for i in range(L):
            d = x[t - L + 1 + i] - mean
            var += d * d
            cov += (i - ibar) * d
        out[t, 0] = mean
        out[t, 1] = np.sqrt(var / L)
        out[t, 2] = cov / denom
        out[t, 3] = x[t]
    return out


def aggregate_lookback(series: pd.Series, L: int = 10) -> pd.DataFrame:
    """Mean, population stdev, OLS slope, and last value of the window."""
    vals = np.asarray(series.to_numpy(), dtype=np.float64)
    out = _aggregate_kernel(vals, L)
    return pd.DataFrame(out, index=series.index, columns=list(AGGREGATES))


# ---------------------------------------------------------------------------
# matrix assembly


def default_specs(parents=tuple(INDICATOR_NAMES)) -> List[FeatureSpec]:
    """Every parent x {none + transforms} x aggregates, ordered by name."""
    specs = [
        FeatureSpec(p, tr, agg)
        for p in parents
        for tr in (None,) + TRANSFORMS
        for agg in AGGREGATES
    ]
    return sorted(specs, key=lambda s: s.name)


def apply_transform(series: pd.Series, transform: Optional[str]) -> pd.Series:
    if transform is None:
        return series
    if transform == "roc63":
        return roc(series, 63)
    if transform == "trend_z":
        return trend_z(series, 63)
    if transform == "wave_cA3":
        return wave_cA3(series, 256)
    raise ValueError(f"unknown transform {transform!r}")


def build_matrix(
    panel: pd.DataFrame,
    specs: Optional[List[FeatureSpec]] = None,
    L: int = 10,
    labels: Optional[pd.Series] = None,
    rank_window: int = 252,
) -> pd.DataFrame:
    """Assemble the model matrix: one column per spec, rows complete.

    Rows carrying any missing feature are dropped.  When `labels` is
    given it is attached as the first column, aligned by date.
    """
    if specs is None:
        specs = default_specs([c for c in panel.columns])
    scaled_cache = {}
    cols = {}
    for spec in specs:
        key = (spec.parent, spec.transform)
        if key not in scaled_cache:
            if spec.parent not in panel.columns:
                raise ValueError(f"parent indicator {spec.parent!r} missing from panel")
            transformed = apply_transform(panel[spec.parent], spec.transform)
            scaled = rolling_rank(transformed, rank_window)
            scaled_cache[key] = aggregate_lookback(scaled, L)
        cols[spec.name] = scaled_cache[key][spec.aggregate]
    matrix = pd.DataFrame(cols)
    matrix = matrix.dropna(axis=0, how="any")
    if len(matrix) == 0:
        raise ValueError("no complete rows: inputs shorter than the combined warmup windows")
    if labels is not None:
        matrix.insert(0, "label", labels.reindex(matrix.index).astype(int))
    return matrix
