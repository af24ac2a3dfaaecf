"""Parent indicators computed from the raw market inputs.

Positioning and flow measures (gamma/delta exposure, order-flow imbalance,
flow concentration, unrealized profit), macro spreads (credit spread,
funds-futures slope and basis), liquidity (Amihud), and sentiment
(realized volatility, VIX, variance risk premium, put/call ratios,
risk-neutral moments, FX momentum and volatility).  Every indicator is
causal: the value at date t reads nothing after t.  The only full-sample
treatment is the gamma-exposure winsorization, which is an outlier rule
applied after the panel is built.
"""

from __future__ import annotations

import math
from typing import Iterable, Tuple

import numpy as np
import pandas as pd

from . import dataio

INDICATOR_NAMES = [
    "gex_oi",
    "gex_volume",
    "dex_oi",
    "ofi",
    "flow_concentration_10d",
    "upg_63d",
    "credit_spread",
    "amihud_illiquidity",
    "ffr_slope",
    "ffr_basis",
    "realized_volatility",
    "vix",
    "vrp",
    "pcr_oi",
    "pcr_volume",
    "risk_neutral_skewness",
    "risk_neutral_kurtosis",
    "fx_momentum_6e_21d",
    "fx_momentum_6j_21d",
    "fx_rv_6e_21d",
    "fx_rv_6j_21d",
]


class RnDensityError(ValueError):
    """Call prices not convex in strike: implied density would be negative."""


# ---------------------------------------------------------------------------
# option-chain indicators (one snapshot = all contracts listed on one date)


def gex(chain_day: pd.DataFrame, weight: str = "oi") -> float:
    """Net dealer gamma exposure, call gamma minus put gamma, x100."""
    if weight not in ("oi", "volume"):
        raise ValueError(f"weight must be 'oi' or 'volume', got {weight!r}")
    if len(chain_day) == 0:
        return 0.0
    w = chain_day[weight].to_numpy(dtype=float)
    g = chain_day["gamma"].to_numpy(dtype=float)
    sign = np.where(chain_day["kind"].to_numpy() == "call", 1.0, -1.0)
    return float(np.sum(sign * g * w) * 100.0)


def dex(chain_day: pd.DataFrame) -> float:
    """Net delta positioning from open interest, x100 (put deltas negative)."""
    if len(chain_day) == 0:
        return 0.0
    return float(np.sum(chain_day["delta"].to_numpy(float) * chain_day["oi"].to_numpy(float)) * 100.0)


def pcr(chain_day: pd.DataFrame, weight: str = "oi") -> float:
    """Put/call ratio by open interest or volume; NaN when call weight is 0."""
    if weight not in ("oi", "volume"):
        raise ValueError(f"weight must be 'oi' or 'volume', got {weight!r}")
    kinds = chain_day["kind"].to_numpy()
    w = chain_day[weight].to_numpy(dtype=float)
    call_sum = w[kinds == "call"].sum()
    put_sum = w[kinds == "put"].sum()
    if call_sum <= 0:
        return math.nan
    return float(put_sum / call_sum)


def rn_moments_from_density(strikes, density) -> Tuple[float, float]:
    """Standardized third and fourth moments of a discrete strike density."""
    k = np.asarray(strikes, dtype=float)
    p = np.asarray(density, dtype=float)
    total = p.sum()
    if total <= 0:
        raise RnDensityError("density has no positive mass")
    p = p / total
    mu = float(np.sum(p * k))
    var = float(np.sum(p * (k - mu) ** 2))
    if var <= 0:
        return 0.0, 0.0
    sd = math.sqrt(var)
    z = (k - mu) / sd
    return float(np.sum(p * z**3)), float(np.sum(p * z**4))


def _density_from_calls(strikes, mids):
    """Breeden-Litzenberger: probability mass from call-price curvature."""
    order = np.argsort(strikes)
    k = np.asarray(strikes, dtype=float)[order]
    c = np.asarray(mids, dtype=float)[order]
    if len(k) < 5:
        raise ValueError(f"need at least 5 strikes for a density, got {len(k)}")
    # light smoothing before differencing
    cs = c.copy()
    cs[1:-1] = (c[:-2] + 2.0 * c[1:-1] + c[2:]) / 4.0
    dm = k[1:-1] - k[:-2]
    dp = k[2:] - k[1:-1]
    curv = 2.0 * (cs[:-2] / (dm * (dm + dp)) - cs[1:-1] / (dm * dp) + cs[2:] / (dp * (dm + dp)))
    mass = curv * (k[2:] - k[:-2]) / 2.0
    tol = 1e-8 * max(mass.max(), 1e-300)
    if (mass < -tol).any():
        raise RnDensityError("call prices not convex in strike after smoothing")
    mass = np.clip(mass, 0.0, None)
    if mass.sum() <= 0:
        raise RnDensityError("zero total density mass")
    return k[1:-1], mass


def rn_moments(chain_day: pd.DataFrame, target_tenor: int = 30) -> Tuple[float, float]:
    """Risk-neutral skewness and kurtosis at the target tenor.

    Builds a discrete density per expiry from call mid prices and
    interpolates the standardized moments linearly between the expiry
    pair straddling the target (nearest pair when none straddles).
    """
    calls = chain_day[chain_day["kind"] == "call"]
    if len(calls) == 0:
        raise ValueError("chain has no calls")
    date = chain_day["date"].iloc[0] if "date" in chain_day.columns else None
    per_expiry = []
    for expiry, grp in calls.groupby("expiry"):
        tenor = (expiry - date).days if date is not None else int(grp["tenor"].iloc[0])
        ks, mass = _density_from_calls(grp["strike"].to_numpy(), grp["mid"].to_numpy())
        per_expiry.append((tenor, rn_moments_from_density(ks, mass)))
    per_expiry.sort()
    tenors = [t for t, _ in per_expiry]
    if len(per_expiry) == 1:
        return per_expiry[0][1]
    lo = max((i for i, t in enumerate(tenors) if t <= target_tenor), default=0)
    hi = min((i for i, t in enumerate(tenors) if t >= target_tenor), default=len(tenors) - 1)
    if lo == hi:
        return per_expiry[lo][1]
    if hi < lo:  # no straddle; nearest two
        lo, hi = min(lo, len(tenors) - 2), min(lo, len(tenors) - 2) + 1
    t1, (s1, k1) = per_expiry[lo]
    t2, (s2, k2) = per_expiry[hi]
    lam = (t2 - target_tenor) / (t2 - t1)
    return lam * s1 + (1 - lam) * s2, lam * k1 + (1 - lam) * k2


# ---------------------------------------------------------------------------
# bar-level indicators (one session of intraday bars)


def ofi(bars_day: pd.DataFrame) -> float:
    """Order flow imbalance: signed bar volume, sign(close-open), sign(0)=0."""
    diff = bars_day["close"].to_numpy(float) - bars_day["open"].to_numpy(float)
    return float(np.sum(np.sign(diff) * bars_day["volume"].to_numpy(float)))


def flow_concentration(ofi_values: Iterable[float]) -> float:
    """Signed order-flow concentration over the trailing window."""
    v = np.asarray(list(ofi_values), dtype=float)
    denom = np.abs(v).sum()
    if denom == 0.0:
        return 0.0
    s = v.sum()
    return float(s * abs(s) / denom)


def realized_volatility(bars_day: pd.DataFrame, prior_close: float) -> float:
    """Annualized realized volatility in percent from 1-min bars.

    Sum of squared intraday close-to-close log returns plus the squared
    overnight gap (first open over the prior session close).
    """
    c = bars_day["close"].to_numpy(float)
    if len(c) < 2:
        raise ValueError("need at least two bars for realized volatility")
    r_intra = np.diff(np.log(c))
    r_overnight = math.log(bars_day["open"].iloc[0] / prior_close)
    return math.sqrt(252.0 * (np.sum(r_intra**2) + r_overnight**2)) * 100.0


# ---------------------------------------------------------------------------
# daily-series indicators


def unrealized_profit(closes: pd.Series, daily_volumes: pd.Series, window: int = 63) -> pd.Series:
    """Price relative to the trailing volume-weighted average close."""
    pv = (closes * daily_volumes).rolling(window).sum()
    v = daily_volumes.rolling(window).sum()
    vwap = pv / v
    return ((closes - vwap) / vwap).rename("upg_63d")


def credit_spread(hy_yield: pd.Series, rf_yield: pd.Series) -> pd.Series:
    return (hy_yield - rf_yield).rename("credit_spread")


def amihud(returns: pd.Series, dollar_volume: pd.Series) -> pd.Series:
    """Absolute daily return per dollar traded; missing when volume is 0."""
    dv = dollar_volume.where(dollar_volume > 0)
    return (returns.abs() / dv).rename("amihud_illiquidity")


def ffr_slope(c1: pd.Series, c3: pd.Series) -> pd.Series:
    return (c1 - c3).rename("ffr_slope")


def ffr_basis(c1: pd.Series, effr: pd.Series) -> pd.Series:
    return ((100.0 - c1) - effr).rename("ffr_basis")


def vrp(vix: pd.Series, rv: pd.Series) -> pd.Series:
    return (vix - rv).rename("vrp")


def fx_momentum(prices: pd.Series, lag: int = 21) -> pd.Series:
    return (prices - prices.shift(lag)) / prices.shift(lag)


def fx_rv(prices: pd.Series, window: int = 21) -> pd.Series:
    lr = np.log(prices / prices.shift(1))
    return lr.rolling(window).std(ddof=1) * math.sqrt(252.0)


def winsorize_gex(series: pd.Series, pct: float = 99.9) -> pd.Series:
    """Remove values above the full-sample nearest-rank percentile."""
    vals = series.dropna().to_numpy(float)
    if len(vals) == 0:
        return series
    rank = max(1, math.ceil(pct / 100.0 * len(vals)))
    threshold = np.sort(vals)[rank - 1]
    return series.where(~(series > threshold))


# ---------------------------------------------------------------------------
# panel assembly


def build_panel(bundle: dataio.MarketBundle, winsorize: bool = True, rn_tenor: int = 30) -> pd.DataFrame:
    """Compute every canonical indicator on the price calendar.

    Values are NaN wherever a trailing window has not filled or an input
    is missing; downstream stages drop incomplete rows.
    """
    dates = bundle.prices.index
    out = pd.DataFrame(index=dates)

    # chain-based, per date
    chain_groups = dict(tuple(bundle.chain.groupby("date")))
    gex_oi, gex_v, dex_v, pcr_o, pcr_v, rn_s, rn_k = ({} for _ in range(7))
    for d in dates:
        grp = chain_groups.get(d)
        if grp is None:
            continue
        gex_oi[d] = gex(grp, "oi")
        gex_v[d] = gex(grp, "volume")
        dex_v[d] = dex(grp)
        pcr_o[d] = pcr(grp, "oi")
        pcr_v[d] = pcr(grp, "volume")
        try:
            rn_s[d], rn_k[d] = rn_moments(grp, rn_tenor)
        except (RnDensityError, ValueError):
            pass
    out["gex_oi"] = pd.Series(gex_oi)
    out["gex_volume"] = pd.Series(gex_v)
    out["dex_oi"] = pd.Series(dex_v)
    out["pcr_oi"] = pd.Series(pcr_o)
    out["pcr_volume"] = pd.Series(pcr_v)
    out["risk_neutral_skewness"] = pd.Series(rn_s)
    out["risk_neutral_kurtosis"] = pd.Series(rn_k)
    # exact-zero open-interest PCR values are data artifacts
    out["pcr_oi"] = out["pcr_oi"].where(out["pcr_oi"] != 0.0)

    # bar-based, per session
    bars = bundle.bars
    day = bars.index.normalize()
    co_sign = np.sign(bars["close"].to_numpy(float) - bars["open"].to_numpy(float))
    signed_vol = pd.Series(co_sign * bars["volume"].to_numpy(float), index=bars.index)
    ofi_daily = signed_vol.groupby(day).sum()
    out["ofi"] = ofi_daily.reindex(dates)
    fc = out["ofi"].rolling(10).apply(flow_concentration, raw=True)
    out["flow_concentration_10d"] = fc

    rv_vals = {}
    prior_close = None
    for d, grp in bars.groupby(day):
        if prior_close is not None and len(grp) >= 2:
            rv_vals[d] = realized_volatility(grp, prior_close)
        prior_close = grp["close"].iloc[-1]
    out["realized_volatility"] = pd.Series(rv_vals).reindex(dates)

    dollar_vol = (bars["close"] * bars["volume"]).groupby(day).sum().reindex(dates)
    volume_daily = bars["volume"].groupby(day).sum().reindex(dates)
    out["upg_63d"] = unrealized_profit(bundle.prices, volume_daily)
    rets = bundle.prices.pct_change()
    out["amihud_illiquidity"] = amihud(rets, dollar_vol)

    # macro-based
    macro = dataio.ffill_macro(bundle.macro).reindex(dates)
    out["credit_spread"] = credit_spread(macro["hy_yield"], macro["rf_yield"])
    out["ffr_slope"] = ffr_slope(macro["ffr_c1"], macro["ffr_c3"])
    out["ffr_basis"] = ffr_basis(macro["ffr_c1"], macro["effr"])
    out["vix"] = macro["vix"]
    out["vrp"] = vrp(macro["vix"], out["realized_volatility"])
    out["fx_momentum_6e_21d"] = fx_momentum(macro["fx_eur"])
    out["fx_momentum_6j_21d"] = fx_momentum(macro["fx_jpy"])
    out["fx_rv_6e_21d"] = fx_rv(macro["fx_eur"])
    out["fx_rv_6j_21d"] = fx_rv(macro["fx_jpy"])

    if winsorize:
        # removed outliers leave 1-day holes; fill them like macro gaps so a
        # single hole does not poison every trailing window that crosses it
        out["gex_oi"] = winsorize_gex(out["gex_oi"]).ffill(limit=dataio.MACRO_FFILL_LIMIT)
        out["gex_volume"] = winsorize_gex(out["gex_volume"]).ffill(limit=dataio.MACRO_FFILL_LIMIT)

    return out[INDICATOR_NAMES]
