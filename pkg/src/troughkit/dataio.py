"""On-disk schemas, CSV ingestion, and the synthetic market generator.

Four CSV schemas are the sole interchange format between stages:

    prices.csv : date,close
    chain.csv  : date,expiry,strike,kind,delta,gamma,oi,volume,mid
    bars.csv   : ts,open,high,low,close,volume
    macro.csv  : date,hy_yield,rf_yield,effr,ffr_c1,ffr_c3,fx_eur,fx_jpy,vix

Dates are ISO ``YYYY-MM-DD``; bar timestamps are ``YYYY-MM-DD HH:MM:SS``.
Missing values are empty fields.  ``hy_yield``/``rf_yield`` are decimal
fractions (0.05 = 5%); ``effr`` is in percent so that the funds-futures
basis ``(100 - ffr_c1) - effr`` is internally consistent.

The synthetic generator stands in for the proprietary daily feeds: it
produces a regime-switching log-price path with planted troughs, option
chains priced from a lognormal smile, intraday bars bridging the daily
closes, and persistent macro series, all deterministic in the seed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd


class ParseError(ValueError):
    """A CSV row failed to parse; message carries the 1-based line number."""


class SchemaError(ValueError):
    """Structurally valid CSV that violates a schema invariant."""


SCHEMA_COLUMNS = {
    "prices": ["date", "close"],
    "chain": ["date", "expiry", "strike", "kind", "delta", "gamma", "oi", "volume", "mid"],
    "bars": ["ts", "open", "high", "low", "close", "volume"],
    "macro": ["date", "hy_yield", "rf_yield", "effr", "ffr_c1", "ffr_c3", "fx_eur", "fx_jpy", "vix"],
}

MACRO_FFILL_LIMIT = 5  # trading days a macro gap may be forward-filled


@dataclass
class MarketBundle:
    """Everything the downstream stages consume, in memory."""

    prices: pd.Series  # date-indexed daily close
    chain: pd.DataFrame  # one row per contract per date
    bars: pd.DataFrame  # 1-minute OHLCV, ts-indexed
    macro: pd.DataFrame  # date-indexed macro columns

    def write(self, out_dir) -> None:
        import os

        os.makedirs(out_dir, exist_ok=True)
        write_csv(self.prices, os.path.join(out_dir, "prices.csv"), "prices")
        write_csv(self.chain, os.path.join(out_dir, "chain.csv"), "chain")
        write_csv(self.bars, os.path.join(out_dir, "bars.csv"), "bars")
        write_csv(self.macro, os.path.join(out_dir, "macro.csv"), "macro")


# ---------------------------------------------------------------------------
# loading


def _read_rows(path, schema):
    cols = SCHEMA_COLUMNS[schema]
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected header {','.join(cols)}")
        if [h.strip() for h in header] != cols:
            raise SchemaError(
                f"{path}: header {','.join(header)!r} does not match schema "
                f"{schema!r} ({','.join(cols)})"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(cols):
                raise ParseError(f"{path}:{lineno}: expected {len(cols)} fields, got {len(row)}")
            rows.append((lineno, row))
    return rows


def _parse_float(field, path, lineno, colname, allow_missing=False):
    field = field.strip()
    if field == "":
        if allow_missing:
            return math.nan
        raise ParseError(f"{path}:{lineno}: missing value in column {colname!r}")
    try:
        return float(field)
    except ValueError:
        raise ParseError(f"{path}:{lineno}: bad number {field!r} in column {colname!r}")


def _parse_date(field, path, lineno, colname="date"):
    try:
        return pd.Timestamp(field.strip())
    except ValueError:
        raise ParseError(f"{path}:{lineno}: bad date {field!r} in column {colname!r}")


def _check_date_order(dates, path, allow_repeats=False):
    prev = None
    for d in dates:
        if prev is not None:
            if d < prev:
                raise SchemaError(f"{path}: dates not sorted ascending at {d.date()}")
            if d == prev and not allow_repeats:
                raise SchemaError(f"{path}: duplicate date {d.date()}")
        prev = d


def load_prices(path) -> pd.Series:
    rows = _read_rows(path, "prices")
    dates, values = [], []
    for lineno, row in rows:
        dates.append(_parse_date(row[0], path, lineno))
        values.append(_parse_float(row[1], path, lineno, "close"))
    _check_date_order(dates, path)
    s = pd.Series(values, index=pd.DatetimeIndex(dates), name="close")
    if not np.isfinite(s.to_numpy()).all():
        raise SchemaError(f"{path}: non-finite close values")
    return s


def load_chain(path) -> pd.DataFrame:
    rows = _read_rows(path, "chain")
    recs = []
    for lineno, row in rows:
        date = _parse_date(row[0], path, lineno)
        expiry = _parse_date(row[1], path, lineno, "expiry")
        strike = _parse_float(row[2], path, lineno, "strike")
        kind = row[3].strip()
        if kind not in ("call", "put"):
            raise ParseError(f"{path}:{lineno}: kind must be call|put, got {kind!r}")
        delta = _parse_float(row[4], path, lineno, "delta")
        gamma = _parse_float(row[5], path, lineno, "gamma")
        oi = _parse_float(row[6], path, lineno, "oi")
        volume = _parse_float(row[7], path, lineno, "volume")
        mid = _parse_float(row[8], path, lineno, "mid")
        if strike <= 0:
            raise SchemaError(f"{path}:{lineno}: strike must be positive, got {strike}")
        if kind == "call" and not (0.0 <= delta <= 1.0):
            raise SchemaError(f"{path}:{lineno}: call delta {delta} outside [0, 1]")
        if kind == "put" and not (-1.0 <= delta <= 0.0):
            raise SchemaError(f"{path}:{lineno}: put delta {delta} outside [-1, 0]")
        if gamma < 0:
            raise SchemaError(f"{path}:{lineno}: negative gamma {gamma}")
        if oi < 0 or volume < 0:
            raise SchemaError(f"{path}:{lineno}: negative open interest or volume")
        recs.append((date, expiry, strike, kind, delta, gamma, oi, volume, mid))
    frame = pd.DataFrame(recs, columns=SCHEMA_COLUMNS["chain"])
    _check_date_order(list(frame["date"]), path, allow_repeats=True)
    return frame


def load_bars(path) -> pd.DataFrame:
    rows = _read_rows(path, "bars")
    recs = []
    for lineno, row in rows:
        ts = _parse_date(row[0], path, lineno, "ts")
        o = _parse_float(row[1], path, lineno, "open")
        h = _parse_float(row[2], path, lineno, "high")
        lo = _parse_float(row[3], path, lineno, "low")
        c = _parse_float(row[4], path, lineno, "close")
        v = _parse_float(row[5], path, lineno, "volume")
        if lo > min(o, c) + 1e-9 or h < max(o, c) - 1e-9:
            raise SchemaError(f"{path}:{lineno}: OHLC range violated (l={lo}, h={h}, o={o}, c={c})")
        if v < 0:
            raise SchemaError(f"{path}:{lineno}: negative volume")
        recs.append((ts, o, h, lo, c, v))
    frame = pd.DataFrame(recs, columns=SCHEMA_COLUMNS["bars"])
    ts = frame["ts"]
    same_day = ts.dt.normalize()
    for day, grp in ts.groupby(same_day):
        if not grp.is_monotonic_increasing or grp.duplicated().any():
            raise SchemaError(f"{path}: timestamps not strictly increasing on {day.date()}")
    return frame.set_index("ts")


def load_macro(path) -> pd.DataFrame:
    rows = _read_rows(path, "macro")
    cols = SCHEMA_COLUMNS["macro"][1:]
    dates, recs = [], []
    for lineno, row in rows:
        dates.append(_parse_date(row[0], path, lineno))
        recs.append([_parse_float(row[i + 1], path, lineno, c, allow_missing=True) for i, c in enumerate(cols)])
    _check_date_order(dates, path)
    frame = pd.DataFrame(recs, columns=cols, index=pd.DatetimeIndex(dates))
    for col in ("hy_yield", "rf_yield"):
        vals = frame[col].dropna()
        if ((vals < 0) | (vals > 1)).any():
            raise SchemaError(f"{path}: {col} must be a decimal fraction in [0, 1]")
    for col in ("ffr_c1", "ffr_c3", "fx_eur", "fx_jpy"):
        if (frame[col].dropna() <= 0).any():
            raise SchemaError(f"{path}: {col} prices must be positive")
    return frame


_LOADERS = {"prices": load_prices, "chain": load_chain, "bars": load_bars, "macro": load_macro}


def load_csv(path, schema):
    """Load one CSV according to a named schema, validating its invariants."""
    if schema not in _LOADERS:
        raise SchemaError(f"unknown schema {schema!r}; expected one of {sorted(_LOADERS)}")
    return _LOADERS[schema](path)


def load_bundle(in_dir) -> MarketBundle:
    import os

    return MarketBundle(
        prices=load_prices(os.path.join(in_dir, "prices.csv")),
        chain=load_chain(os.path.join(in_dir, "chain.csv")),
        bars=load_bars(os.path.join(in_dir, "bars.csv")),
        macro=load_macro(os.path.join(in_dir, "macro.csv")),
    )


# ---------------------------------------------------------------------------
# writing


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return ""
        return repr(x)
    return str(x)


def write_csv(obj, path, schema) -> None:
    """Write a container back to its schema; inverse of :func:`load_csv`."""
    cols = SCHEMA_COLUMNS[schema]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        if schema == "prices":
            for d, v in obj.items():
                writer.writerow([d.date().isoformat(), _fmt(float(v))])
        elif schema == "chain":
            for rec in obj.itertuples(index=False):
                writer.writerow(
                    [
                        rec.date.date().isoformat(),
                        rec.expiry.date().isoformat(),
                        _fmt(float(rec.strike)),
                        rec.kind,
                        _fmt(float(rec.delta)),
                        _fmt(float(rec.gamma)),
                        _fmt(float(rec.oi)),
                        _fmt(float(rec.volume)),
                        _fmt(float(rec.mid)),
                    ]
                )
        elif schema == "bars":
            for ts, rec in obj.iterrows():
                writer.writerow(
                    [ts.strftime("%Y-%m-%d %H:%M:%S")]
                    + [_fmt(float(rec[c])) for c in ("open", "high", "low", "close", "volume")]
                )
        elif schema == "macro":
            for d, rec in obj.iterrows():
                writer.writerow([d.date().isoformat()] + [_fmt(float(rec[c])) for c in cols[1:]])
        else:
            raise SchemaError(f"unknown schema {schema!r}")


def ffill_macro(frame: pd.DataFrame, limit: int = MACRO_FFILL_LIMIT) -> pd.DataFrame:
    """Forward-fill macro gaps up to `limit` days; longer gaps are an error."""
    filled = frame.ffill(limit=limit)
    seen = frame.notna().cummax()  # False only before a column's first observation
    remaining = filled.isna() & seen
    if remaining.to_numpy().any():
        col = remaining.any()[lambda s: s].index[0]
        day = remaining.index[remaining[col]][0]
        raise SchemaError(f"macro column {col!r} has a gap longer than {limit} days at {day.date()}")
    return filled


# ---------------------------------------------------------------------------
# synthetic market


def _norm_cdf(x):
    return 0.5 * (1.0 + np.vectorize(math.erf)(x / math.sqrt(2.0)))


def _bs_greeks(s, k, sigma, tau):
    st = sigma * np.sqrt(tau)
    d1 = (np.log(s / k) + 0.5 * sigma**2 * tau) / st
    pdf = np.exp(-0.5 * d1**2) / math.sqrt(2.0 * math.pi)
    delta_call = _norm_cdf(d1)
    gamma = pdf / (s * st)
    return delta_call, gamma


def _dip_profile(n_days, trough_days, depth, half_width):
    """Additive log-price dips: sharp-bottomed V at each planted trough."""
    dip = np.zeros(n_days)
    damp = np.ones(n_days)
    for t0 in trough_days:
        lo = max(0, t0 - int(1.45 * half_width))
        hi = min(n_days - 1, t0 + int(1.45 * half_width))
        for t in range(lo, hi + 1):
            u = abs(t - t0) / half_width
            if u <= 1.0:
                d = -depth * (1.0 - u**0.6)  # cusp at the bottom, flat shoulders
                if d < dip[t]:
                    dip[t] = d
            # noise stays small across the whole censoring radius so the
            # V shape, not the noise, decides the dated extremum
            damp[t] = min(damp[t], 0.10 + 0.25 * u if u <= 1.45 else 0.60)
    return dip, damp


def generate_synthetic_market(
    seed: int,
    n_days: int,
    trough_dates: Optional[Sequence[int]] = None,
    bars_per_day: int = 78,
    start: str = "2015-01-02",
) -> MarketBundle:
    """Generate a full input bundle with planted troughs.

    `trough_dates` are day offsets into the trading calendar; when omitted,
    troughs are planted every ~210 trading days after a 320-day warmup so
    that every downstream window (wavelet 256, rank 252) is exercised.
    Deterministic in `seed`.
    """
    if n_days < 600:
        raise ValueError(f"n_days must be >= 600 (need 252-day windows plus folds), got {n_days}")
    if trough_dates is None:
        trough_days = list(range(320, n_days - 40, 210))
    else:
        trough_days = sorted(int(t) for t in trough_dates)
        if trough_days and (trough_days[0] < 0 or trough_days[-1] >= n_days):
            raise ValueError("trough_dates must lie inside [0, n_days)")

    root = np.random.SeedSequence(int(seed))
    streams = {
        name: np.random.default_rng(s)
        for name, s in zip(
            ("path", "vix", "macro", "fx", "chain", "bars"),
            root.spawn(6),
        )
    }

    dates = pd.bdate_range(start, periods=n_days)

    # --- daily log-price path: drift + GARCH-like vol + planted dips
    rng = streams["path"]
    z = rng.standard_normal(n_days)
    dip, damp = _dip_profile(n_days, trough_days, depth=0.30, half_width=90)
    sigma = np.empty(n_days)
    rets = np.empty(n_days)
    sig2 = 0.010**2
    for t in range(n_days):
        stress = -dip[t] / 0.30  # 0 calm .. 1 at trough bottom
        target = (0.007 + 0.013 * stress) ** 2
        sig2 = 0.20 * target + 0.70 * sig2 + 0.10 * (rets[t - 1] ** 2 if t else sig2)
        sigma[t] = math.sqrt(sig2)
        drift = 0.0004 if damp[t] > 0.99 else 0.0
        rets[t] = drift + sigma[t] * z[t] * damp[t]
    log_p = math.log(4000.0) + np.cumsum(rets) + dip
    closes = np.exp(log_p)
    prices = pd.Series(closes, index=dates, name="close")

    # --- panic state feeding the indicator-bearing series
    roll_max = pd.Series(log_p).rolling(63, min_periods=1).max().to_numpy()
    panic = np.clip((roll_max - log_p) / 0.24, 0.0, 1.0)

    # trailing 21d realized vol of the daily path, annualized fraction
    lr = np.diff(log_p, prepend=log_p[0])
    trail_var = pd.Series(lr).rolling(21, min_periods=5).var(ddof=0).bfill().to_numpy()
    path_vol = np.sqrt(np.maximum(trail_var, 1e-8) * 252.0)

    # --- macro series
    rng = streams["vix"]
    vix = np.empty(n_days)
    level = 14.0
    for t in range(n_days):
        anchor = 12.5 + 30.0 * panic[t]
        level = 0.90 * level + 0.10 * anchor + 1.15 * rng.standard_normal()
        vix[t] = max(9.0, level)

    rng = streams["macro"]
    hy = np.empty(n_days)
    rf = np.empty(n_days)
    effr = np.empty(n_days)
    hy_lvl, rf_lvl, effr_lvl = 0.055, 0.012, 1.2
    for t in range(n_days):
        hy_lvl = 0.995 * hy_lvl + 0.005 * (0.050 + 0.05 * panic[t]) + 0.0004 * rng.standard_normal()
        rf_lvl = 0.998 * rf_lvl + 0.002 * 0.012 + 0.0001 * rng.standard_normal()
        effr_lvl = 0.999 * effr_lvl + 0.001 * 1.2 + 0.004 * rng.standard_normal()
        hy[t] = min(0.9, max(0.011, hy_lvl))
        rf[t] = min(0.5, max(0.001, rf_lvl))
        effr[t] = max(0.01, effr_lvl)
    ease = 1.6 * panic + 0.08 * rng.standard_normal(n_days)  # expected cuts, percent
    ffr_c1 = 100.0 - effr + 0.02 * rng.standard_normal(n_days)
    ffr_c3 = 100.0 - (effr - ease) + 0.02 * rng.standard_normal(n_days)

    rng = streams["fx"]
    fx_eur = 1.10 * np.exp(np.cumsum((0.004 + 0.006 * panic) * rng.standard_normal(n_days) / math.sqrt(252)))
    fx_jpy = 0.0090 * np.exp(
        np.cumsum((0.0004 * panic) + (0.005 + 0.007 * panic) * rng.standard_normal(n_days) / math.sqrt(252))
    )
    macro = pd.DataFrame(
        {
            "hy_yield": hy,
            "rf_yield": rf,
            "effr": effr,
            "ffr_c1": ffr_c1,
            "ffr_c3": ffr_c3,
            "fx_eur": fx_eur,
            "fx_jpy": fx_jpy,
            "vix": vix,
        },
        index=dates,
    )

    # --- option chain: two expiries straddling 30 calendar days; mids priced
    # from an explicit terminal density so call prices are convex in strike
    rng = streams["chain"]
    moneyness = np.linspace(0.82, 1.18, 13)
    tenors = (21, 49)
    grid_m = np.linspace(0.45, 1.65, 121)
    recs = []
    for t in range(n_days):
        s = closes[t]
        base_vol = max(0.08, path_vol[t])
        for tenor in tenors:
            expiry = dates[t] + pd.Timedelta(days=tenor)
            tau = tenor / 365.0
            strikes = np.round(s * moneyness, 2)
            sig_t = base_vol * math.sqrt(tau)
            w_tail = 0.04 + 0.10 * panic[t]  # crash component fattens the left tail
            pdf = (1.0 - w_tail) * np.exp(-0.5 * ((np.log(grid_m) + 0.5 * sig_t**2) / sig_t) ** 2) / grid_m
            pdf += w_tail * np.exp(-0.5 * ((np.log(grid_m) + 0.5 * (2.5 * sig_t) ** 2) / (2.5 * sig_t)) ** 2) / grid_m
            pdf /= pdf.sum()
            terminal = s * grid_m
            call_mid = pdf @ np.maximum(terminal[:, None] - strikes[None, :], 0.0)
            put_mid = pdf @ np.maximum(strikes[None, :] - terminal[:, None], 0.0)
            smile = base_vol * (1.0 + 0.25 * (1.0 - strikes / s))
            d_call, gamma = _bs_greeks(s, strikes, smile, tau)
            otm_put = np.exp(-8.0 * np.maximum(strikes / s - 1.0, 0.0))
            otm_call = np.exp(-8.0 * np.maximum(1.0 - strikes / s, 0.0))
            put_oi = 900.0 * (1.25 + 0.9 * panic[t]) * otm_put * (0.6 + rng.random(13))
            call_oi = 900.0 * otm_call * (0.6 + rng.random(13))
            put_v = 250.0 * (1.0 + 1.4 * panic[t]) * otm_put * (0.5 + rng.random(13))
            call_v = 250.0 * otm_call * (0.5 + rng.random(13))
            for j, k in enumerate(strikes):
                recs.append(
                    (dates[t], expiry, k, "call", d_call[j], gamma[j], float(round(call_oi[j])), float(round(call_v[j])), call_mid[j])
                )
                recs.append(
                    (dates[t], expiry, k, "put", d_call[j] - 1.0, gamma[j], float(round(put_oi[j])), float(round(put_v[j])), put_mid[j])
                )
    chain = pd.DataFrame(recs, columns=SCHEMA_COLUMNS["chain"])

    # --- intraday bars bridging daily closes
    rng = streams["bars"]
    m = bars_per_day
    all_ts = []
    opens = np.empty(n_days * m)
    highs = np.empty(n_days * m)
    lows = np.empty(n_days * m)
    closes_1m = np.empty(n_days * m)
    vols = np.empty(n_days * m)
    prev_close = closes[0] / (1.0 + rets[0])
    minutes = pd.timedelta_range("09:31:00", periods=m, freq="min")
    for t in range(n_days):
        day_open = prev_close * math.exp(0.25 * rets[t])
        w = rng.standard_normal(m) * (sigma[t] / math.sqrt(m))
        bridge = np.cumsum(w)
        bridge -= np.linspace(bridge[0], bridge[-1], m)
        path = np.log(day_open) + np.linspace(0.0, math.log(closes[t] / day_open), m) + bridge
        px = np.exp(path)
        px[-1] = closes[t]
        o = np.empty(m)
        o[0] = day_open
        o[1:] = px[:-1]
        spread = np.abs(rng.standard_normal(m)) * (sigma[t] / math.sqrt(m)) * px
        hi = np.maximum(o, px) + 0.5 * spread
        lo = np.maximum(np.minimum(o, px) - 0.5 * spread, 0.01)
        ret_sign = np.sign(px - o)
        vol = 1200.0 * (1.0 + 2.0 * panic[t]) * np.exp(0.35 * rng.standard_normal(m))
        vol *= 1.0 + 0.55 * panic[t] * (ret_sign < 0)  # sell pressure in stress
        i0 = t * m
        opens[i0 : i0 + m] = o
        highs[i0 : i0 + m] = hi
        lows[i0 : i0 + m] = lo
        closes_1m[i0 : i0 + m] = px
        vols[i0 : i0 + m] = np.round(vol)
        all_ts.append(dates[t] + minutes)
        prev_close = closes[t]
    ts_index = pd.DatetimeIndex(np.concatenate([ts.to_numpy() for ts in all_ts]), name="ts")
    bars = pd.DataFrame(
        {"open": opens, "high": highs, "low": lows, "close": closes_1m, "volume": vols},
        index=ts_index,
    )

    return MarketBundle(prices=prices, chain=chain, bars=bars, macro=macro)
