"""Stylized long-only futures backtest driven by calibrated probabilities.

A signal fires on any day whose trough probability strictly exceeds the
threshold; each signal opens an independent long position at that day's
close, held for a fixed number of trading days and exited at the close.
P&L uses a $50 point multiplier and a flat $5 round-trip cost per
contract.  Fixed sizing trades one contract per signal; pyramiding trades
N contracts on the Nth consecutive signal day (consecutive means adjacent
positions in the trading calendar of the close series).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd

POINT_MULTIPLIER = 50.0
ROUND_TRIP_COST = 5.0
PROFIT_FACTOR_CAP = 1e6
DEFAULT_HOLDINGS = (5, 7, 10, 12, 15, 17, 20)
SIZINGS = ("fixed", "pyramiding")


@dataclass(frozen=True)
class Trade:
    entry_date: pd.Timestamp
    exit_date: pd.Timestamp
    entry_close: float
    exit_close: float
    size: int

    @property
    def pnl(self) -> float:
        return (self.exit_close - self.entry_close) * POINT_MULTIPLIER * self.size - ROUND_TRIP_COST * self.size


@dataclass(frozen=True)
class BacktestReport:
    total_net_pnl: float
    sharpe: float
    profit_factor: float
    max_drawdown: float  # dollars, <= 0
    max_drawdown_pct: float  # of equity peak at the drawdown start


def generate_signals(probs: pd.Series, threshold: float = 0.05) -> pd.DatetimeIndex:
    """Dates whose probability strictly exceeds the threshold."""
    p = probs.dropna()
    if ((p < 0) | (p > 1)).any():
        raise ValueError("probabilities outside [0, 1]")
    return pd.DatetimeIndex(p.index[p > threshold])


def replay(entries: Sequence[Tuple[pd.Timestamp, int]], closes: pd.Series, holding: int) -> List[Trade]:
    """Open one trade per (entry date, size); exit `holding` trading days on.

    Entries whose exit would fall beyond the price series are dropped with
    a warning.
    """
    trades = []
    for date, size in entries:
        pos = closes.index.get_indexer([pd.Timestamp(date)])[0]
        if pos < 0:
            raise ValueError(f"entry date {date} not in the price calendar")
        exit_pos = pos + holding
        if exit_pos >= len(closes):
            warnings.warn(f"signal at {pd.Timestamp(date).date()} too close to series end, trade dropped")
            continue
        trades.append(
            Trade(
                entry_date=closes.index[pos],
                exit_date=closes.index[exit_pos],
                entry_close=float(closes.iloc[pos]),
                exit_close=float(closes.iloc[exit_pos]),
                size=int(size),
            )
        )
    return trades


def simulate(signals: pd.DatetimeIndex, closes: pd.Series, holding: int, sizing: str = "fixed") -> List[Trade]:
    """One trade per signal date under the chosen sizing rule."""
    if sizing not in SIZINGS:
        raise ValueError(f"sizing must be one of {SIZINGS}, got {sizing!r}")
    positions = closes.index.get_indexer(signals)
    if (positions < 0).any():
        missing = signals[positions < 0][0]
        raise ValueError(f"signal date {missing.date()} not in the price calendar")
    order = np.argsort(positions)
    entries = []
    prev_pos = None
    run = 0
    for k in order:
        pos = positions[k]
        run = run + 1 if (prev_pos is not None and pos == prev_pos + 1) else 1
        prev_pos = pos
        entries.append((signals[k], run if sizing == "pyramiding" else 1))
    return replay(entries, closes, holding)


def equity_curve(trades: Sequence[Trade], closes: pd.Series, initial_capital: float) -> pd.Series:
    """Daily mark-to-market equity from first entry through last exit.

    Open positions are marked at the daily close; the round-trip cost hits
    at exit as part of the realized P&L.
    """
    if not trades:
        raise ValueError("no trades to mark")
    start = min(t.entry_date for t in trades)
    end = max(t.exit_date for t in trades)
    window = closes.loc[start:end]
    equity = np.full(len(window), float(initial_capital))
    pos_of = {d: i for i, d in enumerate(window.index)}
    px = window.to_numpy(dtype=float)
    for t in trades:
        i0 = pos_of[t.entry_date]
        i1 = pos_of[t.exit_date]
        unrealized = (px[i0:i1] - t.entry_close) * POINT_MULTIPLIER * t.size
        equity[i0:i1] += unrealized
        equity[i1:] += t.pnl
    return pd.Series(equity, index=window.index, name="equity")


def metrics(trades: Sequence[Trade], closes: pd.Series, initial_capital: float) -> BacktestReport:
    """Headline statistics over the mark-to-market equity path."""
    if not trades:
        raise ValueError("no trades")
    equity = equity_curve(trades, closes, initial_capital)
    changes = equity.diff().dropna().to_numpy()
    if len(changes) == 0 or float(np.std(changes, ddof=1) if len(changes) > 1 else 0.0) == 0.0:
        raise ValueError("Sharpe undefined: equity has zero variance")
    sharpe = float(np.mean(changes) / np.std(changes, ddof=1) * np.sqrt(252.0))

    pnls = np.array([t.pnl for t in trades])
    wins = pnls[pnls > 0].sum()
    losses = -pnls[pnls < 0].sum()
    profit_factor = float(min(wins / losses if losses > 0 else PROFIT_FACTOR_CAP, PROFIT_FACTOR_CAP))

    eq = equity.to_numpy()
    peak = eq[0]
    max_dd = 0.0
    peak_at_dd = eq[0]
    for v in eq:
        if v > peak:
            peak = v
        dd = v - peak
        if dd < max_dd:
            max_dd = dd
            peak_at_dd = peak
    dd_pct = float(-max_dd / peak_at_dd * 100.0) if peak_at_dd != 0 else float("nan")
    return BacktestReport(
        total_net_pnl=float(pnls.sum()),
        sharpe=sharpe,
        profit_factor=profit_factor,
        max_drawdown=float(max_dd),
        max_drawdown_pct=dd_pct,
    )


def sensitivity_sweep(
    probs: pd.Series,
    closes: pd.Series,
    initial_capital: float,
    holdings: Sequence[int] = DEFAULT_HOLDINGS,
    sizings: Sequence[str] = SIZINGS,
    threshold: float = 0.05,
) -> pd.DataFrame:
    """One report row per (holding period, sizing) cell."""
    signals = generate_signals(probs, threshold)
    rows = []
    for holding in holdings:
        for sizing in sizings:
            trades = simulate(signals, closes, holding, sizing)
            rep = metrics(trades, closes, initial_capital)
            rows.append(
                {
                    "holding": holding,
                    "sizing": sizing,
                    "n_trades": len(trades),
                    "total_net_pnl": rep.total_net_pnl,
                    "sharpe": rep.sharpe,
                    "profit_factor": rep.profit_factor,
                    "max_drawdown": rep.max_drawdown,
                    "max_drawdown_pct": rep.max_drawdown_pct,
                }
            )
    return pd.DataFrame(rows)


def trades_frame(trades: Sequence[Trade]) -> pd.DataFrame:
    """Trade log in the appendix layout."""
    return pd.DataFrame(
        {
            "trade": range(len(trades)),
            "entry_date": [t.entry_date for t in trades],
            "exit_date": [t.exit_date for t in trades],
            "entry_price": [t.entry_close for t in trades],
            "size": [t.size for t in trades],
            "pnl": [t.pnl for t in trades],
        }
    )
