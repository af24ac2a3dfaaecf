"""Rule-based dating of market peaks and troughs, and trough labels.

The dating algorithm scans a daily log-price series for windowed local
extrema, enforces peak/trough alternation, then censors phases shorter
than ``min_phase`` trading days and same-kind cycles shorter than
``min_cycle`` trading days.  Censoring scans restart from the beginning
after every drop, with alternation re-enforced in between.  Durations are
measured in trading days (index distance), and extrema are strict: ties
never qualify.

Confirmed troughs are converted into binary classification labels: a
window of ``label_window`` days ending at each trough date (inclusive)
is labeled 1, everything else 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np
import pandas as pd

from ._accel import njit

PEAK = "peak"
TROUGH = "trough"


@dataclass(frozen=True)
class TurningPoint:
    date: pd.Timestamp
    log_price: float
    kind: str  # "peak" | "trough"


@dataclass(frozen=True)
class BBParams:
    """Dating parameters, in trading days."""

    order: int = 20
    min_phase: int = 30
    min_cycle: int = 90

    def __post_init__(self):
        if self.order <= 0 or self.min_phase <= 0 or self.min_cycle <= 0:
            raise ValueError("order, min_phase and min_cycle must all be positive")
        if self.min_cycle < self.min_phase:
            raise ValueError("min_cycle must be >= min_phase")


@njit
def _extrema_scan(x, order):
    """Flag strict windowed extrema: +1 peak, -1 trough, 0 otherwise."""
    n = x.shape[0]
    flags = np.zeros(n, dtype=np.int8)
    for i in range(order, n - order):
        v = x[i]
        is_max = True
        is_min = True
        for j in range(i - order, i + order + 1):
            if j == i:
                continue
            if x[j] >= v:
                is_max = False
            if x[j] <= v:
                is_min = False
            if not is_max and not is_min:
                break
        if is_max:
            flags[i] = 1
        elif is_min:
            flags[i] = -1
    return flags


def find_local_extrema(log_prices: pd.Series, order: int) -> List[TurningPoint]:
    """All strict local peaks/troughs of the ±order window, date order.

    Only dates with a full window on both sides qualify; monotone series
    therefore yield no candidates.
    """
    n = len(log_prices)
    if n <= 2 * order:
        raise ValueError(f"series length {n} too short for order {order} (need > {2 * order})")
    x = np.asarray(log_prices.to_numpy(), dtype=np.float64)
    flags = _extrema_scan(x, order)
    out = []
    for i in np.nonzero(flags)[0]:
        out.append(
            TurningPoint(log_prices.index[i], float(x[i]), PEAK if flags[i] > 0 else TROUGH)
        )
    return out


def enforce_alternation(turns: List[TurningPoint]) -> List[TurningPoint]:
    """Collapse same-kind runs, keeping the more extreme member."""
    processed: List[TurningPoint] = []
    for cur in turns:
        if not processed or cur.kind != processed[-1].kind:
            processed.append(cur)
        else:
            last = processed[-1]
            if (cur.kind == PEAK and cur.log_price > last.log_price) or (
                cur.kind == TROUGH and cur.log_price < last.log_price
            ):
                processed[-1] = cur
    return processed


def _positions(turns, calendar: pd.DatetimeIndex):
    pos = calendar.get_indexer([t.date for t in turns])
    if (pos < 0).any():
        missing = [t.date for t, p in zip(turns, pos) if p < 0][0]
        raise ValueError(f"turn date {missing.date()} not in the price calendar")
    return pos


def _extremeness(turns, i):
    # amplitude relative to adjacent turns; boundary turns use their one neighbor
    v = turns[i].log_price
    gaps = []
    if i > 0:
        gaps.append(abs(v - turns[i - 1].log_price))
    if i < len(turns) - 1:
        gaps.append(abs(v - turns[i + 1].log_price))
    return sum(gaps) / len(gaps) if gaps else 0.0


def censor_phases(turns, min_phase: int, calendar: pd.DatetimeIndex) -> List[TurningPoint]:
    """Drop turns until no adjacent pair is closer than min_phase days.

    Each violation drops the less extreme member of the pair, re-enforces
    alternation, and restarts the scan.
    """
    turns = list(turns)
    changed = True
    while changed:
        changed = False
        pos = _positions(turns, calendar)
        for i in range(len(turns) - 1):
            if pos[i + 1] - pos[i] < min_phase:
                drop = i if _extremeness(turns, i) < _extremeness(turns, i + 1) else i + 1
                del turns[drop]
                turns = enforce_alternation(turns)
                changed = True
                break
    return turns


def censor_cycles(turns, min_cycle: int, log_prices: pd.Series) -> List[TurningPoint]:
    """Drop turns until no same-kind pair (i, i+2) is closer than min_cycle.

    The middle turn survives only when it is the true extremum of the
    price series between its neighbors; otherwise it is dropped and the
    outer pair kept.
    """
    turns = list(turns)
    calendar = log_prices.index
    x = log_prices.to_numpy()
    changed = True
    while changed:
        changed = False
        pos = _positions(turns, calendar)
        for i in range(len(turns) - 2):
            if pos[i + 2] - pos[i] < min_cycle:
                t2 = turns[i + 1]
                seg = x[pos[i] : pos[i + 2] + 1]
                is_true_ext = (t2.kind == PEAK and t2.log_price >= seg.max()) or (
                    t2.kind == TROUGH and t2.log_price <= seg.min()
                )
                if is_true_ext:
                    del turns[i + 2]
                    del turns[i]
                else:
                    del turns[i + 1]
                turns = enforce_alternation(turns)
                changed = True
                break
    return turns


def relocate_turns(turns, log_prices: pd.Series) -> List[TurningPoint]:
    """Move each interior turn to the true extremum between its neighbors.

    The windowed candidate scan can miss the actual segment extremum when
    it sits within `order` days of a neighboring turn; this classic
    refinement pins every interior peak (trough) to the strict maximum
    (minimum) of the price path between its adjacent turns.
    """
    turns = list(turns)
    x = log_prices.to_numpy()
    calendar = log_prices.index
    changed = True
    while changed:
        changed = False
        pos = _positions(turns, calendar)
        for i in range(1, len(turns) - 1):
            seg = x[pos[i - 1] + 1 : pos[i + 1]]
            if len(seg) == 0:
                continue
            if turns[i].kind == PEAK:
                best = int(seg.argmax())
                better = seg[best] > turns[i].log_price
            else:
                best = int(seg.argmin())
                better = seg[best] < turns[i].log_price
            if better:
                j = pos[i - 1] + 1 + best
                turns[i] = TurningPoint(calendar[j], float(x[j]), turns[i].kind)
                changed = True
    return turns


def identify_turns(log_prices: pd.Series, params: BBParams = BBParams()) -> List[TurningPoint]:
    """Full dating pass: extrema, alternation, censoring, and relocation.

    Censoring and relocation are iterated to a fixed point so the output
    simultaneously satisfies alternation, the minimum phase and cycle
    lengths, and peak/trough extremality between neighbors.
    """
    turns = find_local_extrema(log_prices, params.order)
    turns = enforce_alternation(turns)
    for _ in range(100):
        turns = censor_phases(turns, params.min_phase, log_prices.index)
        turns = censor_cycles(turns, params.min_cycle, log_prices)
        relocated = relocate_turns(turns, log_prices)
        if relocated == turns:
            return relocated
        turns = relocated
    return turns


def make_labels(turns, all_dates: pd.DatetimeIndex, label_window: int) -> pd.Series:
    """Binary labels: 1 on the label_window+1 trading days ending at each trough."""
    labels = np.zeros(len(all_dates), dtype=np.int8)
    for t in turns:
        if t.kind != TROUGH:
            continue
        pos = all_dates.get_indexer([t.date])[0]
        if pos < 0:
            raise ValueError(f"trough date {t.date.date()} not in the label calendar")
        labels[max(0, pos - label_window) : pos + 1] = 1
    return pd.Series(labels, index=all_dates, name="label")


def turns_frame(turns) -> pd.DataFrame:
    """Turn list as a date/log_price/kind frame (the turns.csv layout)."""
    return pd.DataFrame(
        {
            "date": [t.date for t in turns],
            "log_price": [t.log_price for t in turns],
            "kind": [t.kind for t in turns],
        }
    )
