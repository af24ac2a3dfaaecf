import numpy as np
import pandas as pd
import pytest

from troughkit import turnlab
from troughkit.turnlab import PEAK, TROUGH, BBParams, TurningPoint

from conftest import random_walk_series


def _series(values, start="2015-01-02"):
    return pd.Series(values, index=pd.bdate_range(start, periods=len(values)), dtype=float)


def _tp(series, pos, kind):
    return TurningPoint(series.index[pos], float(series.iloc[pos]), kind)


def brute_force_extrema(series, order):
    """Exhaustive windowed scan; the independent oracle for the kernel."""
    x = series.to_numpy()
    out = []
    for i in range(order, len(x) - order):
        window = np.concatenate([x[i - order : i], x[i + 1 : i + order + 1]])
        if (x[i] > window).all():
            out.append((i, PEAK))
        elif (x[i] < window).all():
            out.append((i, TROUGH))
    return out


def test_monotone_series_has_no_extrema():
    s = _series(np.linspace(0, 1, 120))
    assert turnlab.find_local_extrema(s, 5) == []


def test_triangle_peak_at_center():
    s = _series(np.concatenate([np.arange(10.0), np.arange(8.0, -1, -1)]))
    turns = turnlab.find_local_extrema(s, 2)
    assert len(turns) == 1
    assert turns[0].kind == PEAK
    assert turns[0].date == s.index[9]


def test_extrema_match_brute_force_scan():
    for seed in range(20):
        s = random_walk_series(seed, n=200)
        got = turnlab.find_local_extrema(s, 5)
        want = brute_force_extrema(s, 5)
        assert [(s.index.get_indexer([t.date])[0], t.kind) for t in got] == want


def test_series_too_short_errors():
    with pytest.raises(ValueError, match="too short"):
        turnlab.find_local_extrema(_series(np.arange(10.0)), 5)


def test_alternation_keeps_more_extreme_peak():
    s = _series(np.zeros(30))
    turns = [
        TurningPoint(s.index[0], 1.0, PEAK),
        TurningPoint(s.index[5], 1.2, PEAK),
        TurningPoint(s.index[10], 0.5, TROUGH),
    ]
    out = turnlab.enforce_alternation(turns)
    assert [(t.log_price, t.kind) for t in out] == [(1.2, PEAK), (0.5, TROUGH)]


def test_alternation_identity_when_alternating():
    s = _series(np.zeros(30))
    turns = [
        TurningPoint(s.index[0], 1.0, PEAK),
        TurningPoint(s.index[10], 0.5, TROUGH),
        TurningPoint(s.index[20], 1.1, PEAK),
    ]
    assert turnlab.enforce_alternation(turns) == turns


def test_alternation_trough_run_keeps_minimum():
    s = _series(np.zeros(30))
    turns = [
        TurningPoint(s.index[0], 0.5, TROUGH),
        TurningPoint(s.index[4], 0.3, TROUGH),
        TurningPoint(s.index[8], 0.4, TROUGH),
        TurningPoint(s.index[15], 1.0, PEAK),
    ]
    out = turnlab.enforce_alternation(turns)
    assert [(t.log_price, t.kind) for t in out] == [(0.3, TROUGH), (1.0, PEAK)]


def test_censor_phases_drops_less_extreme_of_close_pair():
    s = _series(np.zeros(60))
    # T(0.0) .. P(1.0) and T(0.8) 3 days later; the trough is less extreme
    turns = [
        TurningPoint(s.index[0], 0.0, TROUGH),
        TurningPoint(s.index[30], 1.0, PEAK),
        TurningPoint(s.index[33], 0.8, TROUGH),
    ]
    out = turnlab.censor_phases(turns, 5, s.index)
    assert [(t.log_price, t.kind) for t in out] == [(0.0, TROUGH), (1.0, PEAK)]


def test_censor_phases_identity_when_spaced():
    s = _series(np.zeros(60))
    turns = [
        TurningPoint(s.index[0], 0.0, TROUGH),
        TurningPoint(s.index[30], 1.0, PEAK),
        TurningPoint(s.index[59], 0.2, TROUGH),
    ]
    assert turnlab.censor_phases(turns, 5, s.index) == turns


def test_censor_phases_idempotent_on_random_inputs():
    for seed in range(10):
        s = random_walk_series(seed, n=300)
        turns = turnlab.enforce_alternation(turnlab.find_local_extrema(s, 5))
        once = turnlab.censor_phases(turns, 15, s.index)
        twice = turnlab.censor_phases(once, 15, s.index)
        assert once == twice


def test_censor_cycles_middle_true_extremum_drops_outer():
    # trough at 10, peak at 40 (the global max between), trough at 70; cycle 60 < 90
    x = np.zeros(200)
    x[:10] = np.linspace(1.0, 0.0, 10)
    x[10:40] = np.linspace(0.0, 2.0, 30)
    x[40:70] = np.linspace(2.0, 0.1, 30)
    x[70:] = np.linspace(0.1, 1.8, 130)
    s = _series(x)
    turns = [_tp(s, 10, TROUGH), _tp(s, 40, PEAK), _tp(s, 70, TROUGH)]
    out = turnlab.censor_cycles(turns, 90, s)
    assert [(t.kind, s.index.get_indexer([t.date])[0]) for t in out] == [(PEAK, 40)]


def test_censor_cycles_middle_not_extremum_dropped():
    # same geometry but the price series exceeds the middle peak between the troughs
    x = np.zeros(200)
    x[:10] = np.linspace(1.0, 0.0, 10)
    x[10:40] = np.linspace(0.0, 2.0, 30)
    x[40:55] = np.linspace(2.0, 2.5, 15)  # higher run after the candidate peak
    x[55:70] = np.linspace(2.5, 0.1, 15)
    x[70:] = np.linspace(0.1, 1.8, 130)
    s = _series(x)
    turns = [_tp(s, 10, TROUGH), _tp(s, 40, PEAK), _tp(s, 70, TROUGH)]
    out = turnlab.censor_cycles(turns, 90, s)
    kinds = [(t.kind, s.index.get_indexer([t.date])[0]) for t in out]
    assert kinds == [(TROUGH, 10)] or kinds == [(TROUGH, 70)]  # alternation collapses the pair
    assert all(t.kind != PEAK or s.index.get_indexer([t.date])[0] != 40 for t in out)


def test_censor_cycles_identity_when_long():
    s = _series(np.zeros(400))
    turns = [
        TurningPoint(s.index[0], 0.0, TROUGH),
        TurningPoint(s.index[100], 1.0, PEAK),
        TurningPoint(s.index[200], 0.1, TROUGH),
    ]
    assert turnlab.censor_cycles(turns, 90, s) == turns


def test_identify_turns_on_sine_is_analytic():
    n = 560
    t = np.arange(n)
    s = _series(0.1 * np.sin(2 * np.pi * t / 252))
    turns = turnlab.identify_turns(s, BBParams(20, 30, 90))
    positions = [s.index.get_indexer([u.date])[0] for u in turns]
    kinds = [u.kind for u in turns]
    assert positions == [63, 189, 315, 441]
    assert kinds == [PEAK, TROUGH, PEAK, TROUGH]


def run_property_suite(n_series, seed0=0):
    """Shared property oracle for the dating output; returns series count."""
    rng = np.random.default_rng(seed0)
    params = BBParams(20, 30, 90)
    for rep in range(n_series):
        n = int(rng.integers(300, 900))
        s = random_walk_series(int(rng.integers(0, 2**31)), n=n, vol=float(rng.uniform(0.005, 0.03)))
        if rep % 3 == 0:
            s = s + 0.2 * np.sin(2 * np.pi * np.arange(n) / float(rng.uniform(100, 400)))
        turns = turnlab.identify_turns(s, params)
        pos = s.index.get_indexer([u.date for u in turns])
        kinds = [u.kind for u in turns]
        for a, b in zip(kinds, kinds[1:]):
            assert a != b
        assert all(pos[i + 1] - pos[i] >= params.min_phase for i in range(len(pos) - 1))
        assert all(pos[i + 2] - pos[i] >= params.min_cycle for i in range(len(pos) - 2))
        x = s.to_numpy()
        for i, u in enumerate(turns):
            if u.kind == PEAK and 0 < i < len(turns) - 1:
                seg = x[pos[i - 1] : pos[i + 1] + 1]
                assert u.log_price >= seg.max() - 1e-12
            if u.kind == TROUGH and 0 < i < len(turns) - 1:
                seg = x[pos[i - 1] : pos[i + 1] + 1]
                assert u.log_price <= seg.min() + 1e-12
    return n_series


def test_property_suite_small():
    run_property_suite(40)


def test_translation_invariance():
    s = random_walk_series(3, n=500)
    a = turnlab.identify_turns(s)
    b = turnlab.identify_turns(s + 5.0)
    assert [(t.date, t.kind) for t in a] == [(t.date, t.kind) for t in b]


def test_bounded_lookahead():
    params = BBParams(20, 30, 90)
    horizon = params.order + params.min_cycle
    for seed in range(10):
        s = random_walk_series(seed, n=600)
        full = turnlab.identify_turns(s, params)
        trunc = turnlab.identify_turns(s.iloc[:480], params)
        cutoff = s.index[480 - 1 - horizon]
        confirmed_full = {(t.date, t.kind) for t in full if t.date <= cutoff}
        confirmed_trunc = {(t.date, t.kind) for t in trunc if t.date <= cutoff}
        assert confirmed_full == confirmed_trunc


def test_make_labels_window_and_merge():
    idx = pd.bdate_range("2020-01-01", periods=60)
    s = pd.Series(np.zeros(60), index=idx)
    one = turnlab.make_labels([TurningPoint(idx[30], 0.0, TROUGH)], idx, 5)
    assert one.sum() == 6
    assert one.iloc[25:31].all() and one.iloc[24] == 0 and one.iloc[31] == 0

    zero = turnlab.make_labels([TurningPoint(idx[30], 1.0, PEAK)], idx, 5)
    assert zero.sum() == 0

    two = turnlab.make_labels(
        [TurningPoint(idx[30], 0.0, TROUGH), TurningPoint(idx[34], 0.0, TROUGH)], idx, 5
    )
    # windows [25..30] and [29..34] overlap; union counted once
    want = set(range(25, 31)) | set(range(29, 35))
    assert two.sum() == len(want)
    assert set(np.nonzero(two.to_numpy())[0]) == want
    del s


def test_make_labels_missing_trough_date_errors():
    idx = pd.bdate_range("2020-01-01", periods=30)
    stray = TurningPoint(pd.Timestamp("2030-01-01"), 0.0, TROUGH)
    with pytest.raises(ValueError, match="2030-01-01"):
        turnlab.make_labels([stray], idx, 5)


def test_bbparams_validation():
    with pytest.raises(ValueError):
        BBParams(0, 30, 90)
    with pytest.raises(ValueError):
        BBParams(20, 90, 30)
