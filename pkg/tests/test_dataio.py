import numpy as np
import pandas as pd
import pytest

from troughkit import dataio, turnlab


def test_three_row_prices_identity_load(tmp_path):
    path = tmp_path / "prices.csv"
    path.write_text("date,close\n2020-01-02,100.5\n2020-01-03,101.0\n2020-01-06,99.25\n")
    s = dataio.load_prices(path)
    assert len(s) == 3
    assert s.iloc[0] == 100.5
    assert s.index[2] == pd.Timestamp("2020-01-06")


def test_duplicate_date_rejected_with_name(tmp_path):
    path = tmp_path / "prices.csv"
    path.write_text("date,close\n2020-01-02,100\n2020-01-02,101\n")
    with pytest.raises(dataio.SchemaError, match="2020-01-02"):
        dataio.load_prices(path)


def test_unsorted_dates_rejected(tmp_path):
    path = tmp_path / "prices.csv"
    path.write_text("date,close\n2020-01-03,100\n2020-01-02,101\n")
    with pytest.raises(dataio.SchemaError, match="sorted"):
        dataio.load_prices(path)


def test_malformed_row_reports_line_number(tmp_path):
    path = tmp_path / "prices.csv"
    path.write_text("date,close\n2020-01-02,100\n2020-01-03,oops\n")
    with pytest.raises(dataio.ParseError, match=":3"):
        dataio.load_prices(path)


def test_positive_put_delta_rejected(tmp_path):
    path = tmp_path / "chain.csv"
    path.write_text(
        "date,expiry,strike,kind,delta,gamma,oi,volume,mid\n"
        "2020-01-02,2020-02-02,100,put,0.3,0.01,10,5,2.5\n"
    )
    with pytest.raises(dataio.SchemaError, match="put delta"):
        dataio.load_chain(path)


def test_round_trip_all_schemas(tmp_path, bundle):
    bundle.write(tmp_path)
    again = dataio.load_bundle(tmp_path)
    pd.testing.assert_series_equal(bundle.prices, again.prices, check_freq=False)
    pd.testing.assert_frame_equal(bundle.chain, again.chain)
    pd.testing.assert_frame_equal(bundle.bars, again.bars, check_freq=False)
    pd.testing.assert_frame_equal(bundle.macro, again.macro, check_freq=False)


def test_generator_determinism_and_seed_sensitivity():
    a = dataio.generate_synthetic_market(seed=1, n_days=600)
    b = dataio.generate_synthetic_market(seed=1, n_days=600)
    c = dataio.generate_synthetic_market(seed=2, n_days=600)
    assert a.prices.equals(b.prices)
    assert a.chain.equals(b.chain)
    assert a.bars.equals(b.bars)
    assert a.macro.equals(b.macro)
    assert not a.prices.equals(c.prices)


def test_generator_rejects_short_history():
    with pytest.raises(ValueError, match="600"):
        dataio.generate_synthetic_market(seed=1, n_days=300)


def test_planted_trough_recovered_by_dating(bundle):
    log_prices = np.log(bundle.prices)
    turns = turnlab.identify_turns(log_prices)
    found = [
        log_prices.index.get_indexer([t.date])[0] for t in turns if t.kind == turnlab.TROUGH
    ]
    for want in (320, 560):
        assert any(abs(pos - want) <= 3 for pos in found), (want, found)


def test_macro_persistence_is_qualitative(bundle):
    rho = bundle.macro["vix"].autocorr(1)
    assert 0.9 < rho < 0.9999
    assert 10 < bundle.macro["vix"].mean() < 35


def test_ffill_macro_limits():
    idx = pd.bdate_range("2020-01-01", periods=12)
    frame = pd.DataFrame({"a": np.arange(12.0)}, index=idx)
    frame.iloc[3:6, 0] = np.nan  # 3-day gap: filled
    filled = dataio.ffill_macro(frame)
    assert filled["a"].notna().all()
    assert filled["a"].iloc[4] == frame["a"].iloc[2]
    frame.iloc[3:10, 0] = np.nan  # 7-day gap: error
    with pytest.raises(dataio.SchemaError, match="gap"):
        dataio.ffill_macro(frame)
