import numpy as np
import pandas as pd
import pytest

from troughkit import dataio, featlab, indicators, turnlab


@pytest.fixture(scope="session")
def bundle():
    return dataio.generate_synthetic_market(seed=11, n_days=900, trough_dates=[320, 560])


@pytest.fixture(scope="session")
def panel(bundle):
    return indicators.build_panel(bundle)


@pytest.fixture(scope="session")
def labeled_matrix(bundle, panel):
    log_prices = np.log(bundle.prices)
    turns = turnlab.identify_turns(log_prices)
    labels = turnlab.make_labels(turns, log_prices.index, 5)
    return featlab.build_matrix(panel, labels=labels)


def random_walk_series(seed, n=400, vol=0.01, drift=0.0002, start="2014-01-02"):
    rng = np.random.default_rng(seed)
    x = np.cumsum(drift + vol * rng.standard_normal(n))
    return pd.Series(x, index=pd.bdate_range(start, periods=n))
