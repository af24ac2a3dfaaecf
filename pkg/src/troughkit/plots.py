"""SVG report figures rendered from stage artifacts.

Output is deterministic: a fixed hash salt and no embedded timestamps, so
repeated runs produce byte-identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "troughkit"

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

_SAVE_KW = {"format": "svg", "metadata": {"Date": None}}


def _save(fig, path):
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_price_troughs(prices: pd.Series, turns: pd.DataFrame, path) -> None:
    fig, ax = plt.subplots(figsize=(10, 4))
    ax.plot(prices.index, np.log(prices.to_numpy()), color="black", lw=0.8)
    for _, row in turns.iterrows():
        if row["kind"] == "trough":
            ax.axvline(row["date"], color="green", alpha=0.6, lw=1.0)
        else:
            ax.axvline(row["date"], color="red", alpha=0.3, lw=0.8)
    ax.set_ylabel("log price")
    ax.set_title("Log price with dated peaks (red) and troughs (green)")
    _save(fig, path)


def plot_calibration(calib: pd.DataFrame, path) -> None:
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot([0, 1], [0, 1], "--", color="gray", lw=1.0)
    mask = calib["count"] > 0
    ax.plot(calib.loc[mask, "mean_prob"], calib.loc[mask, "event_rate"], "o-", color="tab:blue")
    ax.set_xlabel("predicted probability")
    ax.set_ylabel("observed rate")
    ax.set_title("Reliability curve")
    _save(fig, path)


def plot_probability_overlay(prices: pd.Series, probs: pd.Series, labels: pd.Series, path) -> None:
    fig, ax = plt.subplots(figsize=(10, 4))
    ax2 = ax.twinx()
    ax.plot(prices.index, np.log(prices.to_numpy()), color="black", lw=0.8)
    common = probs.dropna()
    ax2.plot(common.index, common.to_numpy(), color="green", lw=0.9)
    pos = labels[labels == 1]
    for d in pos.index:
        ax.axvspan(d, d, color="green", alpha=0.15)
    ax.set_ylabel("log price")
    ax2.set_ylabel("trough probability", color="green")
    ax2.set_ylim(0, 1)
    ax.set_title("Calibrated trough probability over price")
    _save(fig, path)


def plot_rolling_brier(rolling: pd.Series, path) -> None:
    fig, ax = plt.subplots(figsize=(10, 3))
    ax.plot(rolling.index, rolling.to_numpy(), color="tab:red", lw=1.0)
    ax.set_ylabel("rolling Brier")
    ax.set_title("63-day rolling Brier score")
    _save(fig, path)


def plot_shap_bars(shap_means: pd.Series, path, top: int = 20) -> None:
    vals = shap_means.sort_values(ascending=True).tail(top)
    fig, ax = plt.subplots(figsize=(7, 0.35 * len(vals) + 1.5))
    ax.barh(range(len(vals)), vals.to_numpy(), color="tab:blue")
    ax.set_yticks(range(len(vals)), vals.index, fontsize=7)
    ax.set_xlabel("mean |attribution|")
    ax.set_title("Linear model attribution magnitudes")
    fig.tight_layout()
    _save(fig, path)
