"""Command-line entry point: every stage as a subcommand.

    troughkit synth      --seed 7 --out runs/demo
    troughkit label      --out runs/demo
    troughkit indicators --out runs/demo
    troughkit features   --out runs/demo
    troughkit train      --seed 7 --out runs/demo
    troughkit evaluate   --out runs/demo
    troughkit backtest   --out runs/demo
    troughkit causal     --seed 7 --out runs/demo --treatments vrp_scaled_std
    troughkit report     --out runs/demo

Each subcommand reads its declared inputs from --out and writes its
artifacts there; re-running a stage never mutates its inputs.  All
randomness derives from the single master seed.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys

import numpy as np
import pandas as pd

from . import backtest as bt
from . import causal as causal_mod
from . import dataio, featlab, indicators, pipeline, plots, turnlab
from .config import ConfigError, RunConfig, describe_keys, load_config


def _fmt(x) -> str:
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


def _write_frame(frame: pd.DataFrame, path, date_index: bool = True) -> None:
    """Deterministic CSV writer: repr floats, ISO dates."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        cols = list(frame.columns)
        writer.writerow((["date"] if date_index else []) + cols)
        for idx, row in zip(frame.index, frame.itertuples(index=False)):
            prefix = [idx.date().isoformat()] if date_index else []
            writer.writerow(prefix + [_fmt(v) if isinstance(v, float) else str(v) for v in row])


def _read_dated_csv(path) -> pd.DataFrame:
    _require(path)
    frame = pd.read_csv(path, parse_dates=["date"])
    return frame.set_index("date")


def _require(path) -> None:
    if not os.path.exists(path):
        raise FileNotFoundError(f"missing input file: {path}")


def _p(args, name) -> str:
    return os.path.join(args.out, name)


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args, cfg: RunConfig) -> None:
    seed = cfg.require_seed()
    bundle = dataio.generate_synthetic_market(
        seed=seed,
        n_days=cfg.n_days,
        trough_dates=cfg.trough_dates or None,
        bars_per_day=cfg.bars_per_day,
    )
    os.makedirs(args.out, exist_ok=True)
    bundle.write(args.out)
    print(f"wrote synthetic market ({cfg.n_days} days) to {args.out}")


def cmd_label(args, cfg: RunConfig) -> None:
    prices = dataio.load_prices(_p(args, "prices.csv"))
    log_prices = np.log(prices)
    params = turnlab.BBParams(cfg.bb_order, cfg.bb_min_phase, cfg.bb_min_cycle)
    turns = turnlab.identify_turns(log_prices, params)
    labels = turnlab.make_labels(turns, prices.index, cfg.label_window)
    frame = turnlab.turns_frame(turns)
    with open(_p(args, "turns.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "log_price", "kind"])
        for _, row in frame.iterrows():
            writer.writerow([row["date"].date().isoformat(), repr(float(row["log_price"])), row["kind"]])
    _write_frame(labels.to_frame(), _p(args, "labels.csv"))
    n_troughs = sum(1 for t in turns if t.kind == turnlab.TROUGH)
    print(f"dated {len(turns)} turns ({n_troughs} troughs); labeled {int(labels.sum())} positive days")


def cmd_indicators(args, cfg: RunConfig) -> None:
    bundle = dataio.load_bundle(args.out)
    panel = indicators.build_panel(bundle, rn_tenor=cfg.rn_tenor)
    _write_frame(panel, _p(args, "indicators.csv"))
    print(f"wrote {panel.shape[1]} indicators over {panel.shape[0]} days")


def cmd_features(args, cfg: RunConfig) -> None:
    panel = _read_dated_csv(_p(args, "indicators.csv"))
    labels_frame = _read_dated_csv(_p(args, "labels.csv"))
    labels = labels_frame["label"]
    matrix = featlab.build_matrix(panel, L=cfg.lookback, labels=labels, rank_window=cfg.rank_window)
    _write_frame(matrix, _p(args, "features.csv"))
    print(f"feature matrix: {matrix.shape[0]} rows x {matrix.shape[1] - 1} features")


def _split_holdout(matrix: pd.DataFrame, holdout_frac: float):
    cut = int(round(len(matrix) * (1.0 - holdout_frac)))
    cut = min(max(cut, 1), len(matrix) - 1)
    return matrix.iloc[:cut], matrix.iloc[cut:]


def cmd_train(args, cfg: RunConfig) -> None:
    seed = cfg.require_seed()
    matrix = _read_dated_csv(_p(args, "features.csv"))
    train, _ = _split_holdout(matrix, cfg.holdout_frac)
    pipe, oof, _ = pipeline.run_nested_cv(
        train.drop(columns="label"),
        train["label"],
        seed=seed,
        outer_folds=cfg.outer_folds,
        inner_folds=cfg.inner_folds,
        n_grid=cfg.n_grid,
        c_grid=cfg.c_grid,
        smote_factor=cfg.oversample_factor,
        smote_k=cfg.smote_k,
    )
    pipe.save(_p(args, "model.txt"))
    _write_frame(oof, _p(args, "oof_probs.csv"))
    chosen = {k: pipe.hyperparams[k] for k in ("n_features", "svm_c")}
    print(f"trained through {pipe.train_end}; selected {chosen}")


def cmd_evaluate(args, cfg: RunConfig) -> None:
    _require(_p(args, "model.txt"))
    pipe = pipeline.TrainedPipeline.load(_p(args, "model.txt"))
    matrix = _read_dated_csv(_p(args, "features.csv"))
    holdout = matrix[matrix.index > pd.Timestamp(pipe.train_end)]
    if len(holdout) == 0:
        raise ValueError("no hold-out rows after the model's training end date")
    y = holdout["label"].to_numpy(dtype=float)
    probs = pipe.predict_proba(holdout)
    prob_series = pd.Series(probs, index=holdout.index, name="prob")

    metrics_items = {
        "n_holdout": str(len(holdout)),
        "positives": str(int(y.sum())),
        "roc_auc": repr(pipeline.roc_auc(probs, y)) if 0 < y.sum() < len(y) else "",
        "brier": repr(pipeline.brier(probs, y)),
        "train_end": pipe.train_end,
    }
    with open(_p(args, "metrics.txt"), "w") as fh:
        for key, value in metrics_items.items():
            fh.write(f"{key}={value}\n")

    _write_frame(pipeline.calibration_bins(probs, y), _p(args, "calibration.csv"), date_index=False)
    rolling = pipeline.rolling_brier(prob_series, holdout["label"])
    _write_frame(rolling.to_frame(), _p(args, "rolling_brier.csv"))
    _write_frame(prob_series.to_frame(), _p(args, "holdout_probs.csv"))

    shap = pipe.shap_values(holdout)
    shap_mean = pd.Series(np.abs(shap).mean(axis=0), index=pipe.feature_names).sort_values(ascending=False)
    shap_frame = pd.DataFrame({"feature": shap_mean.index, "mean_abs_shap": shap_mean.to_numpy()})
    _write_frame(shap_frame, _p(args, "shap.csv"), date_index=False)

    mid = holdout.index[len(holdout) // 2]
    drift = pipeline.drift_diagnostics(holdout, mid, pipe)
    drift_frame = pd.DataFrame(
        {
            "feature": drift["ks"].index,
            "ks_statistic": drift["ks"].to_numpy(),
            "shap_rank_correlation": drift.get("shap_rank_correlation", np.nan),
        }
    )
    _write_frame(drift_frame, _p(args, "drift.csv"), date_index=False)
    print(f"holdout: auc={metrics_items['roc_auc']} brier={metrics_items['brier']}")


def cmd_backtest(args, cfg: RunConfig) -> None:
    probs_path = args.probs or _p(args, "oof_probs.csv")
    _require(probs_path)
    probs_frame = pd.read_csv(probs_path, parse_dates=["date"]).set_index("date")
    probs = probs_frame["prob"].dropna()
    closes = dataio.load_prices(_p(args, "prices.csv"))

    signals = bt.generate_signals(probs, cfg.threshold)
    trades = bt.simulate(signals, closes, cfg.holding, cfg.sizing)
    trades_frame = bt.trades_frame(trades)
    with open(_p(args, "trades.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trade", "entry_date", "exit_date", "entry_price", "size", "pnl"])
        for _, r in trades_frame.iterrows():
            writer.writerow(
                [
                    int(r["trade"]),
                    r["entry_date"].date().isoformat(),
                    r["exit_date"].date().isoformat(),
                    repr(float(r["entry_price"])),
                    int(r["size"]),
                    repr(float(r["pnl"])),
                ]
            )
    sweep = bt.sensitivity_sweep(probs, closes, cfg.capital, cfg.holdings, threshold=cfg.threshold)
    _write_frame(sweep, _p(args, "report.csv"), date_index=False)
    total = trades_frame["pnl"].sum() if len(trades_frame) else 0.0
    print(f"{len(trades)} trades at H={cfg.holding} ({cfg.sizing}); net P&L {total:,.2f}")


def cmd_causal(args, cfg: RunConfig) -> None:
    seed = cfg.require_seed()
    matrix = _read_dated_csv(_p(args, "features.csv"))
    labels = matrix["label"]
    frameworks = ("plr", "ape") if cfg.framework == "both" else (cfg.framework,)
    per_framework = {}
    for fw in frameworks:
        rows = []
        estimates = {}
        for treatment in cfg.treatments:
            est = causal_mod.estimate_treatment(
                matrix,
                labels,
                treatment,
                framework=fw,
                k_folds=cfg.causal_folds,
                seed=seed,
                n_bootstrap=cfg.n_bootstrap,
                mechanistic_map=cfg.mechanistic_map,
            )
            rows.append(est.to_row())
            estimates[treatment] = est
        per_framework[fw] = estimates
        name = "estimates.csv" if len(frameworks) == 1 else f"estimates_{fw}.csv"
        _write_frame(pd.DataFrame(rows), _p(args, name), date_index=False)
    if len(frameworks) == 2:
        comparison = causal_mod.compare_frameworks(per_framework["plr"], per_framework["ape"])
        _write_frame(comparison, _p(args, "comparison.csv"), date_index=False)
    print(f"estimated {len(cfg.treatments)} treatments under {', '.join(frameworks)}")


def cmd_report(args, cfg: RunConfig) -> None:
    prices = dataio.load_prices(_p(args, "prices.csv"))
    turns = pd.read_csv(_p(args, "turns.csv"), parse_dates=["date"])
    plots.plot_price_troughs(prices, turns, _p(args, "fig_price_troughs.svg"))

    calib_path = _p(args, "calibration.csv")
    if os.path.exists(calib_path):
        plots.plot_calibration(pd.read_csv(calib_path), _p(args, "fig_calibration.svg"))
    probs_path = _p(args, "holdout_probs.csv")
    if os.path.exists(probs_path):
        probs = pd.read_csv(probs_path, parse_dates=["date"]).set_index("date")["prob"]
        labels = _read_dated_csv(_p(args, "labels.csv"))["label"]
        plots.plot_probability_overlay(prices, probs, labels.reindex(probs.index).fillna(0), _p(args, "fig_probability.svg"))
    rb_path = _p(args, "rolling_brier.csv")
    if os.path.exists(rb_path):
        rolling = pd.read_csv(rb_path, parse_dates=["date"]).set_index("date")["rolling_brier"]
        plots.plot_rolling_brier(rolling.dropna(), _p(args, "fig_rolling_brier.svg"))
    shap_path = _p(args, "shap.csv")
    if os.path.exists(shap_path):
        shap_frame = pd.read_csv(shap_path)
        shap = pd.Series(shap_frame["mean_abs_shap"].to_numpy(), index=shap_frame["feature"])
        plots.plot_shap_bars(shap, _p(args, "fig_shap.svg"))
    print(f"wrote report figures to {args.out}")


# ---------------------------------------------------------------------------
# argument plumbing

_COMMANDS = {
    "synth": cmd_synth,
    "label": cmd_label,
    "indicators": cmd_indicators,
    "features": cmd_features,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "backtest": cmd_backtest,
    "causal": cmd_causal,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="troughkit",
        description="Market-trough nowcasting and causal analysis toolkit.",
        epilog=describe_keys(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} stage")
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--seed", type=int, help="master seed (required by synth/train/causal)")
        p.add_argument("--out", default="runs/default", help="artifact directory")
        p.add_argument("--threshold", type=float, help="backtest signal threshold override")
        p.add_argument("--holding", type=int, help="backtest holding period override")
        p.add_argument("--sizing", choices=["fixed", "pyramiding"], help="backtest sizing override")
        p.add_argument("--capital", type=float, help="backtest initial capital override")
        p.add_argument("--treatments", help="comma-separated treatment features")
        p.add_argument("--framework", choices=["plr", "ape", "both"], help="causal framework override")
        p.add_argument("--probs", help="probability CSV for the backtest (default oof_probs.csv)")
    return parser


def _merge_flags(cfg: RunConfig, args) -> RunConfig:
    if args.seed is not None:
        cfg.seed = args.seed
    if args.threshold is not None:
        cfg.threshold = args.threshold
    if args.holding is not None:
        cfg.holding = args.holding
    if args.sizing is not None:
        cfg.sizing = args.sizing
    if args.capital is not None:
        cfg.capital = args.capital
    if args.treatments is not None:
        cfg.treatments = [t.strip() for t in args.treatments.split(",") if t.strip()]
    if args.framework is not None:
        cfg.framework = args.framework
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg = _merge_flags(cfg, args)
        os.makedirs(args.out, exist_ok=True)
        _COMMANDS[args.command](args, cfg)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
