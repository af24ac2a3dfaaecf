"""Run configuration: one flat key=value file, overridden by CLI flags.

Every key has a default except `seed`, which each run must set.  The
defaults for the modeling hyperparameters are the selected final values
(labeling window 5, lookback 10, linear kernel with C grid topped by
0.01, SMOTE oversample factor 1.0).
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import List, Optional


class ConfigError(ValueError):
    pass


def _parse_int_list(text: str) -> List[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _parse_float_list(text: str) -> List[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _parse_str_list(text: str) -> List[str]:
    return [tok.strip() for tok in text.split(",") if tok.strip()]


def _parse_mech_map(text: str) -> dict:
    # "vrp:vix|realized_volatility;other:a|b"
    out = {}
    for entry in text.split(";"):
        entry = entry.strip()
        if not entry:
            continue
        parent, _, comps = entry.partition(":")
        out[parent.strip()] = {c.strip() for c in comps.split("|") if c.strip()}
    return out


@dataclass
class RunConfig:
    seed: Optional[int] = None  # required at run time

    # synthetic market
    n_days: int = 1700
    bars_per_day: int = 78
    trough_dates: Optional[List[int]] = None  # generator defaults when empty

    # turn dating
    bb_order: int = 20
    bb_min_phase: int = 30
    bb_min_cycle: int = 90
    label_window: int = 5

    # features
    lookback: int = 10
    rank_window: int = 252
    rn_tenor: int = 30

    # nowcasting pipeline
    n_grid: List[int] = field(default_factory=lambda: [10, 15, 20, 25, 30])
    c_grid: List[float] = field(default_factory=lambda: [0.01, 0.1, 1.0])
    oversample_factor: float = 1.0
    smote_k: int = 5
    outer_folds: int = 5
    inner_folds: int = 3
    holdout_frac: float = 0.2

    # backtest
    threshold: float = 0.05
    holding: int = 5
    sizing: str = "fixed"
    capital: float = 100_000.0
    holdings: List[int] = field(default_factory=lambda: [5, 7, 10, 12, 15, 17, 20])

    # causal layer
    causal_folds: int = 5
    n_bootstrap: int = 1000
    fd_step_frac: float = 0.1
    variance_floor_frac: float = 1e-4
    treatments: List[str] = field(
        default_factory=lambda: [
            "amihud_illiquidity_trend_z_scaled_std",
            "ffr_slope_scaled_trend",
            "pcr_oi_roc63_scaled_std",
        ]
    )
    framework: str = "both"  # plr | ape | both
    mechanistic_map: dict = field(default_factory=lambda: {"vrp": {"vix", "realized_volatility"}})

    def require_seed(self) -> int:
        if self.seed is None:
            raise ConfigError("seed is required: pass --seed or set `seed` in the config file")
        return int(self.seed)


_PARSERS = {
    "seed": int,
    "n_days": int,
    "bars_per_day": int,
    "trough_dates": _parse_int_list,
    "bb_order": int,
    "bb_min_phase": int,
    "bb_min_cycle": int,
    "label_window": int,
    "lookback": int,
    "rank_window": int,
    "rn_tenor": int,
    "n_grid": _parse_int_list,
    "c_grid": _parse_float_list,
    "oversample_factor": float,
    "smote_k": int,
    "outer_folds": int,
    "inner_folds": int,
    "holdout_frac": float,
    "threshold": float,
    "holding": int,
    "sizing": str,
    "capital": float,
    "holdings": _parse_int_list,
    "causal_folds": int,
    "n_bootstrap": int,
    "fd_step_frac": float,
    "variance_floor_frac": float,
    "treatments": _parse_str_list,
    "framework": str,
    "mechanistic_map": _parse_mech_map,
}


def load_config(path) -> RunConfig:
    """Parse a flat `key = value` file; unknown keys and bad values error
    with their line numbers."""
    cfg = RunConfig()
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected `key = value`, got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in _PARSERS:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            try:
                setattr(cfg, key, _PARSERS[key](value))
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {exc}")
    return cfg


def describe_keys() -> str:
    """Config keys with their defaults, for --help."""
    cfg = RunConfig()
    lines = []
    for f in fields(RunConfig):
        default = getattr(cfg, f.name)
        lines.append(f"  {f.name} = {default!r}")
    return "config keys and defaults:\n" + "\n".join(lines)
