"""Market-trough nowcasting toolkit.

Stages, each a module and a CLI subcommand: synthetic data generation
(`dataio`), rule-based trough labeling (`turnlab`), parent indicator
construction (`indicators`), feature transforms and lookback aggregation
(`featlab`), from-scratch learners (`learners`), the nested-CV nowcasting
pipeline (`pipeline`), a stylized futures backtester (`backtest`), and
comparative treatment-effect estimation with sensitivity analysis
(`causal`).
"""

__version__ = "0.1.0"
