"""Seeded pipelines for the Pareto toy study, delta hedging and the newsvendor."""

from .hedging import HedgingConfig, bs_delta, hedge_paths, hedging_study, simulate_hedge
from .newsvendor import (
    NewsvendorConfig,
    newsvendor_closed_form,
    newsvendor_robust_curve,
    profit,
)
from .table import Table
from .toy import EXACT_CVAR, divergence_comparison, toy_pareto_cvar

__all__ = [
    "HedgingConfig",
    "NewsvendorConfig",
    "Table",
    "EXACT_CVAR",
    "bs_delta",
    "hedge_paths",
    "hedging_study",
    "simulate_hedge",
    "newsvendor_closed_form",
    "newsvendor_robust_curve",
    "profit",
    "toy_pareto_cvar",
    "divergence_comparison",
]
