"""Gamma-OU stochastic volatility model with trading volume as the activity proxy."""
from .data import DataError, MarketDataset, load_csv
from .estimate import EstimateReport, FailureReason, estimate, solve
from .model import (REFERENCE_PARAMS, GridConstants, LawKind, ModelParams, MomentSet, StationaryLaw,
                    conditional_moment, theoretical_moments)
from .simulate import PathSample, RngStream, conditional_draw, simulate_gamma_ou, simulate_ig_ou

__all__ = [
    "DataError", "MarketDataset", "load_csv", "EstimateReport", "FailureReason", "estimate", "solve",
    "REFERENCE_PARAMS", "GridConstants", "LawKind", "ModelParams", "MomentSet", "StationaryLaw",
    "conditional_moment", "theoretical_moments", "PathSample", "RngStream", "conditional_draw",
    "simulate_gamma_ou", "simulate_ig_ou",
]
