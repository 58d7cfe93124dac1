"""Trajectory simulation of spin-boson population dynamics via sequential
short-time propagation, with observable-cutting and transition-filtering
statistical-error controls and an exact small-bath oracle."""

__version__ = "0.1.0"

from .estimator import (AbortFractionError, CompareReport, PopulationSeries,
                        RunConfig, compare_schemes, estimate)
from .filters import FilterScheme
from .model import BathMode, ModelParams, discretize_bath
from .oracle import OracleConfig, TruncationError, exact_population

__all__ = [
    "__version__",
    "AbortFractionError",
    "BathMode",
    "CompareReport",
    "FilterScheme",
    "ModelParams",
    "OracleConfig",
    "PopulationSeries",
    "RunConfig",
    "TruncationError",
    "compare_schemes",
    "discretize_bath",
    "estimate",
    "exact_population",
]
