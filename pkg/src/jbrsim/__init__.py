"""Discrete-event MANET simulator with Janitor Based Routing, a flooding
baseline, and a closed-form reliability/cost model."""

from .analytics import AnalyticParams, DomainError, Estimate
from .config import ConfigError, ScenarioConfig, WireSizes, load_config, parse_config
from .harness import MetricsRecord, SweepError, SweepSpec, evaluate_analytics, run_experiment, run_sweep
from .simcore import InvariantViolation, Network, SchedulingError

__all__ = [
    "AnalyticParams",
    "ConfigError",
    "DomainError",
    "Estimate",
    "InvariantViolation",
    "MetricsRecord",
    "Network",
    "ScenarioConfig",
    "SchedulingError",
    "SweepError",
    "SweepSpec",
    "WireSizes",
    "evaluate_analytics",
    "load_config",
    "parse_config",
    "run_experiment",
    "run_sweep",
]

__version__ = "0.1.0"
