"""System-level downlink simulator for cellular-connected UAVs in an urban
macro network: fixed-beam single-user versus zero-forcing multi-user MIMO,
with perfect or pilot-contaminated channel estimates."""

from .config import ConfigError, ExperimentConfig
from .harness import CdfSummary, emit_outputs, run_experiment
from .simulation import Simulator

__all__ = ["ConfigError", "ExperimentConfig", "CdfSummary", "Simulator", "emit_outputs",
           "run_experiment"]
__version__ = "0.1.0"
