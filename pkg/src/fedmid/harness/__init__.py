"""Experiment harness: configuration, desk data, metrics, runner, CLI."""

from .config import ConfigError, ExperimentConfig
from .data import Dataset, load_csv_dataset, make_desk_data
from .diagnostics import diagnose_divergence
from .metrics import RoundRecord, evaluate_acc, evaluate_asr, final_metrics
from .runner import Simulation, run_experiment

__all__ = [
    "ConfigError",
    "Dataset",
    "ExperimentConfig",
    "RoundRecord",
    "Simulation",
    "diagnose_divergence",
    "evaluate_acc",
    "evaluate_asr",
    "final_metrics",
    "load_csv_dataset",
    "make_desk_data",
    "run_experiment",
]
