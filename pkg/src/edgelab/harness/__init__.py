"""Configuration, parallel trial runner, experiments and command line."""

from .config import ConfigError, ExperimentConfig, default_config, load_config
from .experiments import ExperimentReport, run_experiment, write_report
from .io import CSV_SCHEMAS, emit_csv, read_csv
from .runner import ResultSink, TooManyFailures, run_trials

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "default_config",
    "load_config",
    "ExperimentReport",
    "run_experiment",
    "write_report",
    "CSV_SCHEMAS",
    "emit_csv",
    "read_csv",
    "ResultSink",
    "TooManyFailures",
    "run_trials",
]
