from .config import ConfigError, ExperimentConfig, load_config
from .output import CSV_HEADER, ResultsTable
from .runner import bound_report, run, simulate, sweep

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "CSV_HEADER", "ResultsTable",
           "bound_report", "run", "simulate", "sweep"]
