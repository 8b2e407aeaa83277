from .config import ConfigError, ExperimentConfig, config_from_dict, load_config
from .experiments import Report, run_experiment
from .report import emit_report, render

__all__ = ["ConfigError", "ExperimentConfig", "Report", "config_from_dict", "emit_report",
           "load_config", "render", "run_experiment"]
