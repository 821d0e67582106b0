from .config import PRESET_NAMES, PRESETS, SAMPLER_NAMES, ConfigError, ExperimentConfig, parse_config
from .experiments import Report, build_problem, run_experiment, strip_wall_time
from .signals import jump_locations, synthesize_signal

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "PRESETS",
    "PRESET_NAMES",
    "Report",
    "SAMPLER_NAMES",
    "build_problem",
    "jump_locations",
    "parse_config",
    "run_experiment",
    "strip_wall_time",
    "synthesize_signal",
]
