"""Person-following robot: head detection, box tracking, robust stereo depth and dual-PID servoing."""

from .config import ScenarioConfig, builtin_scenario, load_scenario, parse_scenario
from .pipeline import Metrics, TraceRecord, compute_metrics, run_scenario, select_target

__version__ = "0.1.0"

__all__ = [
    "Metrics",
    "ScenarioConfig",
    "TraceRecord",
    "builtin_scenario",
    "compute_metrics",
    "load_scenario",
    "parse_scenario",
    "run_scenario",
    "select_target",
]
