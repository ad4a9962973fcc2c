"""Trace-driven simulator for die-stacked DRAM cache designs."""

__version__ = "0.1.0"

from .geometry import CacheGeometry, BlockLocator, locate, placement
from .controllers import AccessOutcome, Request, make_controller
from .config import load_config, validate, ConfigError
from .runner import run, sweep
from .workload import TraceRecord, WorkloadProfile, generate, parse_trace, analyze_types

__all__ = [
    "CacheGeometry", "BlockLocator", "locate", "placement",
    "AccessOutcome", "Request", "make_controller",
    "load_config", "validate", "ConfigError",
    "run", "sweep",
    "TraceRecord", "WorkloadProfile", "generate", "parse_trace", "analyze_types",
    "__version__",
]
