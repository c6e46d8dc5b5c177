"""Energy-efficient power control for status updates with federated tail modelling of AoI."""

from .config import SimConfig, load_config, parse_config
from .engine import SimResult, run
from .federation import Scheme
from .metrics import MetricsSummary, summarize
from .sweep import SweepSpec, sweep

__all__ = [
    "SimConfig",
    "SimResult",
    "Scheme",
    "MetricsSummary",
    "SweepSpec",
    "load_config",
    "parse_config",
    "run",
    "summarize",
    "sweep",
]
__version__ = "0.1.0"
