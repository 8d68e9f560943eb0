"""Throughput-maximizing scheduling, time allocation and power control for
full-duplex wireless powered communication networks."""

from .channel import NetworkInstance, PathLossParams, TopologyParams, generate
from .exhaustive import solve_opt
from .model import Schedule, Slot, SystemParams, ThroughputReport, UserParams, evaluate
from .ptap import PtapInstance, PtapSolution
from .ptap import solve as solve_ptap
from .schedulers import eta, mfsa

__all__ = [
    "NetworkInstance", "PathLossParams", "TopologyParams", "generate",
    "solve_opt", "Schedule", "Slot", "SystemParams", "ThroughputReport",
    "UserParams", "evaluate", "PtapInstance", "PtapSolution", "solve_ptap",
    "eta", "mfsa",
]

__version__ = "0.1.0"
