"""Online joint task-offloading, resource-allocation, and UAV-placement
simulator for a multi-UAV edge-computing system, with brute-force oracles
for every optimized quantity and a family of ablation baselines."""

__version__ = "0.1.0"

from .config import ScenarioConfig, desk_profile, paper_profile, load_config
from .engine import APPROACH_IDS, run_simulation

__all__ = [
    "ScenarioConfig",
    "desk_profile",
    "paper_profile",
    "load_config",
    "APPROACH_IDS",
    "run_simulation",
    "__version__",
]
