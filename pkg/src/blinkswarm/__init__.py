"""blinkswarm: swarm chemistry simulation with distributed blink-slot coloring.

Robots ("droplets") carrying single atoms wander a 2D arena, bond into
molecules by Bohr-model rules, and advertise molecule membership by blinking
red in a shared time slot. Slots are assigned by a randomized synchronous
(Δ+1)-coloring protocol over the molecule adjacency graph; a virtual observer
with a calibrated detection-noise model reconstructs molecules from the blink
pattern. A benchmark CLI reproduces the protocol round-count experiment.
"""

from .chem import ElementTable, load_element_table
from .coloring import ColoringState, LossModel, RoundStats, run_to_completion, step_round, verify_coloring
from .graph import Graph, erdos_renyi
from .observer import CameraConfig, VirtualObserver, cluster_blinks, detection_probability, observe
from .sim import Arena, ArenaConfig

__all__ = [
    "Arena",
    "ArenaConfig",
    "CameraConfig",
    "ColoringState",
    "ElementTable",
    "Graph",
    "LossModel",
    "RoundStats",
    "VirtualObserver",
    "cluster_blinks",
    "detection_probability",
    "erdos_renyi",
    "load_element_table",
    "observe",
    "run_to_completion",
    "step_round",
    "verify_coloring",
]

__version__ = "0.1.0"
