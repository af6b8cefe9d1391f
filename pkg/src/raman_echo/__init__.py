"""
raman-echo - density-matrix simulator for Raman spin-echo optical storage

This package provides the library and CLI behind the storage experiments:
- Three- and four-level atoms with population and phase relaxation
- Inhomogeneously broadened ensembles swept in parallel
- Echo detection, retrieval efficiency and exponential fits
- A small text format for pulse sequences
"""

__version__ = "0.1.0"

from .simulation.ensemble import EnsembleTrace, build_grid, sweep
from .simulation.model import EnsembleSpec, LevelSystem, PulseSequence
from .simulation.runner import SimulationRunner

__all__ = [
    "EnsembleSpec",
    "EnsembleTrace",
    "LevelSystem",
    "PulseSequence",
    "SimulationRunner",
    "build_grid",
    "sweep",
]
