"""
Simulation layer: model, equation of motion, propagation, ensembles,
scenarios, analysis, sequence text format, configuration and reporting.
"""

from .analysis import (
    Echo,
    EchoReport,
    EfficiencyMetric,
    FitResult,
    PhaseReport,
    detect_echoes,
    fit_exponential,
    mirror_times,
    phase_diagnostics,
    retrieval_efficiency,
    shape_similarity,
    storage_capacity,
)
from .config import RunSettings, SystemDocument, load_settings
from .ensemble import DetuningGrid, EnsembleTrace, build_grid, sweep
from .liouvillian import Liouvillian, apply_relaxation, build_hamiltonian, equation_of_motion
from .model import (
    DecayOverride,
    EnsembleSpec,
    FieldDrive,
    FieldName,
    LevelSystem,
    Mark,
    PulseSegment,
    PulseSequence,
    SetOverride,
    pulse_area,
    resolve_durations,
    validate,
)
from .propagate import Integrator, TimeTrace, cross_validate, propagate_segment_exact, run_member, step_rk4
from .runner import RunSummary, ScanSummary, SimulationRunner
from .scenarios import (
    Scenario,
    ScenarioParams,
    ScenarioVariant,
    build_scenario,
    delay_scan,
    locking_protocol,
    photon_echo,
    triple_bit_storage,
    weak_probe,
)
from .seqdsl import ParseError, format_sequence, parse, parse_file

__all__ = [
    "DecayOverride",
    "DetuningGrid",
    "Echo",
    "EchoReport",
    "EfficiencyMetric",
    "EnsembleSpec",
    "EnsembleTrace",
    "FieldDrive",
    "FieldName",
    "FitResult",
    "Integrator",
    "LevelSystem",
    "Liouvillian",
    "Mark",
    "ParseError",
    "PhaseReport",
    "PulseSegment",
    "PulseSequence",
    "RunSettings",
    "RunSummary",
    "ScanSummary",
    "Scenario",
    "ScenarioParams",
    "ScenarioVariant",
    "SetOverride",
    "SimulationRunner",
    "SystemDocument",
    "TimeTrace",
    "apply_relaxation",
    "build_grid",
    "build_hamiltonian",
    "build_scenario",
    "cross_validate",
    "delay_scan",
    "detect_echoes",
    "equation_of_motion",
    "fit_exponential",
    "format_sequence",
    "load_settings",
    "locking_protocol",
    "mirror_times",
    "parse",
    "parse_file",
    "phase_diagnostics",
    "photon_echo",
    "propagate_segment_exact",
    "pulse_area",
    "resolve_durations",
    "retrieval_efficiency",
    "run_member",
    "shape_similarity",
    "step_rk4",
    "storage_capacity",
    "sweep",
    "triple_bit_storage",
    "validate",
    "weak_probe",
]
