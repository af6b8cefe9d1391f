"""
Core infrastructure: errors, exit codes, validation reports and output strategies
"""

from .errors import (
    ConfigurationError,
    NumericalError,
    SequenceError,
    SimulationError,
    StepSizeError,
    TraceDriftError,
)
from .exit_codes import ExitCode, ExitCodeEncoder
from .output_strategy import OutputFormat, OutputFormatter
from .validator import ValidationIssue, ValidationLevel, ValidationReport

__all__ = [
    "ConfigurationError",
    "ExitCode",
    "ExitCodeEncoder",
    "NumericalError",
    "OutputFormat",
    "OutputFormatter",
    "SequenceError",
    "SimulationError",
    "StepSizeError",
    "TraceDriftError",
    "ValidationIssue",
    "ValidationLevel",
    "ValidationReport",
]
