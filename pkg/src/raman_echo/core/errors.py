"""
Exception hierarchy for the simulator.

Each family maps to one process exit code (see exit_codes.ExitCode).
"""


class SimulationError(Exception):
    """Base class for all simulator errors"""


class ConfigurationError(SimulationError):
    """Invalid system, ensemble or run configuration"""


class SequenceError(SimulationError):
    """Pulse sequence could not be read or parsed"""


class NumericalError(SimulationError):
    """Integration failed or produced an unphysical state"""


class StepSizeError(NumericalError):
    """RK4 step violates the phase-per-step rule"""


class TraceDriftError(NumericalError):
    """Density-matrix trace drifted beyond tolerance"""

    def __init__(self, drift: float, time_us: float, delta_khz: float):
        self.drift = drift
        self.time_us = time_us
        self.delta_khz = delta_khz
        super().__init__(f"trace drift {drift:.3e} at t={time_us:.4f} us (delta={delta_khz:g} kHz)")
