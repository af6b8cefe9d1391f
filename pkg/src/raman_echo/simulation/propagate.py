"""
Single-member propagation through a resolved pulse sequence.

Two integrators share one sampling scheme:

* exact: each segment's Liouvillian is constant, so the propagator over a
  sub-interval h is expm(L h) on the n^2-dimensional vec(rho) space.
* rk4: classical fourth-order Runge-Kutta on drho/dt with re-Hermitization
  after every step; kept as an independent check of the exact propagator.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.linalg import expm

from ..core.errors import StepSizeError, TraceDriftError
from .liouvillian import Liouvillian
from .model import LevelSystem, PulseSegment, PulseSequence, resolve_durations

logger = logging.getLogger(__name__)

DEFAULT_DT_US = 0.005
DEFAULT_SAMPLE_INTERVAL_US = 0.1
MAX_PHASE_PER_STEP = 0.1
TRACE_DRIFT_LIMIT = 1e-6

_TIME_DECIMALS = 9


class Integrator(str, Enum):
    """Per-segment propagation method"""

    EXACT = "exact"
    RK4 = "rk4"


def _snap(t: float) -> float:
    return round(t, _TIME_DECIMALS)


@dataclass
class TimeTrace:
    """Density-matrix snapshots of one member at the shared sample times"""

    times: np.ndarray
    states: np.ndarray
    delta_khz: float

    @property
    def rho12(self) -> np.ndarray:
        return self.states[:, 0, 1]

    @property
    def rho13(self) -> np.ndarray:
        return self.states[:, 0, 2]

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.einsum("kii->ki", self.states))

    @property
    def max_trace_drift(self) -> float:
        traces = np.real(np.einsum("kii->k", self.states))
        return float(np.max(np.abs(traces - traces[0])))

    @property
    def max_hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.states - np.conj(np.transpose(self.states, (0, 2, 1))))))

    def index_of(self, time_us: float, tolerance: float = 1e-6) -> int:
        index = int(np.argmin(np.abs(self.times - time_us)))
        if abs(self.times[index] - time_us) > tolerance:
            raise ValueError(f"no sample at t={time_us} us")
        return index

    def at(self, time_us: float) -> np.ndarray:
        return self.states[self.index_of(time_us)]


@dataclass
class SegmentResult:
    """Final state of a segment plus samples relative to its start"""

    final: np.ndarray
    times: List[float] = field(default_factory=list)
    states: List[np.ndarray] = field(default_factory=list)


def initial_state(populations: Sequence[float], n_levels: int) -> np.ndarray:
    return np.diag(np.array(list(populations)[:n_levels], dtype=complex))


def sample_times(sequence: PulseSequence, sample_interval: float = DEFAULT_SAMPLE_INTERVAL_US) -> np.ndarray:
    """Uniform grid from 0 to the sequence end plus every segment boundary."""
    if sample_interval <= 0:
        raise ValueError("sample interval must be positive")
    if not sequence.segments:
        return np.zeros(1)
    end = _snap(sequence.end_us)
    count = int(math.floor(end / sample_interval + 1e-9))
    grid = [_snap(k * sample_interval) for k in range(count + 1)]
    boundaries = [_snap(entry.start_us) for entry in sequence.timeline()] + [end]
    return np.unique(np.array(grid + boundaries, dtype=float))


class _ExactStepper:
    def __init__(self, liouvillian: Liouvillian):
        self.superoperator = liouvillian.superoperator()
        self.n = liouvillian.n
        self._cache: Dict[float, np.ndarray] = {}

    def advance(self, rho: np.ndarray, h: float) -> np.ndarray:
        key = round(h, 12)
        propagator = self._cache.get(key)
        if propagator is None:
            propagator = expm(self.superoperator * h)
            self._cache[key] = propagator
        return (propagator @ rho.reshape(-1)).reshape(self.n, self.n)


class _Rk4Stepper:
    def __init__(self, liouvillian: Liouvillian, dt: float):
        if dt <= 0:
            raise StepSizeError("dt must be positive")
        check_step_size(liouvillian, dt)
        self.liouvillian = liouvillian
        self.dt = dt

    def advance(self, rho: np.ndarray, h: float) -> np.ndarray:
        steps = max(1, math.ceil(h / self.dt - 1e-9))
        step = h / steps
        for _ in range(steps):
            rho = rk4_step(self.liouvillian, rho, step)
        return rho


def check_step_size(liouvillian: Liouvillian, dt: float) -> None:
    phase = dt * liouvillian.max_frequency
    if phase > MAX_PHASE_PER_STEP:
        limit = MAX_PHASE_PER_STEP / liouvillian.max_frequency
        raise StepSizeError(f"dt={dt} us gives {phase:.3f} rad per step; use dt <= {limit:.4g} us")


def rk4_step(liouvillian: Liouvillian, rho: np.ndarray, dt: float) -> np.ndarray:
    k1 = liouvillian(rho)
    k2 = liouvillian(rho + 0.5 * dt * k1)
    k3 = liouvillian(rho + 0.5 * dt * k2)
    k4 = liouvillian(rho + dt * k3)
    out = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return 0.5 * (out + out.conj().T)


def step_rk4(rho: np.ndarray, system: LevelSystem, segment: PulseSegment, delta_khz: float, dt: float) -> np.ndarray:
    """One RK4 step of the member equation of motion."""
    if dt <= 0:
        raise StepSizeError("dt must be positive")
    liouvillian = Liouvillian.build(system, segment, delta_khz)
    check_step_size(liouvillian, dt)
    return rk4_step(liouvillian, rho, dt)


def propagate_segment_exact(
    rho: np.ndarray,
    system: LevelSystem,
    segment: PulseSegment,
    delta_khz: float,
    sample_interval: Optional[float] = None,
) -> SegmentResult:
    """Exponentiate the segment Liouvillian; optionally sample every sample_interval."""
    if segment.duration_us is None:
        raise ValueError("segment duration is not resolved")
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (system.n_levels, system.n_levels):
        raise ValueError(f"density matrix shape {rho.shape} does not match {system.n_levels} levels")
    duration = segment.duration_us
    if duration == 0.0:
        return SegmentResult(final=rho.copy(), times=[0.0], states=[rho.copy()])

    stepper = _ExactStepper(Liouvillian.build(system, segment, delta_khz))
    if sample_interval is None:
        return SegmentResult(final=stepper.advance(rho, duration))

    result = SegmentResult(final=rho, times=[0.0], states=[rho.copy()])
    t = 0.0
    targets = [k * sample_interval for k in range(1, int(math.floor(duration / sample_interval + 1e-9)) + 1)]
    if not targets or targets[-1] < duration - 1e-12:
        targets.append(duration)
    for target in targets:
        rho = stepper.advance(rho, target - t)
        t = target
        result.times.append(t)
        result.states.append(rho)
    result.final = rho
    return result


def run_member(
    system: LevelSystem,
    sequence: PulseSequence,
    delta_khz: float,
    sample_interval: float = DEFAULT_SAMPLE_INTERVAL_US,
    integrator: Integrator = Integrator.EXACT,
    dt: float = DEFAULT_DT_US,
    rho0: Optional[np.ndarray] = None,
    times: Optional[np.ndarray] = None,
) -> TimeTrace:
    """
    Propagate one member from its initial state through every segment.

    Args:
        system: Level system
        sequence: Pulse sequence; resolved here if needed
        delta_khz: Inhomogeneous shift of this member
        sample_interval: Sample spacing in us; segment boundaries are always sampled
        integrator: exact (default) or rk4
        dt: RK4 step bound in us
        rho0: Initial density matrix; defaults to the sequence populations
        times: Precomputed sample times shared by an ensemble

    Returns:
        TimeTrace with one state per sample time
    """
    if not sequence.is_resolved:
        sequence = resolve_durations(sequence)
    n = system.n_levels
    rho = initial_state(sequence.populations, n) if rho0 is None else np.array(rho0, dtype=complex)
    if times is None:
        times = sample_times(sequence, sample_interval)

    states = np.empty((len(times), n, n), dtype=complex)
    states[0] = rho
    trace0 = float(np.real(np.trace(rho)))
    index = 1
    integrator = Integrator(integrator)

    for entry in sequence.timeline():
        liouvillian = Liouvillian.build(system, entry.segment, delta_khz, entry.overrides)
        stepper = _ExactStepper(liouvillian) if integrator == Integrator.EXACT else _Rk4Stepper(liouvillian, dt)
        t = _snap(entry.start_us)
        end = _snap(entry.end_us)
        while index < len(times) and times[index] <= end + 1e-12:
            rho = stepper.advance(rho, times[index] - t)
            states[index] = rho
            t = times[index]
            index += 1

        drift = abs(float(np.real(np.trace(rho))) - trace0)
        if drift > TRACE_DRIFT_LIMIT:
            raise TraceDriftError(drift, t, delta_khz)
        logger.debug(f"delta={delta_khz:g} kHz segment [{entry.start_us:.3f}, {entry.end_us:.3f}] us done")

    return TimeTrace(times=np.asarray(times[:index]), states=states[:index], delta_khz=delta_khz)


def cross_validate(
    system: LevelSystem,
    sequence: PulseSequence,
    delta_khz: float,
    dt: float = DEFAULT_DT_US,
    sample_interval: float = DEFAULT_SAMPLE_INTERVAL_US,
    rho0: Optional[np.ndarray] = None,
) -> float:
    """Max entrywise |rho_exact - rho_rk4| over all samples."""
    if not sequence.is_resolved:
        sequence = resolve_durations(sequence)
    exact = run_member(system, sequence, delta_khz, sample_interval, Integrator.EXACT, rho0=rho0)
    rk4 = run_member(system, sequence, delta_khz, sample_interval, Integrator.RK4, dt=dt, rho0=rho0)
    return float(np.max(np.abs(exact.states - rk4.states)))
