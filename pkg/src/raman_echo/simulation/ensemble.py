"""
Inhomogeneous ensemble: detuning grid, parallel member sweep and reduction.

Members are independent, so they run on a thread pool. The reduction always
adds members in ascending delta, which keeps the output bit-identical for any
worker count.
"""

import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..core.errors import NumericalError
from .model import EnsembleSpec, LevelSystem, PulseSequence, resolve_durations
from .propagate import (
    DEFAULT_DT_US,
    DEFAULT_SAMPLE_INTERVAL_US,
    Integrator,
    TimeTrace,
    run_member,
    sample_times,
)

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["t_us", "re_S12", "im_S12", "abs_S12", "re_P13", "im_P13", "pop1", "pop2", "pop3", "pop4"]


@dataclass(frozen=True)
class DetuningGrid:
    """Symmetric, uniformly spaced shifts (kHz) with normalized weights"""

    deltas: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.deltas)

    @classmethod
    def single(cls, delta_khz: float = 0.0) -> "DetuningGrid":
        return cls(np.array([float(delta_khz)]), np.array([1.0]))

    def index_of(self, delta_khz: float) -> int:
        index = int(np.argmin(np.abs(self.deltas - delta_khz)))
        if abs(self.deltas[index] - delta_khz) > 1e-9:
            raise ValueError(f"delta={delta_khz} kHz is not on the grid")
        return index

    def nearest(self, delta_khz: float) -> float:
        """Closest grid shift; ties go toward zero so +d and -d snap symmetrically"""
        distance = np.abs(self.deltas - delta_khz)
        ties = np.flatnonzero(distance - distance.min() < 1e-9)
        index = int(ties[np.argmin(np.abs(self.deltas[ties]))])
        snapped = float(self.deltas[index])
        if abs(snapped - delta_khz) > 1e-9:
            logger.warning(f"delta={delta_khz:g} kHz is not on the grid; using {snapped:g} kHz")
        return snapped

    def partition(self, mask: np.ndarray) -> Tuple["DetuningGrid", "DetuningGrid", float]:
        """Split into two renormalized sub-grids; returns (selected, rest, selected weight)"""
        share = float(self.weights[mask].sum())
        selected = DetuningGrid(self.deltas[mask], self.weights[mask] / share)
        rest = DetuningGrid(self.deltas[~mask], self.weights[~mask] / (1.0 - share))
        return selected, rest, share


def build_grid(spec: EnsembleSpec) -> DetuningGrid:
    """Bins from -truncation to +truncation at the given spacing with Gaussian weights."""
    if spec.spacing_khz <= 0:
        raise ValueError("bin spacing must be positive")
    ratio = spec.truncation_khz / spec.spacing_khz
    half_bins = int(math.ceil(ratio - 1e-9))
    if abs(half_bins - ratio) > 1e-9:
        logger.warning(
            f"truncation {spec.truncation_khz} kHz is not a multiple of {spec.spacing_khz} kHz; "
            f"rounded outward to {half_bins * spec.spacing_khz} kHz"
        )
    deltas = spec.spacing_khz * np.arange(-half_bins, half_bins + 1, dtype=float)

    if spec.fwhm_khz <= 0:
        weights = (deltas == 0.0).astype(float)
    else:
        weights = np.exp(-4.0 * math.log(2.0) * deltas**2 / spec.fwhm_khz**2)
    weights = weights / weights.sum()
    return DetuningGrid(deltas=deltas, weights=weights)


@dataclass
class EnsembleTrace:
    """Weighted macroscopic observables on the shared time base"""

    times: np.ndarray
    s12: np.ndarray
    p13: np.ndarray
    populations: np.ndarray
    markers: Dict[str, float] = field(default_factory=dict)
    retained: Dict[float, TimeTrace] = field(default_factory=dict)
    max_trace_drift: float = 0.0
    max_hermiticity_error: float = 0.0
    members: int = 0
    wall_time_s: float = 0.0

    def index_of(self, time_us: float, tolerance: float = 1e-6) -> int:
        index = int(np.argmin(np.abs(self.times - time_us)))
        if abs(self.times[index] - time_us) > tolerance:
            raise ValueError(f"no sample at t={time_us} us")
        return index

    def channel(self, name: str) -> np.ndarray:
        """Named real-valued observable: abs_s12, im_s12, re_s12, abs_p13, im_p13, re_p13"""
        part, _, observable = name.lower().partition("_")
        values = {"s12": self.s12, "p13": self.p13}.get(observable)
        if values is None or part not in ("abs", "re", "im"):
            raise ValueError(f"unknown channel '{name}'")
        return {"abs": np.abs, "re": np.real, "im": np.imag}[part](values)

    def member(self, delta_khz: float) -> TimeTrace:
        for delta, trace in self.retained.items():
            if abs(delta - delta_khz) < 1e-9:
                return trace
        raise KeyError(f"no retained member at delta={delta_khz} kHz")

    def to_frame(self) -> pd.DataFrame:
        pops = np.zeros((len(self.times), 4))
        pops[:, : self.populations.shape[1]] = self.populations
        return pd.DataFrame(
            {
                "t_us": self.times,
                "re_S12": self.s12.real,
                "im_S12": self.s12.imag,
                "abs_S12": np.abs(self.s12),
                "re_P13": self.p13.real,
                "im_P13": self.p13.imag,
                "pop1": pops[:, 0],
                "pop2": pops[:, 1],
                "pop3": pops[:, 2],
                "pop4": pops[:, 3],
            },
            columns=TRACE_COLUMNS,
        )


def _batched(items: Sequence[float], size: int) -> Iterable[Sequence[float]]:
    for start in range(0, len(items), size):
        yield items[start : start + size]


def sweep(
    system: LevelSystem,
    sequence: PulseSequence,
    grid: DetuningGrid,
    sample_interval: float = DEFAULT_SAMPLE_INTERVAL_US,
    retained_deltas: Iterable[float] = (),
    integrator: Integrator = Integrator.EXACT,
    dt: float = DEFAULT_DT_US,
    threads: Optional[int] = None,
    rho0: Optional[np.ndarray] = None,
) -> EnsembleTrace:
    """
    Run every grid member and reduce to S = sum w rho12, P = sum w rho13 and populations.

    Args:
        system: Level system
        sequence: Pulse sequence (resolved here if needed)
        grid: Detuning grid
        sample_interval: Sample spacing in us
        retained_deltas: Members whose full traces are kept for phase diagnostics; off-grid
                values snap to the nearest member
        integrator: exact or rk4
        dt: RK4 step bound in us
        threads: Worker cap; defaults to the CPU count
        rho0: Initial density matrix shared by all members

    Returns:
        EnsembleTrace on the shared time base
    """
    started = time.perf_counter()
    if not sequence.is_resolved:
        sequence = resolve_durations(sequence)
    times = sample_times(sequence, sample_interval)
    retain = sorted({grid.nearest(d) for d in retained_deltas})
    workers = max(1, threads or os.cpu_count() or 1)

    def member(delta: float) -> TimeTrace:
        try:
            return run_member(system, sequence, delta, sample_interval, integrator, dt, rho0, times)
        except NumericalError as exc:
            raise NumericalError(f"member delta={delta:g} kHz: {exc}") from exc

    n = system.n_levels
    s12 = np.zeros(len(times), dtype=complex)
    p13 = np.zeros(len(times), dtype=complex)
    populations = np.zeros((len(times), n))
    retained: Dict[float, TimeTrace] = {}
    max_drift = 0.0
    max_herm = 0.0

    order = np.argsort(grid.deltas, kind="stable")
    deltas = [float(grid.deltas[i]) for i in order]
    weights = [float(grid.weights[i]) for i in order]
    logger.info(f"sweeping {len(deltas)} members over {len(times)} samples with {workers} worker(s)")

    with ThreadPoolExecutor(max_workers=workers) as executor:
        position = 0
        for batch in _batched(deltas, workers * 4):
            for trace in executor.map(member, batch):
                weight = weights[position]
                position += 1
                s12 += weight * trace.rho12
                p13 += weight * trace.rho13
                populations += weight * trace.populations
                max_drift = max(max_drift, trace.max_trace_drift)
                max_herm = max(max_herm, trace.max_hermiticity_error)
                if any(abs(trace.delta_khz - d) < 1e-9 for d in retain):
                    retained[trace.delta_khz] = trace

    elapsed = time.perf_counter() - started
    logger.info(f"sweep finished in {elapsed:.2f} s")
    return EnsembleTrace(
        times=times,
        s12=s12,
        p13=p13,
        populations=populations,
        markers=sequence.markers,
        retained=retained,
        max_trace_drift=max_drift,
        max_hermiticity_error=max_herm,
        members=len(deltas),
        wall_time_s=elapsed,
    )
