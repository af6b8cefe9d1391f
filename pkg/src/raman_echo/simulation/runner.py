"""
Simulation runner: scenario -> ensemble trace -> echo report.

Provides the primary interface used by the CLI for single runs and delay
scans, with validation, diagnostics and summary assembly.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from ..core.errors import ConfigurationError
from .analysis import (
    EchoReport,
    FitResult,
    PhaseReport,
    attach_efficiencies,
    detect_echoes,
    echo_window,
    fit_exponential,
    phase_diagnostics,
    shape_similarity,
    storage_capacity,
)
from .config import RunSettings
from .ensemble import EnsembleTrace, build_grid, sweep
from .model import resolve_durations, validate
from .propagate import cross_validate
from .scenarios import Scenario

logger = logging.getLogger(__name__)

CROSS_CHECK_DELTA_KHZ = 10.0


@dataclass
class RunSummary:
    """Everything a single run reports"""

    scenario: str
    parameters: Dict[str, Any]
    settings: Dict[str, Any]
    members: int
    samples: int
    echo_report: EchoReport
    phase: Optional[PhaseReport] = None
    diagnostics: Dict[str, Optional[float]] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    wall_time_s: float = 0.0

    @property
    def efficiencies(self) -> Dict[str, float]:
        return self.echo_report.efficiencies

    def to_dict(self, include_timing: bool = False) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "scenario": self.scenario,
            "parameters": self.parameters,
            "settings": self.settings,
            "members": self.members,
            "samples": self.samples,
            "echo_report": self.echo_report.to_dict(),
            "efficiencies": self.efficiencies,
            "phase": None if self.phase is None else self.phase.to_dict(),
            "diagnostics": self.diagnostics,
            "warnings": list(self.warnings),
        }
        if include_timing:
            data["wall_time_s"] = self.wall_time_s
        return data


@dataclass
class ScanSummary:
    """Delay scan: per-(delay, bit) rows plus the exponential fit"""

    scenario: str
    delays_us: List[float]
    rows: List[Dict[str, Any]]
    fit: Optional[FitResult]
    storage_capacity: Optional[int]
    expected_t2_us: float
    shape_deviation: Optional[float]
    runs: List[RunSummary] = field(default_factory=list)
    wall_time_s: float = 0.0

    def to_dict(self, include_timing: bool = False) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "scenario": self.scenario,
            "delays_us": self.delays_us,
            "rows": self.rows,
            "fit": None if self.fit is None else self.fit.to_dict(),
            "storage_capacity": self.storage_capacity,
            "expected_t2_us": self.expected_t2_us,
            "shape_deviation": self.shape_deviation,
            "runs": [run.to_dict(include_timing) for run in self.runs],
        }
        if include_timing:
            data["wall_time_s"] = self.wall_time_s
        return data


class SimulationRunner:
    """Runs scenarios with one set of numerical settings"""

    def __init__(self, settings: Optional[RunSettings] = None):
        self.settings = settings or RunSettings()

    def prepare(self, scenario: Scenario) -> Tuple[Scenario, List[str]]:
        """
        Resolve durations and validate.

        Returns:
            The scenario with a resolved sequence, and validation warnings

        Raises:
            ConfigurationError: validation found errors
        """
        try:
            sequence = resolve_durations(scenario.sequence)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc
        report = validate(scenario.system, sequence, scenario.ensemble)
        if not report.is_valid:
            raise ConfigurationError("; ".join(issue.message for issue in report.errors))
        warnings = [issue.message for issue in report.warnings]
        for message in warnings:
            logger.warning(message)
        scenario.sequence = sequence
        return scenario, warnings

    def simulate(self, scenario: Scenario) -> EnsembleTrace:
        grid = build_grid(scenario.ensemble)
        settings = self.settings
        return sweep(
            scenario.system,
            scenario.sequence,
            grid,
            sample_interval=settings.sample_interval_us,
            retained_deltas=scenario.retained_deltas,
            integrator=settings.integrator,
            dt=settings.dt_us,
            threads=settings.threads,
        )

    def analyze(self, scenario: Scenario, trace: EnsembleTrace) -> EchoReport:
        """Echoes after the rephasing pulse, matched to bits and scored"""
        markers = trace.markers
        start = markers.get(scenario.search_after or "", float(trace.times[0]) - 1.0)
        window = (start, float(trace.times[-1]))
        expected = scenario.expected_echo_times(markers)
        report = detect_echoes(
            trace,
            window,
            expected_times=expected,
            channel=scenario.channel,
            noise_floor=self.settings.noise_floor,
            bits=scenario.bits,
        )
        if report.missing:
            logger.info(f"no echo found for bit(s) {', '.join(report.missing)}")
        return attach_efficiencies(trace, report, self.settings.efficiency_metric)

    def phase_report(self, scenario: Scenario, trace: EnsembleTrace) -> Optional[PhaseReport]:
        """Across the aux pair when present, else across the rephasing pulse"""
        retained = sorted(trace.retained)
        delta = next((d for d in retained if d > 0 and any(abs(d + other) < 1e-9 for other in retained)), None)
        if delta is None:
            return None
        markers = trace.markers
        if "PA1_start" in markers and "PA2_end" in markers:
            before, after = markers["PA1_start"], markers["PA2_end"]
        elif scenario.rephasing and f"{scenario.rephasing}_start" in markers:
            before, after = markers[f"{scenario.rephasing}_start"], markers[f"{scenario.rephasing}_end"]
        else:
            return None
        return phase_diagnostics(trace, delta, before, after)

    def run_scenario(self, scenario: Scenario) -> Tuple[EnsembleTrace, RunSummary]:
        """
        Full pipeline for one scenario.

        Args:
            scenario: Scenario to run; its sequence is resolved in place

        Returns:
            The ensemble trace and the run summary
        """
        started = time.perf_counter()
        logger.info(f"running scenario {scenario.name}")
        scenario, warnings = self.prepare(scenario)
        trace = self.simulate(scenario)
        report = self.analyze(scenario, trace)
        for bit in report.over_unity:
            warnings.append(
                f"bit {bit}: efficiency {report.efficiencies[bit]:.3f} exceeds 1 "
                "(bit-end reference taken after in-pulse dephasing)"
            )

        diagnostics: Dict[str, Optional[float]] = {
            "max_trace_drift": trace.max_trace_drift,
            "max_hermiticity_error": trace.max_hermiticity_error,
        }
        if self.settings.cross_check:
            delta = scenario.retained_deltas[0] if scenario.retained_deltas else CROSS_CHECK_DELTA_KHZ
            diagnostics["cross_validation_deviation"] = cross_validate(
                scenario.system,
                scenario.sequence,
                delta,
                dt=self.settings.dt_us,
                sample_interval=self.settings.sample_interval_us,
            )
            logger.info(f"exact vs rk4 at delta={delta:g} kHz: {diagnostics['cross_validation_deviation']:.3e}")

        elapsed = time.perf_counter() - started
        logger.info(f"scenario {scenario.name}: {len(report)} echo(es) in {elapsed:.2f} s")
        summary = RunSummary(
            scenario=scenario.name,
            parameters=dict(scenario.parameters),
            settings=self.settings.model_dump(mode="json"),
            members=trace.members,
            samples=len(trace.times),
            echo_report=report,
            phase=self.phase_report(scenario, trace),
            diagnostics=diagnostics,
            warnings=warnings,
            wall_time_s=elapsed,
        )
        return trace, summary

    def run_delay_scan(self, scenarios: Sequence[Scenario], data_pulse_us: float = 3.0) -> ScanSummary:
        """
        Run each delay, fit efficiency against bit-to-echo storage time.

        Args:
            scenarios: One scenario per delay, ascending
            data_pulse_us: Data pulse length used for the storage capacity

        Returns:
            ScanSummary with the fit (None when fewer than three usable points)
        """
        if not scenarios:
            raise ValueError("delay scan needs at least one scenario")
        started = time.perf_counter()
        rows: List[Dict[str, Any]] = []
        runs: List[RunSummary] = []
        windows = []
        delays: List[float] = []
        for scenario in scenarios:
            delay = float(scenario.parameters.get("delay_us", 0.0))
            delays.append(delay)
            trace, summary = self.run_scenario(scenario)
            runs.append(summary)
            for echo in summary.echo_report.echoes:
                rows.append(
                    {
                        "delay_us": delay,
                        "bit": echo.bit,
                        "t_bit_end_us": echo.bit_end_us,
                        "t_echo_us": echo.time_us,
                        "storage_time_us": echo.storage_time_us,
                        "amplitude": echo.amplitude,
                        "efficiency": echo.efficiency,
                    }
                )
            if summary.echo_report.echoes:
                peak = max(summary.echo_report.echoes, key=lambda e: e.amplitude)
                windows.append(echo_window(trace, peak.time_us, data_pulse_us, summary.echo_report.channel))

        points = [
            (row["storage_time_us"], row["efficiency"])
            for row in rows
            if row["storage_time_us"] is not None and row["efficiency"] is not None and row["efficiency"] > 0
        ]
        fit = None
        capacity = None
        if len(points) >= 3 and len({round(t, 9) for t, _ in points}) >= 2:
            fit = fit_exponential(points)
            if fit.tau_us != float("inf"):
                capacity = storage_capacity(fit.tau_us, data_pulse_us)
        else:
            logger.warning("not enough echoes for an exponential fit")

        deviation = None
        if len(windows) >= 2:
            try:
                deviation = shape_similarity([windows[0], windows[-1]])
            except ValueError as exc:
                logger.warning(f"shape comparison skipped: {exc}")

        return ScanSummary(
            scenario=scenarios[0].name.split("@")[0],
            delays_us=delays,
            rows=rows,
            fit=fit,
            storage_capacity=capacity,
            expected_t2_us=scenarios[0].system.spin_t2_us,
            shape_deviation=deviation,
            runs=runs,
            wall_time_s=time.perf_counter() - started,
        )
