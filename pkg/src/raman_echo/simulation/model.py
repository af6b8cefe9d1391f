"""
Domain model for Raman-echo simulations.

Level systems, pulse segments, sequences and ensembles are immutable pydantic
models. All frequencies are entered in kHz and all times in microseconds;
the two conversions below turn them into the rad/us rates the integrators use.

Level indices are 1-based everywhere in the public API (|1>..|4>).
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Literal, Mapping, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..core.validator import ValidationReport

logger = logging.getLogger(__name__)

ANGULAR_PER_KHZ = 2.0 * math.pi * 1e-3
DEPHASING_PER_KHZ = math.pi * 1e-3

RateTable = Tuple[Tuple[float, ...], ...]


def to_angular(value_khz: float) -> float:
    """Rabi frequency, detuning or population rate in kHz -> rad/us."""
    return ANGULAR_PER_KHZ * value_khz


def from_angular(value: float) -> float:
    return value / ANGULAR_PER_KHZ


def to_dephasing_rate(gamma_khz: float) -> float:
    """Coherence linewidth in kHz -> amplitude decay constant in 1/us."""
    return DEPHASING_PER_KHZ * gamma_khz


def from_dephasing_rate(rate: float) -> float:
    return rate / DEPHASING_PER_KHZ


def spin_t2_us(gamma21_khz: float) -> float:
    """T2 of the spin coherence, 1/(pi * gamma21) in microseconds."""
    if gamma21_khz <= 0:
        return math.inf
    return 1.0 / to_dephasing_rate(gamma21_khz)


class FieldName(str, Enum):
    """Optical fields and the transitions they drive"""

    PROBE = "probe"  # |1> <-> |3>
    COUPLING = "coupling"  # |2> <-> |3>
    AUX = "aux"  # |3> <-> |4>


FIELD_ORDER = (FieldName.PROBE, FieldName.COUPLING, FieldName.AUX)


class Transition(BaseModel):
    """A field-coupled pair of levels"""

    model_config = ConfigDict(frozen=True)

    name: FieldName
    lower: int = Field(..., ge=1, le=4)
    upper: int = Field(..., ge=1, le=4)


DEFAULT_TRANSITIONS: Dict[FieldName, Transition] = {
    FieldName.PROBE: Transition(name=FieldName.PROBE, lower=1, upper=3),
    FieldName.COUPLING: Transition(name=FieldName.COUPLING, lower=2, upper=3),
    FieldName.AUX: Transition(name=FieldName.AUX, lower=3, upper=4),
}


def rate_table(n_levels: int, entries: Mapping[Tuple[int, int], float], symmetric: bool = False) -> RateTable:
    """Build an n x n table from 1-based (i, j) -> value entries."""
    table = [[0.0] * n_levels for _ in range(n_levels)]
    for (i, j), value in entries.items():
        if not (1 <= i <= n_levels and 1 <= j <= n_levels):
            raise ValueError(f"rate ({i},{j}) outside a {n_levels}-level system")
        table[i - 1][j - 1] = float(value)
        if symmetric:
            table[j - 1][i - 1] = float(value)
    return tuple(tuple(row) for row in table)


class DecayOverride(BaseModel):
    """Replacement coherence linewidth gamma_ij (kHz) for a segment"""

    model_config = ConfigDict(frozen=True)

    i: int
    j: int
    gamma_khz: float


class LevelSystem(BaseModel):
    """
    Three- or four-level atom.

    big_gamma[i][j] is the population transfer rate |i+1> -> |j+1> and
    gamma[i][j] the coherence linewidth between |i+1> and |j+1>, both in kHz.
    shift_target is the level carrying the per-member inhomogeneous shift.
    """

    model_config = ConfigDict(frozen=True)

    n_levels: int = 3
    transitions: Tuple[Transition, ...] = (
        DEFAULT_TRANSITIONS[FieldName.PROBE],
        DEFAULT_TRANSITIONS[FieldName.COUPLING],
    )
    big_gamma: RateTable
    gamma: RateTable
    shift_target: int = 2

    @classmethod
    def from_rates(
        cls,
        n_levels: int,
        big_gamma: Mapping[Tuple[int, int], float],
        gamma: Mapping[Tuple[int, int], float],
        shift_target: int = 2,
        transitions: Optional[Iterable[Transition]] = None,
    ) -> "LevelSystem":
        if transitions is None:
            names = FIELD_ORDER if n_levels >= 4 else FIELD_ORDER[:2]
            transitions = [DEFAULT_TRANSITIONS[name] for name in names]
        return cls(
            n_levels=n_levels,
            transitions=tuple(transitions),
            big_gamma=rate_table(n_levels, big_gamma),
            gamma=rate_table(n_levels, gamma, symmetric=True),
            shift_target=shift_target,
        )

    @classmethod
    def three_level_default(cls) -> "LevelSystem":
        """Lambda system: Gamma31 = Gamma32 = 0.5, gamma31 = gamma32 = 25, gamma21 = 1 (kHz)."""
        return cls.from_rates(
            3,
            big_gamma={(3, 1): 0.5, (3, 2): 0.5},
            gamma={(3, 1): 25.0, (3, 2): 25.0, (2, 1): 1.0},
        )

    @classmethod
    def four_level_default(cls) -> "LevelSystem":
        """Lambda system plus auxiliary |4>: Gamma34 = 0.5, gamma34 = 25, |4> does not decay."""
        return cls.from_rates(
            4,
            big_gamma={(3, 1): 0.5, (3, 2): 0.5, (3, 4): 0.5},
            gamma={(3, 1): 25.0, (3, 2): 25.0, (2, 1): 1.0, (3, 4): 25.0, (4, 1): 0.0, (4, 2): 0.0},
        )

    def population_rate(self, i: int, j: int) -> float:
        return self.big_gamma[i - 1][j - 1]

    def dephasing(self, i: int, j: int) -> float:
        return self.gamma[i - 1][j - 1]

    def big_gamma_array(self) -> np.ndarray:
        return np.array(self.big_gamma, dtype=float)

    def gamma_array(self) -> np.ndarray:
        return np.array(self.gamma, dtype=float)

    def transition(self, name: FieldName) -> Optional[Transition]:
        for transition in self.transitions:
            if transition.name == name:
                return transition
        return None

    @property
    def spin_t2_us(self) -> float:
        return spin_t2_us(self.dephasing(2, 1))

    def with_dephasing(self, overrides: Iterable[DecayOverride]) -> "LevelSystem":
        """Copy with gamma_ij (and gamma_ji) replaced."""
        overrides = list(overrides)
        if not overrides:
            return self
        table = [list(row) for row in self.gamma]
        for ov in overrides:
            table[ov.i - 1][ov.j - 1] = ov.gamma_khz
            table[ov.j - 1][ov.i - 1] = ov.gamma_khz
        return self.model_copy(update={"gamma": tuple(tuple(row) for row in table)})


class FieldDrive(BaseModel):
    """Rectangular field: Rabi amplitude and detuning in kHz, phase in degrees"""

    model_config = ConfigDict(frozen=True)

    amplitude_khz: float
    detuning_khz: float = 0.0
    phase_deg: float = 0.0

    @property
    def phase_rad(self) -> float:
        return math.radians(self.phase_deg)


class PulseSegment(BaseModel):
    """
    Constant-field interval given by a duration or by an area in units of pi.

    A wait is a segment with no fields. start_us is filled in by
    resolve_durations; for area segments so is duration_us.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["pulse", "wait"] = "pulse"
    fields: Dict[FieldName, FieldDrive] = Field(default_factory=dict)
    duration_us: Optional[float] = None
    area_pi: Optional[float] = None
    decay_overrides: Tuple[DecayOverride, ...] = ()
    start_us: Optional[float] = None

    @property
    def generalized_rabi_khz(self) -> float:
        return math.sqrt(sum(drive.amplitude_khz**2 for drive in self.fields.values()))

    @property
    def active_fields(self) -> List[FieldName]:
        return [name for name, drive in self.fields.items() if drive.amplitude_khz != 0.0]

    @property
    def area_rad(self) -> Optional[float]:
        return None if self.area_pi is None else self.area_pi * math.pi

    @property
    def end_us(self) -> Optional[float]:
        if self.start_us is None or self.duration_us is None:
            return None
        return self.start_us + self.duration_us


class Mark(BaseModel):
    """Named time marker placed at the current sequence time"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["mark"] = "mark"
    name: str
    time_us: Optional[float] = None


class SetOverride(BaseModel):
    """Persistent dephasing override for all following segments"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["set"] = "set"
    override: DecayOverride


Statement = Union[PulseSegment, Mark, SetOverride]

DEFAULT_POPULATIONS = (1.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class TimelineEntry:
    """A resolved segment with its absolute window and effective overrides"""

    segment: PulseSegment
    start_us: float
    end_us: float
    overrides: Tuple[DecayOverride, ...]

    @property
    def duration_us(self) -> float:
        return self.end_us - self.start_us


class PulseSequence(BaseModel):
    """Ordered statements plus initial ground/excited populations"""

    model_config = ConfigDict(frozen=True)

    statements: Tuple[Statement, ...] = ()
    initial_populations: Optional[Tuple[float, ...]] = None

    @property
    def populations(self) -> Tuple[float, ...]:
        """Initial populations padded to four levels; |1> when unspecified"""
        if self.initial_populations is None:
            return DEFAULT_POPULATIONS
        missing = max(0, 4 - len(self.initial_populations))
        return tuple(self.initial_populations) + (0.0,) * missing

    @property
    def segments(self) -> List[PulseSegment]:
        return [s for s in self.statements if isinstance(s, PulseSegment)]

    @property
    def is_resolved(self) -> bool:
        return all(s.start_us is not None and s.duration_us is not None for s in self.segments)

    @property
    def end_us(self) -> float:
        end = 0.0
        for segment in self.segments:
            if segment.end_us is None:
                raise ValueError("sequence is not resolved")
            end = segment.end_us
        return end

    @property
    def markers(self) -> Dict[str, float]:
        """Marker name -> absolute time (us); requires a resolved sequence"""
        markers: Dict[str, float] = {}
        for statement in self.statements:
            if isinstance(statement, Mark):
                if statement.time_us is None:
                    raise ValueError("sequence is not resolved")
                markers[statement.name] = statement.time_us
        return markers

    def timeline(self) -> List[TimelineEntry]:
        """Resolved segments with persistent `set` overrides merged under each segment's own"""
        if not self.is_resolved:
            raise ValueError("sequence is not resolved")
        persistent: Dict[Tuple[int, int], DecayOverride] = {}
        entries: List[TimelineEntry] = []
        for statement in self.statements:
            if isinstance(statement, SetOverride):
                ov = statement.override
                persistent[_pair(ov.i, ov.j)] = ov
            elif isinstance(statement, PulseSegment):
                active = dict(persistent)
                for ov in statement.decay_overrides:
                    active[_pair(ov.i, ov.j)] = ov
                assert statement.start_us is not None and statement.duration_us is not None
                entries.append(
                    TimelineEntry(
                        segment=statement,
                        start_us=statement.start_us,
                        end_us=statement.start_us + statement.duration_us,
                        overrides=tuple(active[k] for k in sorted(active)),
                    )
                )
        return entries

    def as_written(self) -> "PulseSequence":
        """Drop everything resolve_durations derived, leaving the sequence as authored"""
        statements: List[Statement] = []
        for statement in self.statements:
            if isinstance(statement, PulseSegment):
                update: Dict[str, object] = {"start_us": None}
                if statement.area_pi is not None:
                    update["duration_us"] = None
                statements.append(statement.model_copy(update=update))
            elif isinstance(statement, Mark):
                statements.append(statement.model_copy(update={"time_us": None}))
            else:
                statements.append(statement)
        return self.model_copy(update={"statements": tuple(statements)})

    def with_populations(self, populations: Optional[Iterable[float]]) -> "PulseSequence":
        value = None if populations is None else tuple(float(p) for p in populations)
        return self.model_copy(update={"initial_populations": value})


def _pair(i: int, j: int) -> Tuple[int, int]:
    return (max(i, j), min(i, j))


class EnsembleSpec(BaseModel):
    """Gaussian inhomogeneous distribution of the per-member shift delta"""

    model_config = ConfigDict(frozen=True)

    distribution: Literal["gaussian"] = "gaussian"
    fwhm_khz: float = Field(default=200.0, description="Full width at half maximum")
    spacing_khz: float = Field(default=2.0, description="Bin spacing")
    truncation_khz: float = Field(default=250.0, description="Grid half-width")
    shift_target: int = 2


def pulse_area(segment: PulseSegment) -> float:
    """Generalized Rabi frequency (rad/us) times duration, in radians."""
    if segment.area_pi is not None and not segment.active_fields:
        raise ValueError("area-specified segment has no active field")
    if segment.duration_us is None:
        raise ValueError("segment duration is not resolved")
    return to_angular(segment.generalized_rabi_khz) * segment.duration_us


def resolve_durations(sequence: PulseSequence) -> PulseSequence:
    """Convert areas to durations and stamp absolute start times and marker times."""
    clock = 0.0
    statements: List[Statement] = []
    for index, statement in enumerate(sequence.statements):
        if isinstance(statement, PulseSegment):
            duration = statement.duration_us
            if statement.area_pi is not None:
                omega = to_angular(statement.generalized_rabi_khz)
                if omega == 0.0:
                    raise ValueError(f"statement {index + 1}: area given but no field is on")
                duration = statement.area_pi * math.pi / omega
            if duration is None or not duration > 0.0:
                raise ValueError(f"statement {index + 1}: non-positive duration {duration}")
            statements.append(statement.model_copy(update={"duration_us": duration, "start_us": clock}))
            clock += duration
        elif isinstance(statement, Mark):
            statements.append(statement.model_copy(update={"time_us": clock}))
        else:
            statements.append(statement)
    return sequence.model_copy(update={"statements": tuple(statements)})


def validate(system: LevelSystem, sequence: PulseSequence, ensemble: EnsembleSpec) -> ValidationReport:
    """Collect every invariant violation of the three inputs; never raises."""
    report = ValidationReport()
    _validate_system(system, report)
    _validate_sequence(system, sequence, report)
    _validate_ensemble(system, ensemble, report)
    _validate_revival(sequence, ensemble, report)
    return report


def _validate_system(system: LevelSystem, report: ValidationReport) -> None:
    n = system.n_levels
    if n not in (3, 4):
        report.error("levels", f"n_levels must be 3 or 4, got {n}")
        return
    for name, table in (("big_gamma", system.big_gamma), ("gamma", system.gamma)):
        if len(table) != n or any(len(row) != n for row in table):
            report.error("rates", f"{name} must be a {n}x{n} table")
            return

    big_gamma = system.big_gamma_array()
    gamma = system.gamma_array()
    for i in range(n):
        if big_gamma[i, i] != 0.0:
            report.error("rates", f"Gamma{i + 1}{i + 1} must be 0", location=f"big_gamma[{i + 1}][{i + 1}]")
        for j in range(n):
            if big_gamma[i, j] < 0:
                report.error("rates", f"Gamma{i + 1}{j + 1} is negative", location=f"big_gamma[{i + 1}][{j + 1}]")
            if gamma[i, j] < 0 and i > j:
                report.error("rates", f"gamma{i + 1}{j + 1} is negative", location=f"gamma[{i + 1}][{j + 1}]")
            if gamma[i, j] != gamma[j, i] and i > j:
                report.error("rates", f"gamma{i + 1}{j + 1} is not symmetric")

    seen = set()
    for transition in system.transitions:
        if transition.name in seen:
            report.error("transitions", f"duplicate field name '{transition.name.value}'")
        seen.add(transition.name)
        if transition.lower == transition.upper:
            report.error("transitions", f"'{transition.name.value}' connects a level to itself")
        if max(transition.lower, transition.upper) > n:
            report.error("transitions", f"'{transition.name.value}' refers to a level outside the system")

    if system.shift_target not in (2, 3):
        report.error("ensemble", f"shift_target must be |2> or |3>, got |{system.shift_target}>")

    # Phenomenological model can lose positivity when dephasing is slower than half the summed out-rates
    out_rates = np.array([sum(to_angular(big_gamma[i, k]) for k in range(n)) for i in range(n)])
    for i in range(n):
        for j in range(i):
            if to_dephasing_rate(gamma[i, j]) < 0.5 * (out_rates[i] + out_rates[j]):
                report.warning(
                    "positivity",
                    f"gamma{i + 1}{j + 1} is below the lifetime limit of levels {i + 1} and {j + 1}",
                    suggestion="raise the coherence linewidth or accept possible negative populations",
                )


def _validate_sequence(system: LevelSystem, sequence: PulseSequence, report: ValidationReport) -> None:
    n = system.n_levels
    populations = sequence.populations
    if sequence.initial_populations is not None and len(sequence.initial_populations) > n:
        report.error("populations", f"{len(sequence.initial_populations)} populations for a {n}-level system")
    if any(p < 0.0 or p > 1.0 for p in populations):
        report.error("populations", "each initial population must lie in [0, 1]")
    if abs(sum(populations) - 1.0) > 1e-9:
        report.error(
            "populations",
            f"population normalization: initial populations sum to {sum(populations):.6g}",
            suggestion="populations must sum to 1",
        )
    if any(p != 0.0 for p in populations[n:]):
        report.error("populations", "population on a level the system does not have")

    markers = set()
    for index, statement in enumerate(sequence.statements, start=1):
        location = f"statement {index}"
        if isinstance(statement, Mark):
            if statement.name in markers:
                report.warning("markers", f"marker '{statement.name}' defined twice", location=location)
            markers.add(statement.name)
            continue
        overrides = statement.decay_overrides if isinstance(statement, PulseSegment) else (statement.override,)
        for ov in overrides:
            if ov.i == ov.j or not (1 <= ov.i <= n and 1 <= ov.j <= n):
                report.error("overrides", f"gamma({ov.i},{ov.j}) is not a coherence of this system", location=location)
            if ov.gamma_khz < 0:
                report.error("overrides", f"gamma({ov.i},{ov.j}) override is negative", location=location)
        if not isinstance(statement, PulseSegment):
            continue
        for name, drive in statement.fields.items():
            if system.transition(name) is None:
                report.error("fields", f"field '{name.value}' has no transition in this system", location=location)
            if drive.amplitude_khz < 0:
                report.error("fields", f"field '{name.value}' has a negative amplitude", location=location)
        if statement.area_pi is not None:
            if statement.area_pi <= 0:
                report.error("segments", "pulse area must be positive", location=location)
            elif not statement.active_fields:
                report.error("segments", "area given but no field is on", location=location)
        elif statement.duration_us is None:
            report.error("segments", "segment has neither duration nor area", location=location)
        elif statement.duration_us <= 0:
            report.error("segments", "segment duration must be positive", location=location)


def _validate_revival(sequence: PulseSequence, ensemble: EnsembleSpec, report: ValidationReport) -> None:
    # a uniform grid rephases every 1/spacing; later signal copies can land on the echoes
    if ensemble.spacing_khz <= 0 or ensemble.fwhm_khz <= 0 or not sequence.segments or not sequence.is_resolved:
        return
    period = 1e3 / ensemble.spacing_khz
    if sequence.end_us > period:
        report.warning(
            "ensemble",
            f"the {ensemble.spacing_khz:g} kHz grid revives every {period:g} us, "
            f"inside the {sequence.end_us:g} us sequence",
            suggestion="check echo times against grid revivals or refine the spacing",
        )


def _validate_ensemble(system: LevelSystem, ensemble: EnsembleSpec, report: ValidationReport) -> None:
    if ensemble.spacing_khz <= 0:
        report.error("ensemble", "bin spacing must be positive")
    if ensemble.fwhm_khz < 0:
        report.error("ensemble", "FWHM must not be negative")
    if ensemble.truncation_khz < ensemble.fwhm_khz:
        report.error("ensemble", "truncation half-width must be at least the FWHM")
    if ensemble.shift_target != system.shift_target:
        report.error(
            "ensemble",
            f"ensemble shifts |{ensemble.shift_target}> but the system shifts |{system.shift_target}>",
        )
