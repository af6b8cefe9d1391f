"""
Scenario builders for the storage experiments.

Each builder returns a Scenario: the level system, an unresolved pulse
sequence and the ensemble, plus the layout analysis needs (which marker pairs
are data bits, which pulse rephases, which channel carries the echo).

Pulse windows are bracketed by marks, `X_start` and `X_end`.
Durations come from the requested areas; only start times are fixed.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .analysis import locked_echo_times, mirror_times
from .model import (
    DecayOverride,
    EnsembleSpec,
    FieldDrive,
    FieldName,
    LevelSystem,
    Mark,
    PulseSegment,
    PulseSequence,
    Statement,
    to_angular,
)

logger = logging.getLogger(__name__)

DEFAULT_DELAYS_US = (60.0, 100.0, 150.0, 200.0, 300.0, 500.0)
BIT_LABELS = ("A", "B", "C")


class ScenarioVariant(str, Enum):
    """Shipped experiments"""

    FIG1A = "fig1a"  # triple-bit Raman echo storage
    FIG1B = "fig1b"  # two-level photon echo control
    FIG1C = "fig1c"  # fig1a with retained +-10 kHz members for phase diagnostics
    FIG1D = "fig1d"  # delay scan of fig1a
    FIG2 = "fig2"  # optical population locking
    FIG2_UNLOCKED = "fig2_unlocked"  # locking sequence without the auxiliary pair
    WEAK_PROBE = "weak_probe"
    CUSTOM = "custom"


RAMAN_VARIANTS = (ScenarioVariant.FIG1A, ScenarioVariant.FIG1C, ScenarioVariant.FIG1D, ScenarioVariant.WEAK_PROBE)


class ScenarioParams(BaseModel):
    """Knobs shared by all builders; None means the variant default"""

    model_config = ConfigDict(frozen=True)

    variant: ScenarioVariant = ScenarioVariant.FIG1A
    area_pi: Optional[float] = Field(default=None, gt=0, description="Rephasing area in units of pi")
    delay_us: Optional[float] = Field(default=None, gt=0, description="Start of the rephasing pulse")
    final_area_pi: float = Field(default=3.0, gt=0, description="Final Raman area of the locking sequence")
    lock_time_us: float = Field(default=1010.0, gt=0, description="Lock window duration")
    attenuation: float = Field(default=0.01, gt=0, description="Weak-probe amplitude factor")
    initial_populations: Optional[Tuple[float, ...]] = None
    delays_us: Tuple[float, ...] = DEFAULT_DELAYS_US
    gamma21_khz: Optional[float] = Field(default=None, ge=0, description="Spin linewidth override")
    retain_deltas: Tuple[float, ...] = ()

    data_rabi_khz: float = Field(default=17.0, gt=0)
    data_duration_us: float = Field(default=3.0, gt=0)
    data_starts_us: Tuple[float, ...] = (10.0, 20.0, 30.0)
    rephase_rabi_khz: float = Field(default=50.0, gt=0, description="Generalized Rabi frequency of R")
    aux_rabi_khz: float = Field(default=50.0, gt=0)
    gap_us: float = Field(default=0.2, ge=0)
    echo_rabi_khz: float = Field(default=25.0, gt=0, description="Photon-echo probe amplitude")
    echo_data_area_pi: float = Field(default=0.5, gt=0)
    weak_coupling_khz: float = Field(default=25.0, gt=0)
    use_aux_lock: bool = True

    @model_validator(mode="after")
    def check_layout(self) -> "ScenarioParams":
        starts = list(self.data_starts_us)
        if starts != sorted(starts) or len(starts) > len(BIT_LABELS) or not starts:
            raise ValueError(f"data_starts_us must be 1 to {len(BIT_LABELS)} ascending times")
        return self

    @property
    def rephasing_area_pi(self) -> float:
        if self.area_pi is not None:
            return self.area_pi
        return 1.0 if self.variant == ScenarioVariant.FIG1B else 2.0

    @property
    def rephasing_delay_us(self) -> float:
        if self.delay_us is not None:
            return self.delay_us
        return 30.0 if self.variant == ScenarioVariant.FIG1B else 60.0


@dataclass
class Scenario:
    """A buildable experiment; unpacks as (system, sequence, ensemble)"""

    name: str
    system: LevelSystem
    sequence: PulseSequence
    ensemble: EnsembleSpec
    bits: Tuple[str, ...] = BIT_LABELS
    rephasing: Optional[str] = "R"
    channel: str = "abs_s12"
    preparing: Optional[str] = None
    retained_deltas: Tuple[float, ...] = ()
    parameters: Dict[str, object] = field(default_factory=dict)

    def __iter__(self) -> Iterator[Union[LevelSystem, PulseSequence, EnsembleSpec]]:
        return iter((self.system, self.sequence, self.ensemble))

    @property
    def search_after(self) -> Optional[str]:
        return None if self.rephasing is None else f"{self.rephasing}_end"

    def expected_echo_times(self, markers: Dict[str, float]) -> Optional[Dict[str, float]]:
        """
        Where each bit should come back.

        A plain rephasing pulse mirrors every bit about its center. After a
        preparing pulse the phase kept before it is reversed by the final one,
        so bit k returns at t_R + t_prep - t_k (pulse centers).
        """
        if not self.rephasing or not self.bits:
            return None
        if self.preparing:
            return locked_echo_times(markers, self.bits, self.rephasing, self.preparing)
        return mirror_times(markers, self.bits, self.rephasing)


class _SequenceBuilder:
    """Accumulates statements while tracking the clock"""

    def __init__(self) -> None:
        self.statements: List[Statement] = []
        self.clock = 0.0

    def wait(self, duration: float, overrides: Tuple[DecayOverride, ...] = ()) -> None:
        if duration > 1e-12:
            self.statements.append(PulseSegment(kind="wait", duration_us=duration, decay_overrides=overrides))
            self.clock += duration

    def wait_until(self, time_us: float) -> None:
        if time_us < self.clock - 1e-9:
            raise ValueError(f"t={time_us} us collides with the pulse ending at {self.clock:g} us")
        self.wait(time_us - self.clock)

    def pulse(
        self,
        label: str,
        fields: Dict[FieldName, FieldDrive],
        duration_us: Optional[float] = None,
        area_pi: Optional[float] = None,
    ) -> None:
        segment = PulseSegment(kind="pulse", fields=fields, duration_us=duration_us, area_pi=area_pi)
        if area_pi is not None:
            duration = area_pi * math.pi / to_angular(segment.generalized_rabi_khz)
        else:
            assert duration_us is not None
            duration = duration_us
        self.statements.append(Mark(name=f"{label}_start"))
        self.statements.append(segment)
        self.statements.append(Mark(name=f"{label}_end"))
        self.clock += duration

    def build(self, populations: Optional[Tuple[float, ...]]) -> PulseSequence:
        return PulseSequence(statements=tuple(self.statements), initial_populations=populations)


def _raman(rabi_khz: float) -> Dict[FieldName, FieldDrive]:
    """Balanced probe/coupling pair with generalized Rabi frequency rabi_khz"""
    amplitude = rabi_khz / math.sqrt(2.0)
    return {
        FieldName.PROBE: FieldDrive(amplitude_khz=amplitude),
        FieldName.COUPLING: FieldDrive(amplitude_khz=amplitude),
    }


def _raman_duration(area_pi: float, rabi_khz: float) -> float:
    return area_pi * math.pi / to_angular(rabi_khz)


def _spin_system(params: ScenarioParams, four_level: bool = False) -> LevelSystem:
    system = LevelSystem.four_level_default() if four_level else LevelSystem.three_level_default()
    if params.gamma21_khz is not None:
        system = system.with_dephasing([DecayOverride(i=2, j=1, gamma_khz=params.gamma21_khz)])
    return system


def _write_data_bits(
    builder: _SequenceBuilder, params: ScenarioParams, probe_khz: float, coupling_khz: float
) -> Tuple[str, ...]:
    labels = BIT_LABELS[: len(params.data_starts_us)]
    fields = {
        FieldName.PROBE: FieldDrive(amplitude_khz=probe_khz),
        FieldName.COUPLING: FieldDrive(amplitude_khz=coupling_khz),
    }
    for label, start in zip(labels, params.data_starts_us):
        builder.wait_until(start)
        builder.pulse(label, fields, duration_us=params.data_duration_us)
    return labels


def _echo_window_end(
    rephase_start: float, rephase_duration: float, first_bit_start: float, params: ScenarioParams
) -> float:
    """Late enough for the mirror image of the first bit plus a margin"""
    center = rephase_start + rephase_duration / 2.0
    first_bit_center = first_bit_start + params.data_duration_us / 2.0
    default = rephase_start + 2.0 * (rephase_start - first_bit_start) + 20.0
    return max(default, 2.0 * center - first_bit_center + 20.0)


def _raman_storage(
    params: ScenarioParams, name: str, probe_khz: float, coupling_khz: float, retain: Tuple[float, ...]
) -> Scenario:
    delay = params.rephasing_delay_us
    last_bit_end = params.data_starts_us[-1] + params.data_duration_us
    if delay < last_bit_end:
        raise ValueError(f"rephasing delay {delay} us collides with the data pulse ending at {last_bit_end} us")
    area = params.rephasing_area_pi

    builder = _SequenceBuilder()
    bits = _write_data_bits(builder, params, probe_khz, coupling_khz)
    builder.wait_until(delay)
    builder.pulse("R", _raman(params.rephase_rabi_khz), area_pi=area)
    duration = _raman_duration(area, params.rephase_rabi_khz)
    builder.wait_until(_echo_window_end(delay, duration, params.data_starts_us[0], params))

    populations = params.initial_populations or (0.5, 0.5)
    return Scenario(
        name=name,
        system=_spin_system(params),
        sequence=builder.build(populations),
        ensemble=EnsembleSpec(shift_target=2),
        bits=bits,
        retained_deltas=retain,
        parameters={"area_pi": area, "delay_us": delay, "initial_populations": list(populations)},
    )


def triple_bit_storage(params: ScenarioParams = ScenarioParams()) -> Scenario:
    """Three Raman data bits A, B, C stored in the spin coherence, rephased by one Raman pulse R."""
    return _raman_storage(params, "fig1a", params.data_rabi_khz, params.data_rabi_khz, params.retain_deltas)


def phase_evolution(params: ScenarioParams = ScenarioParams()) -> Scenario:
    """triple_bit_storage with the +-10 kHz members retained for phase diagnostics"""
    retain = params.retain_deltas or (-10.0, 10.0)
    return _raman_storage(params, "fig1c", params.data_rabi_khz, params.data_rabi_khz, retain)


def weak_probe(params: ScenarioParams = ScenarioParams(variant=ScenarioVariant.WEAK_PROBE)) -> Scenario:
    """Data pulses with the probe attenuated and a stronger coupling field; R unchanged."""
    scenario = _raman_storage(
        params,
        "weak_probe",
        params.data_rabi_khz * params.attenuation,
        params.weak_coupling_khz,
        params.retain_deltas,
    )
    scenario.parameters["attenuation"] = params.attenuation
    return scenario


def photon_echo(params: ScenarioParams = ScenarioParams(variant=ScenarioVariant.FIG1B)) -> Scenario:
    """
    Two-level photon echo on |1> <-> |3> with optical inhomogeneous broadening.

    Only Gamma31 = 0.5 and gamma31 = 2.5 kHz are non-zero; the echo appears in P = sum w rho13.
    """
    system = LevelSystem.from_rates(
        3,
        big_gamma={(3, 1): 0.5},
        gamma={(3, 1): 2.5},
        shift_target=3,
    )
    probe = {FieldName.PROBE: FieldDrive(amplitude_khz=params.echo_rabi_khz)}
    first = params.data_starts_us[0]
    data_duration = _raman_duration(params.echo_data_area_pi, params.echo_rabi_khz)
    delay = params.rephasing_delay_us
    if delay < first + data_duration:
        raise ValueError(
            f"rephasing delay {delay} us collides with the data pulse ending at {first + data_duration} us"
        )
    area = params.rephasing_area_pi

    builder = _SequenceBuilder()
    builder.wait_until(first)
    builder.pulse("A", probe, area_pi=params.echo_data_area_pi)
    builder.wait_until(delay)
    builder.pulse("R", probe, area_pi=area)
    rephase_duration = _raman_duration(area, params.echo_rabi_khz)
    center = delay + rephase_duration / 2.0
    builder.wait_until(2.0 * center - (first + data_duration / 2.0) + 20.0)

    populations = params.initial_populations or (1.0, 0.0, 0.0)
    return Scenario(
        name="fig1b",
        system=system,
        sequence=builder.build(populations),
        ensemble=EnsembleSpec(shift_target=3),
        bits=("A",),
        channel="im_p13",
        retained_deltas=params.retain_deltas,
        parameters={"area_pi": area, "delay_us": delay, "data_area_pi": params.echo_data_area_pi},
    )


def delay_scan(params: ScenarioParams = ScenarioParams(variant=ScenarioVariant.FIG1D)) -> List[Scenario]:
    """One Raman storage scenario per delay; weak_probe is scanned when it is the base variant."""
    delays = list(params.delays_us)
    if delays != sorted(delays):
        raise ValueError("delays must be sorted ascending")
    builder = weak_probe if params.variant == ScenarioVariant.WEAK_PROBE else triple_bit_storage
    scenarios = []
    for delay in delays:
        scenario = builder(params.model_copy(update={"delay_us": delay}))
        scenario.name = f"{scenario.name}@{delay:g}us"
        scenarios.append(scenario)
    return scenarios


def locking_protocol(params: ScenarioParams = ScenarioParams(variant=ScenarioVariant.FIG2)) -> Scenario:
    """
    pi_R - pi_A - lock window - pi_A - final R on the four-level system.

    The first Raman pi pulse moves the stored coherence onto |3>; the aux pi
    pulse parks it in the non-decaying |4> for the lock window, during which
    the spin linewidth gamma21 is frozen at zero. With use_aux_lock off the aux
    pulses become plain waits and nothing is frozen.
    """
    aux_duration = _raman_duration(1.0, params.aux_rabi_khz)
    if params.lock_time_us < aux_duration:
        raise ValueError(f"lock time {params.lock_time_us} us is shorter than the {aux_duration:g} us pi_A pulse")
    delay = params.rephasing_delay_us
    last_bit_end = params.data_starts_us[-1] + params.data_duration_us
    if delay < last_bit_end:
        raise ValueError(f"rephasing delay {delay} us collides with the data pulse ending at {last_bit_end} us")

    aux = {FieldName.AUX: FieldDrive(amplitude_khz=params.aux_rabi_khz)}
    freeze = (DecayOverride(i=2, j=1, gamma_khz=0.0),)
    gap = params.gap_us

    builder = _SequenceBuilder()
    bits = _write_data_bits(builder, params, params.data_rabi_khz, params.data_rabi_khz)
    builder.wait_until(delay)
    builder.pulse("PR", _raman(params.rephase_rabi_khz), area_pi=1.0)
    builder.wait(gap)
    if params.use_aux_lock:
        builder.pulse("PA1", aux, area_pi=1.0)
        builder.wait(gap)
        builder.statements.append(Mark(name="LOCK_start"))
        builder.wait(params.lock_time_us, overrides=freeze)
        builder.statements.append(Mark(name="LOCK_end"))
        builder.wait(gap)
        builder.pulse("PA2", aux, area_pi=1.0)
    else:
        builder.wait(aux_duration + gap + params.lock_time_us + gap + aux_duration)
    builder.wait(gap)
    final_start = builder.clock
    builder.pulse("R", _raman(params.rephase_rabi_khz), area_pi=params.final_area_pi)
    final_duration = _raman_duration(params.final_area_pi, params.rephase_rabi_khz)
    builder.wait_until(final_start + final_duration + 2.0 * (delay - params.data_starts_us[0]) + 20.0)

    populations = params.initial_populations or (0.5, 0.5)
    name = "fig2" if params.use_aux_lock else "fig2_unlocked"
    return Scenario(
        name=name,
        system=_spin_system(params, four_level=True),
        sequence=builder.build(populations),
        ensemble=EnsembleSpec(shift_target=2),
        bits=bits,
        preparing="PR",
        retained_deltas=params.retain_deltas or ((-10.0, 10.0) if params.use_aux_lock else ()),
        parameters={
            "delay_us": delay,
            "final_area_pi": params.final_area_pi,
            "lock_time_us": params.lock_time_us,
            "use_aux_lock": params.use_aux_lock,
        },
    )


def infer_layout(sequence: PulseSequence) -> Tuple[Tuple[str, ...], Optional[str]]:
    """
    Bits and rephasing label from `X_start`/`X_end` mark pairs of a sequence.

    The rephasing window is `R` when present, otherwise the last pair; bits
    are the pairs that close before it opens.
    """
    starts: Dict[str, int] = {}
    pairs: List[Tuple[str, int]] = []
    for position, statement in enumerate(sequence.statements):
        if not isinstance(statement, Mark):
            continue
        label, _, edge = statement.name.rpartition("_")
        if edge == "start" and label:
            starts[label] = position
        elif edge == "end" and label in starts:
            pairs.append((label, starts.pop(label)))
    if not pairs:
        return (), None
    labels = [label for label, _ in sorted(pairs, key=lambda p: p[1])]
    rephasing = "R" if "R" in labels else labels[-1]
    cutoff = dict(pairs)[rephasing]
    bits = tuple(label for label, start in sorted(pairs, key=lambda p: p[1]) if start < cutoff and label != rephasing)
    return bits, rephasing


def custom_scenario(
    system: LevelSystem,
    sequence: PulseSequence,
    ensemble: EnsembleSpec,
    retained_deltas: Tuple[float, ...] = (),
) -> Scenario:
    bits, rephasing = infer_layout(sequence)
    channel = "im_p13" if system.shift_target == 3 else "abs_s12"
    return Scenario(
        name="custom",
        system=system,
        sequence=sequence,
        ensemble=ensemble,
        bits=bits,
        rephasing=rephasing,
        channel=channel,
        retained_deltas=retained_deltas,
    )


def build_scenario(params: ScenarioParams) -> Scenario:
    """Dispatch on params.variant; fig1d builds the scenario for params.delay_us."""
    variant = params.variant
    if variant in (ScenarioVariant.FIG1A, ScenarioVariant.FIG1D):
        return triple_bit_storage(params)
    if variant == ScenarioVariant.FIG1C:
        return phase_evolution(params)
    if variant == ScenarioVariant.FIG1B:
        return photon_echo(params)
    if variant == ScenarioVariant.FIG2:
        return locking_protocol(params)
    if variant == ScenarioVariant.FIG2_UNLOCKED:
        return locking_protocol(params.model_copy(update={"use_aux_lock": False}))
    if variant == ScenarioVariant.WEAK_PROBE:
        return weak_probe(params)
    raise ValueError("custom scenarios are built from a sequence file")
