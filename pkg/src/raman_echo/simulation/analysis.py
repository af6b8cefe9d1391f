"""
Echo analysis on ensemble traces.

Retrieval efficiency is the amplitude ratio |S(echo peak)| / |S(end of the
matching data pulse)| on the macroscopic coherence, optionally squared.
The reference is read at the pulse end, after the ensemble has already
dephased during the pulse, so a rephased echo can exceed it; such values are
flagged rather than clipped.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.signal import find_peaks

from .ensemble import EnsembleTrace

logger = logging.getLogger(__name__)

DEFAULT_NOISE_FLOOR = 1e-4
DEFAULT_MATCH_TOLERANCE_US = 1.5
EFFICIENCY_HEADROOM = 0.02


class EfficiencyMetric(str, Enum):
    """Amplitude ratio or its square"""

    AMPLITUDE = "amplitude"
    INTENSITY = "intensity"


@dataclass(frozen=True)
class Echo:
    time_us: float
    amplitude: float
    bit: Optional[str] = None
    expected_us: Optional[float] = None
    bit_end_us: Optional[float] = None
    efficiency: Optional[float] = None

    @property
    def storage_time_us(self) -> Optional[float]:
        """Bit end to echo peak"""
        return None if self.bit_end_us is None else self.time_us - self.bit_end_us

    def to_dict(self) -> Dict[str, Any]:
        return {
            "bit": self.bit,
            "time_us": self.time_us,
            "amplitude": self.amplitude,
            "expected_us": self.expected_us,
            "bit_end_us": self.bit_end_us,
            "storage_time_us": self.storage_time_us,
            "efficiency": self.efficiency,
        }


@dataclass
class EchoReport:
    """Echoes in ascending time"""

    echoes: List[Echo] = field(default_factory=list)
    channel: str = "abs_s12"
    noise_floor: float = DEFAULT_NOISE_FLOOR
    missing: List[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.echoes)

    @property
    def bits(self) -> List[Optional[str]]:
        return [echo.bit for echo in self.echoes]

    @property
    def time_reversed(self) -> bool:
        """True when the matched bits come back in reverse writing (alphabetical) order"""
        labels = [bit for bit in self.bits if bit is not None]
        return len(labels) > 1 and labels == sorted(labels, reverse=True)

    def by_bit(self, bit: str) -> Optional[Echo]:
        for echo in self.echoes:
            if echo.bit == bit:
                return echo
        return None

    @property
    def efficiencies(self) -> Dict[str, float]:
        return {echo.bit: echo.efficiency for echo in self.echoes if echo.bit and echo.efficiency is not None}

    @property
    def over_unity(self) -> List[str]:
        """Bits whose efficiency exceeds 1 by more than EFFICIENCY_HEADROOM"""
        return [bit for bit, value in self.efficiencies.items() if value > 1.0 + EFFICIENCY_HEADROOM]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "channel": self.channel,
            "noise_floor": self.noise_floor,
            "time_reversed": self.time_reversed,
            "echoes": [echo.to_dict() for echo in self.echoes],
            "missing": list(self.missing),
            "over_unity": self.over_unity,
        }


@dataclass(frozen=True)
class FitResult:
    """efficiency = amplitude * exp(-t / tau_us)"""

    amplitude: float
    tau_us: float
    r_squared: float
    points: Tuple[Tuple[float, float], ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "amplitude": self.amplitude,
            "tau_us": self.tau_us,
            "r_squared": self.r_squared,
            "points": [list(point) for point in self.points],
        }


@dataclass(frozen=True)
class PhaseReport:
    """Phase bookkeeping of the retained +-delta members across one pulse"""

    delta_khz: float
    t_before_us: float
    t_after_us: float
    re_recovery_error: float
    im_reversal_error: float
    swap_error: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "delta_khz": self.delta_khz,
            "t_before_us": self.t_before_us,
            "t_after_us": self.t_after_us,
            "re_recovery_error": self.re_recovery_error,
            "im_reversal_error": self.im_reversal_error,
            "swap_error": self.swap_error,
        }


def window_center(markers: Mapping[str, float], label: str) -> float:
    """Midpoint of the `label_start` / `label_end` mark pair"""
    try:
        return 0.5 * (markers[f"{label}_start"] + markers[f"{label}_end"])
    except KeyError as exc:
        raise ValueError(f"marker pair for '{label}' not found") from exc


def mirror_times(markers: Mapping[str, float], bits: Sequence[str], rephasing: str = "R") -> Dict[str, float]:
    """t_echo = 2 t_R,center - t_bit,center for every bit"""
    center = window_center(markers, rephasing)
    return {bit: 2.0 * center - window_center(markers, bit) for bit in bits}


def locked_echo_times(
    markers: Mapping[str, float], bits: Sequence[str], rephasing: str = "R", preparing: str = "PR"
) -> Dict[str, float]:
    """t_echo = t_R,center + t_PR,center - t_bit,center; reduces to mirror_times when PR and R coincide"""
    final = window_center(markers, rephasing)
    prepare = window_center(markers, preparing)
    return {bit: final + prepare - window_center(markers, bit) for bit in bits}


def _magnitude(channel: str) -> str:
    _, _, observable = channel.lower().partition("_")
    return f"abs_{observable}"


def detect_echoes(
    trace: EnsembleTrace,
    search_window: Optional[Tuple[float, float]] = None,
    expected_times: Optional[Mapping[str, float]] = None,
    channel: str = "abs_s12",
    noise_floor: float = DEFAULT_NOISE_FLOOR,
    tolerance_us: float = DEFAULT_MATCH_TOLERANCE_US,
    bits: Sequence[str] = (),
) -> EchoReport:
    """
    Local maxima of a channel above the noise floor inside the search window.

    With expected_times each bit takes the tallest peak within tolerance_us of
    its expected time. Otherwise, when bits are given, the len(bits) tallest
    peaks are kept and matched in reverse writing order (last bit first).
    Signed channels (re_, im_) are searched by magnitude, so an echo of either
    sign counts and its amplitude is reported unsigned.

    Args:
        trace: Ensemble trace
        search_window: (start, end) in us; start is exclusive
        expected_times: Bit label -> expected echo time in us
        channel: Observable searched, default |S|
        noise_floor: Absolute peak height threshold
        tolerance_us: Matching half-width in us
        bits: Bit labels in writing order for unmatched detection

    Returns:
        EchoReport in ascending time; empty when nothing clears the floor
    """
    values = np.abs(trace.channel(channel))
    times = trace.times
    start, end = search_window if search_window is not None else (-math.inf, math.inf)
    mask = (times > start + 1e-9) & (times <= end + 1e-9)
    offset = int(np.argmax(mask)) if mask.any() else 0
    window = values[mask]

    report = EchoReport(channel=channel, noise_floor=noise_floor)
    if window.size < 3:
        report.missing = list(expected_times or bits)
        return report
    peaks, _ = find_peaks(window, height=noise_floor)
    peaks = peaks + offset
    logger.debug(f"{len(peaks)} peak(s) above {noise_floor:g} in {channel}")

    echoes: List[Echo] = []
    if expected_times:
        for bit, expected in expected_times.items():
            near = [p for p in peaks if abs(times[p] - expected) <= tolerance_us + 1e-9]
            if not near:
                report.missing.append(bit)
                continue
            best = max(near, key=lambda p: values[p])
            echoes.append(Echo(float(times[best]), float(values[best]), bit=bit, expected_us=expected))
    elif bits:
        tallest = sorted(peaks, key=lambda p: values[p], reverse=True)[: len(bits)]
        ordered = sorted(tallest)
        labels = list(reversed(bits))
        for p, bit in zip(ordered, labels):
            echoes.append(Echo(float(times[p]), float(values[p]), bit=bit))
        report.missing = labels[len(ordered) :]
    else:
        echoes = [Echo(float(times[p]), float(values[p])) for p in peaks]

    report.echoes = sorted(echoes, key=lambda echo: echo.time_us)
    return report


def retrieval_efficiency(
    trace: EnsembleTrace,
    bit_marker: str,
    echo_peak: Union[Echo, float],
    channel: str = "abs_s12",
    metric: EfficiencyMetric = EfficiencyMetric.AMPLITUDE,
) -> float:
    """
    |S(t_echo)| / |S(t_bit,end)|, squared for the intensity metric.

    bit_marker is a bit label ("A") or its end mark ("A_end").
    The value is not clipped; see EchoReport.over_unity.
    """
    name = bit_marker if bit_marker.endswith("_end") else f"{bit_marker}_end"
    if name not in trace.markers:
        raise ValueError(f"marker '{name}' not found in trace")
    magnitude = trace.channel(_magnitude(channel))
    reference = float(magnitude[trace.index_of(trace.markers[name])])
    if reference <= 0.0:
        raise ValueError(f"zero reference amplitude at {name}")
    echo_time = echo_peak.time_us if isinstance(echo_peak, Echo) else float(echo_peak)
    ratio = float(magnitude[trace.index_of(echo_time)]) / reference
    return ratio**2 if EfficiencyMetric(metric) == EfficiencyMetric.INTENSITY else ratio


def attach_efficiencies(
    trace: EnsembleTrace,
    report: EchoReport,
    metric: EfficiencyMetric = EfficiencyMetric.AMPLITUDE,
) -> EchoReport:
    """Fill bit end times and efficiencies of every matched echo"""
    echoes = []
    for echo in report.echoes:
        if echo.bit is None:
            echoes.append(echo)
            continue
        efficiency = retrieval_efficiency(trace, echo.bit, echo, report.channel, metric)
        if efficiency > 1.0 + EFFICIENCY_HEADROOM:
            logger.warning(
                f"bit {echo.bit}: efficiency {efficiency:.3f} exceeds 1; "
                "the bit-end reference is taken after in-pulse dephasing"
            )
        echoes.append(replace(echo, bit_end_us=trace.markers[f"{echo.bit}_end"], efficiency=efficiency))
    return replace(report, echoes=echoes)


def fit_exponential(points: Sequence[Tuple[float, float]]) -> FitResult:
    """
    Least-squares fit of ln(efficiency) against storage time.

    R^2 is computed in log space. A non-decaying fit reports tau = inf.
    """
    if len(points) < 3:
        raise ValueError(f"at least three points are needed for a fit, got {len(points)}")
    t = np.array([p[0] for p in points], dtype=float)
    efficiency = np.array([p[1] for p in points], dtype=float)
    if np.any(efficiency <= 0.0):
        raise ValueError("efficiencies must be positive")
    if np.ptp(t) == 0.0:
        raise ValueError("storage times must not all be equal")

    log_eff = np.log(efficiency)
    slope, intercept = np.polyfit(t, log_eff, 1)
    residual = log_eff - (slope * t + intercept)
    ss_res = float(np.sum(residual**2))
    ss_tot = float(np.sum((log_eff - log_eff.mean()) ** 2))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0

    if slope >= 0.0:
        logger.warning("efficiency does not decay with storage time; tau reported as inf")
        tau = math.inf
    else:
        tau = -1.0 / float(slope)
    return FitResult(
        amplitude=float(np.exp(intercept)),
        tau_us=tau,
        r_squared=r_squared,
        points=tuple((float(a), float(b)) for a, b in zip(t, efficiency)),
    )


def phase_diagnostics(
    trace: EnsembleTrace,
    delta_khz: float,
    t_before_us: float,
    t_after_us: float,
) -> PhaseReport:
    """
    Re recovery, Im reversal and +-delta swap of rho12 across [t_before, t_after].

    Errors are the worst of the +delta and -delta members.
    """
    try:
        plus = trace.member(delta_khz)
        minus = trace.member(-delta_khz)
    except KeyError as exc:
        raise ValueError(f"members at +-{delta_khz:g} kHz were not retained") from exc

    def rho12(member: Any, t: float) -> complex:
        return complex(member.rho12[member.index_of(t)])

    re_error = 0.0
    im_error = 0.0
    swap_error = 0.0
    for member, mirror in ((plus, minus), (minus, plus)):
        before = rho12(member, t_before_us)
        after = rho12(member, t_after_us)
        re_error = max(re_error, abs(after.real - before.real))
        im_error = max(im_error, abs(after.imag + before.imag))
        swap_error = max(swap_error, abs(after.imag - rho12(mirror, t_before_us).imag))
    return PhaseReport(
        delta_khz=abs(delta_khz),
        t_before_us=t_before_us,
        t_after_us=t_after_us,
        re_recovery_error=re_error,
        im_reversal_error=im_error,
        swap_error=swap_error,
    )


def storage_capacity(t2s_us: float, tau_us: float) -> int:
    """Number of data pulses of length tau that fit in T2S: floor(T2S / tau)"""
    if t2s_us <= 0 or tau_us <= 0:
        raise ValueError("T2S and tau must be positive")
    if math.isinf(t2s_us):
        raise ValueError("T2S is infinite")
    capacity = int(math.floor(t2s_us / tau_us + 1e-12))
    if capacity == 0:
        logger.warning(f"data pulse length {tau_us:g} us exceeds T2S {t2s_us:g} us; storage capacity is 0")
    return capacity


def echo_window(
    trace: EnsembleTrace,
    center_us: float,
    half_width_us: float,
    channel: str = "abs_s12",
    points: int = 61,
) -> np.ndarray:
    """Channel interpolated on `points` evenly spaced times within +-half_width_us of center_us"""
    offsets = np.linspace(-half_width_us, half_width_us, points)
    return np.interp(center_us + offsets, trace.times, trace.channel(channel))


def shape_similarity(echoes: Sequence[np.ndarray]) -> float:
    """Max pointwise deviation between peak-normalized, peak-aligned echo windows"""
    if len(echoes) < 2:
        raise ValueError("at least two echoes are needed")
    length = len(echoes[0])
    normalized = []
    for values in echoes:
        values = np.asarray(values, dtype=float)
        if len(values) != length:
            raise ValueError("echo windows must have equal length")
        peak = float(np.max(np.abs(values)))
        if peak == 0.0:
            raise ValueError("zero-amplitude echo")
        normalized.append(values / peak)
    reference = normalized[0]
    return float(max(np.max(np.abs(other - reference)) for other in normalized[1:]))
