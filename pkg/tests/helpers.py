"""
Synthetic traces and closed forms used across the tests
"""

import math

import numpy as np

from raman_echo.simulation.ensemble import EnsembleTrace
from raman_echo.simulation.model import EnsembleSpec


def make_trace(times, values, markers=None, p13=None) -> EnsembleTrace:
    """Synthetic ensemble trace with S = values"""
    times = np.asarray(times, dtype=float)
    s12 = np.asarray(values, dtype=complex)
    return EnsembleTrace(
        times=times,
        s12=s12,
        p13=np.zeros_like(s12) if p13 is None else np.asarray(p13, dtype=complex),
        populations=np.zeros((len(times), 3)),
        markers=dict(markers or {}),
    )


def gaussian(times, center, width, height=1.0):
    times = np.asarray(times, dtype=float)
    return height * np.exp(-((times - center) ** 2) / (2.0 * width**2))


def fid_envelope(t_us: float, fwhm_khz: float) -> float:
    """|S(t)| / |S(0)| for a Gaussian spread of shifts"""
    sigma = fwhm_khz / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    return math.exp(-0.5 * (2.0 * math.pi * 1e-3 * sigma * t_us) ** 2)


# Raman and aux pulses this strong act on the whole 200 kHz spread alike
HARD_RABI_KHZ = 5000.0


def coarse_grid(scenario, spacing_khz: float = 4.0):
    """Swap in a 200 kHz FWHM grid truncated at +-200 kHz on the scenario's shift target"""
    scenario.ensemble = EnsembleSpec(
        fwhm_khz=200.0, spacing_khz=spacing_khz, truncation_khz=200.0, shift_target=scenario.ensemble.shift_target
    )
    return scenario
