"""
Test configuration and shared fixtures
"""

from pathlib import Path

import pytest

from raman_echo.simulation.model import EnsembleSpec, LevelSystem

REPO_ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture
def test_context():
    """Mutable scratch space shared between BDD steps"""
    return {}


@pytest.fixture
def sequences_dir() -> Path:
    return REPO_ROOT / "sequences"


@pytest.fixture
def three_level() -> LevelSystem:
    return LevelSystem.three_level_default()


@pytest.fixture
def four_level() -> LevelSystem:
    return LevelSystem.four_level_default()


@pytest.fixture
def lossless_three_level() -> LevelSystem:
    """Lambda system with every rate switched off"""
    return LevelSystem.from_rates(3, big_gamma={}, gamma={})


@pytest.fixture
def coarse_ensemble() -> EnsembleSpec:
    """101 members; the 4 kHz spacing keeps grid revivals 250 us away"""
    return EnsembleSpec(fwhm_khz=200.0, spacing_khz=4.0, truncation_khz=200.0, shift_target=2)
