"""
Tests for the Hamiltonian, relaxation and superoperator of a single member
"""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from raman_echo.simulation.liouvillian import (
    Liouvillian,
    apply_relaxation,
    build_hamiltonian,
    equation_of_motion,
    hermiticity_error,
)
from raman_echo.simulation.model import (
    ANGULAR_PER_KHZ,
    DecayOverride,
    FieldDrive,
    FieldName,
    LevelSystem,
    PulseSegment,
)


def random_density_matrix(n: int, seed: int = 7) -> np.ndarray:
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


@pytest.fixture
def raman_segment() -> PulseSegment:
    return PulseSegment(
        fields={
            FieldName.PROBE: FieldDrive(amplitude_khz=17.0, detuning_khz=3.0, phase_deg=30.0),
            FieldName.COUPLING: FieldDrive(amplitude_khz=17.0, detuning_khz=-2.0),
        },
        duration_us=3.0,
    )


class TestHamiltonian:
    def test_is_hermitian(self, three_level, raman_segment):
        h = build_hamiltonian(three_level, raman_segment, delta_khz=40.0)
        assert hermiticity_error(h) < 1e-15

    def test_diagonal_layout(self, three_level, raman_segment):
        """H22 = Dp - Dc + delta, H33 = Dp"""
        h = build_hamiltonian(three_level, raman_segment, delta_khz=40.0)
        assert h[0, 0] == 0
        assert h[1, 1].real == pytest.approx((3.0 + 2.0 + 40.0) * ANGULAR_PER_KHZ)
        assert h[2, 2].real == pytest.approx(3.0 * ANGULAR_PER_KHZ)

    def test_shift_on_excited_level(self, three_level, raman_segment):
        shifted = three_level.model_copy(update={"shift_target": 3})
        h = build_hamiltonian(shifted, raman_segment, delta_khz=40.0)
        assert h[2, 2].real == pytest.approx(43.0 * ANGULAR_PER_KHZ)

    def test_coupling_carries_phase(self, three_level, raman_segment):
        """H31 = Op e^{i phi} / 2"""
        h = build_hamiltonian(three_level, raman_segment, delta_khz=0.0)
        expected = 17.0 * ANGULAR_PER_KHZ / 2.0 * np.exp(1j * math.radians(30.0))
        assert h[2, 0] == pytest.approx(expected)
        assert h[0, 2] == pytest.approx(np.conj(expected))
        assert h[2, 1] == pytest.approx(17.0 * ANGULAR_PER_KHZ / 2.0)

    def test_aux_field_on_four_levels(self, four_level):
        segment = PulseSegment(
            fields={FieldName.AUX: FieldDrive(amplitude_khz=50.0, detuning_khz=5.0)}, duration_us=1.0
        )
        h = build_hamiltonian(four_level, segment, delta_khz=0.0)
        assert h[3, 2] == pytest.approx(50.0 * ANGULAR_PER_KHZ / 2.0)
        assert h[3, 3].real == pytest.approx(-5.0 * ANGULAR_PER_KHZ)

    def test_unknown_field_rejected(self, three_level):
        """The auxiliary field has no transition in a three-level system"""
        segment = PulseSegment(fields={FieldName.AUX: FieldDrive(amplitude_khz=50.0)}, duration_us=1.0)
        with pytest.raises(ValueError, match="aux"):
            build_hamiltonian(three_level, segment, delta_khz=0.0)


class TestRelaxation:
    def test_preserves_trace(self, four_level):
        drho = apply_relaxation(four_level, random_density_matrix(4))
        assert abs(np.trace(drho)) < 1e-14

    @given(st.integers(min_value=0, max_value=2**32 - 1), st.sampled_from([3, 4]))
    def test_trace_conserved_for_any_state(self, seed, n_levels):
        system = LevelSystem.four_level_default() if n_levels == 4 else LevelSystem.three_level_default()
        drho = apply_relaxation(system, random_density_matrix(n_levels, seed))
        assert abs(np.trace(drho)) < 1e-13
        assert np.allclose(drho, drho.conj().T, atol=1e-15)

    def test_coherence_decay_rate(self, three_level):
        """rho21 decays at pi 1e-3 gamma21"""
        rho = np.zeros((3, 3), dtype=complex)
        rho[0, 0] = rho[1, 1] = 0.5
        rho[1, 0] = rho[0, 1] = 0.5
        drho = apply_relaxation(three_level, rho)
        assert drho[1, 0].real == pytest.approx(-math.pi * 1e-3 * 0.5)

    def test_excited_level_feeds_ground_states(self, three_level):
        rho = np.zeros((3, 3), dtype=complex)
        rho[2, 2] = 1.0
        drho = apply_relaxation(three_level, rho)
        rate = 0.5 * ANGULAR_PER_KHZ
        assert drho[0, 0].real == pytest.approx(rate)
        assert drho[1, 1].real == pytest.approx(rate)
        assert drho[2, 2].real == pytest.approx(-2.0 * rate)

    def test_rejects_non_hermitian(self, three_level):
        rho = np.zeros((3, 3), dtype=complex)
        rho[1, 0] = 1.0
        with pytest.raises(ValueError):
            apply_relaxation(three_level, rho)


class TestLiouvillian:
    def test_superoperator_matches_direct_action(self, four_level):
        segment = PulseSegment(
            fields={
                FieldName.PROBE: FieldDrive(amplitude_khz=20.0),
                FieldName.COUPLING: FieldDrive(amplitude_khz=30.0, phase_deg=90.0),
                FieldName.AUX: FieldDrive(amplitude_khz=10.0, detuning_khz=4.0),
            },
            duration_us=1.0,
        )
        liouvillian = Liouvillian.build(four_level, segment, delta_khz=-25.0)
        rho = random_density_matrix(4)
        direct = liouvillian(rho)
        via_super = (liouvillian.superoperator() @ rho.reshape(-1)).reshape(4, 4)
        np.testing.assert_allclose(via_super, direct, atol=1e-14)

    def test_dark_state_is_stationary(self, lossless_three_level):
        """(|1> - |2>)/sqrt(2) does not couple to |3> when Op = Oc"""
        segment = PulseSegment(
            fields={
                FieldName.PROBE: FieldDrive(amplitude_khz=25.0),
                FieldName.COUPLING: FieldDrive(amplitude_khz=25.0),
            },
            duration_us=1.0,
        )
        psi = np.array([1.0, -1.0, 0.0]) / math.sqrt(2.0)
        rho = np.outer(psi, psi.conj()).astype(complex)
        drho = equation_of_motion(lossless_three_level, segment, 0.0, rho)
        assert np.max(np.abs(drho)) < 1e-12

    def test_overrides_replace_segment_decay(self, three_level):
        wait = PulseSegment(
            kind="wait",
            duration_us=1.0,
            decay_overrides=(DecayOverride(i=2, j=1, gamma_khz=0.0),),
        )
        own = Liouvillian.build(three_level, wait, 0.0)
        assert own.dephasing_rates[1, 0] == 0.0
        explicit = Liouvillian.build(three_level, wait, 0.0, overrides=())
        assert explicit.dephasing_rates[1, 0] == pytest.approx(math.pi * 1e-3)

    def test_max_frequency(self, lossless_three_level):
        segment = PulseSegment(fields={FieldName.PROBE: FieldDrive(amplitude_khz=100.0)}, duration_us=1.0)
        liouvillian = Liouvillian.build(lossless_three_level, segment, 0.0)
        assert liouvillian.max_frequency == pytest.approx(100.0 * ANGULAR_PER_KHZ / 2.0)
