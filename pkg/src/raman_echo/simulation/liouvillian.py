"""
Equation of motion for a single ensemble member.

    drho/dt = -i [H, rho] + R(rho)

H is written in the frame rotating with every field, in rad/us:

    H11 = 0
    H22 = Dp - Dc (+ delta when the shift target is |2>)
    H33 = Dp      (+ delta when the shift target is |3>)
    H44 = Dp - DA
    H31 = Op e^{i phi_p} / 2,  H32 = Oc e^{i phi_c} / 2,  H43 = OA e^{i phi_A} / 2

with positive detuning meaning the field sits above resonance.

R is population feeding plus independent coherence dephasing:

    d rho_jj += sum_i k_ij rho_ii - sum_i k_ji rho_jj,   k_ij = 2 pi 1e-3 Gamma_ij
    d rho_ij  = -lambda_ij rho_ij  (i != j),            lambda_ij = pi 1e-3 gamma_ij

A commutator Gamma rho - rho Gamma would vanish for diagonal Gamma and damp
nothing, so it is not used.
"""

from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

import numpy as np

from .model import (
    ANGULAR_PER_KHZ,
    DEPHASING_PER_KHZ,
    DecayOverride,
    FieldName,
    LevelSystem,
    PulseSegment,
    to_angular,
)

HERMITIAN_TOLERANCE = 1e-9


def hermiticity_error(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix - matrix.conj().T))) if matrix.size else 0.0


def build_hamiltonian(system: LevelSystem, segment: PulseSegment, delta_khz: float) -> np.ndarray:
    """RWA Hamiltonian (rad/us) for one member shifted by delta_khz."""
    n = system.n_levels
    for name in segment.fields:
        transition = system.transition(name)
        if transition is None or max(transition.lower, transition.upper) > n:
            raise ValueError(f"field '{name.value}' does not exist in a {n}-level system")

    def detuning(name: FieldName) -> float:
        drive = segment.fields.get(name)
        return 0.0 if drive is None else drive.detuning_khz

    dp, dc, da = detuning(FieldName.PROBE), detuning(FieldName.COUPLING), detuning(FieldName.AUX)
    diagonal = [0.0, dp - dc, dp, dp - da][:n]
    diagonal[system.shift_target - 1] += delta_khz

    hamiltonian = np.diag(np.array(diagonal, dtype=complex) * ANGULAR_PER_KHZ)
    for name, drive in segment.fields.items():
        transition = system.transition(name)
        assert transition is not None
        upper, lower = transition.upper - 1, transition.lower - 1
        coupling = to_angular(drive.amplitude_khz) * np.exp(1j * drive.phase_rad) / 2.0
        hamiltonian[upper, lower] += coupling
        hamiltonian[lower, upper] += np.conj(coupling)
    return hamiltonian


def relaxation_rates(system: LevelSystem) -> Tuple[np.ndarray, np.ndarray]:
    """(k, lambda): population transfer rates and coherence decay constants in 1/us."""
    k = system.big_gamma_array() * ANGULAR_PER_KHZ
    np.fill_diagonal(k, 0.0)
    lam = system.gamma_array() * DEPHASING_PER_KHZ
    np.fill_diagonal(lam, 0.0)
    return k, lam


def _relax(k: np.ndarray, lam: np.ndarray, rho: np.ndarray) -> np.ndarray:
    out = -lam * rho
    populations = np.real(np.diag(rho))
    np.fill_diagonal(out, k.T @ populations - k.sum(axis=1) * populations)
    return out


def apply_relaxation(system: LevelSystem, rho: np.ndarray) -> np.ndarray:
    """Relaxation contribution to drho/dt; trace of the result is zero."""
    if hermiticity_error(rho) > HERMITIAN_TOLERANCE:
        raise ValueError("density matrix is not Hermitian")
    k, lam = relaxation_rates(system)
    return _relax(k, lam, rho)


@dataclass(frozen=True)
class Liouvillian:
    """Constant generator of one member's evolution during one segment"""

    hamiltonian: np.ndarray
    population_rates: np.ndarray
    dephasing_rates: np.ndarray

    @classmethod
    def build(
        cls,
        system: LevelSystem,
        segment: PulseSegment,
        delta_khz: float,
        overrides: Optional[Iterable[DecayOverride]] = None,
    ) -> "Liouvillian":
        """overrides default to the segment's own decay overrides"""
        effective = system.with_dephasing(segment.decay_overrides if overrides is None else overrides)
        k, lam = relaxation_rates(effective)
        return cls(build_hamiltonian(system, segment, delta_khz), k, lam)

    @property
    def n(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def max_frequency(self) -> float:
        """Largest |H| entry plus largest rate; sets the RK4 step bound"""
        feeding = float(self.population_rates.sum(axis=1).max(initial=0.0))
        rates = max(feeding, float(self.dephasing_rates.max(initial=0.0)))
        return float(np.abs(self.hamiltonian).max(initial=0.0)) + rates

    def relax(self, rho: np.ndarray) -> np.ndarray:
        return _relax(self.population_rates, self.dephasing_rates, rho)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        h = self.hamiltonian
        return -1j * (h @ rho - rho @ h) + self.relax(rho)

    def superoperator(self) -> np.ndarray:
        """n^2 x n^2 matrix acting on row-major vec(rho)."""
        n = self.n
        identity = np.eye(n)
        generator = -1j * (np.kron(self.hamiltonian, identity) - np.kron(identity, self.hamiltonian.T))
        relax = np.zeros((n * n, n * n), dtype=complex)
        for i in range(n):
            for j in range(n):
                if i != j:
                    relax[i * n + j, i * n + j] = -self.dephasing_rates[i, j]
                    relax[j * n + j, i * n + i] += self.population_rates[i, j]
            relax[i * n + i, i * n + i] -= self.population_rates[i].sum()
        return generator + relax


def equation_of_motion(
    system: LevelSystem,
    segment: PulseSegment,
    delta_khz: float,
    rho: np.ndarray,
    overrides: Optional[Iterable[DecayOverride]] = None,
) -> np.ndarray:
    """-i[H, rho] + R(rho) with the segment's decay overrides substituted into gamma."""
    if hermiticity_error(rho) > HERMITIAN_TOLERANCE:
        raise ValueError("density matrix is not Hermitian")
    return Liouvillian.build(system, segment, delta_khz, overrides)(rho)
