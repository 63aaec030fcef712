"""
Singlet-triplet Hamiltonian service.

Builds and diagonalizes the three-level ST Hamiltonian in the basis
(|T0(1,1)>, |S(1,1)>, |S(0,2)>), computes dipole matrix elements of the
detuning operator and locates transverse sweet spots.
"""

import logging
import math
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from stqubit.schemas import E, F, G, DeviceParams, EigenSystem
from stqubit.utils.error_handlers import (
    DegenerateSpectrumError,
    NoRootInBracketError,
    ValidationError,
)
from stqubit.utils.units import ghz_to_rad_per_ns

logger = logging.getLogger(__name__)

# Index of |S(0,2)> in the charge basis
S02 = 2


class HamiltonianService:
    """Service for the three-level ST qubit spectrum."""

    DEGENERACY_THRESHOLD = 1e-9  # rad/ns
    DEFAULT_BRACKET_GHZ = 20.0
    SLOPE_TOLERANCE = 1e-10

    @staticmethod
    def build_hst(params: DeviceParams, energy_shift: float = 0.0) -> np.ndarray:
        """
        Assemble H_ST.

        Args:
            params: Device parameters (rad/ns)
            energy_shift: Constant added to the diagonal

        Returns:
            Real symmetric 3x3 matrix
        """
        root2_tau = math.sqrt(2.0) * params.tau
        hst = np.array(
            [
                [0.0, params.delta_b, 0.0],
                [params.delta_b, 0.0, root2_tau],
                [0.0, root2_tau, -params.epsilon],
            ]
        )
        if energy_shift:
            hst = hst + energy_shift * np.eye(3)
        return hst

    def eigensystem(
        self, params: DeviceParams, strict: bool = False, energy_shift: float = 0.0
    ) -> EigenSystem:
        """
        Diagonalize H_ST and build the dipole matrix d_mn = <m|dH/d eps|n>.

        Eigenvectors are fixed by making their largest-magnitude component
        real and positive.

        Args:
            params: Device parameters
            strict: Raise instead of warn on a degenerate spectrum
            energy_shift: Constant added to the diagonal of H_ST

        Returns:
            EigenSystem with ascending energies (g, e, f)

        Raises:
            DegenerateSpectrumError: If strict and two levels are closer than the threshold
        """
        hst = self.build_hst(params, energy_shift)
        energies, states = np.linalg.eigh(hst)
        states = states.astype(complex)

        for n in range(3):
            pivot = states[np.argmax(np.abs(states[:, n])), n]
            states[:, n] *= np.conj(pivot) / abs(pivot)

        gap = float(np.min(np.diff(energies)))
        if gap < self.DEGENERACY_THRESHOLD:
            if strict:
                raise DegenerateSpectrumError(gap, self.DEGENERACY_THRESHOLD)
            logger.warning(f"Near-degenerate spectrum (gap {gap:.3e} rad/ns) at {params}")

        s02 = states[S02, :]
        dipole = -np.outer(np.conj(s02), s02)

        return EigenSystem(energies=energies, states=states, dipole=dipole)

    def qubit_energy(self, params: DeviceParams) -> float:
        """Qubit splitting w_q = E_e - E_g (rad/ns)."""
        return self.eigensystem(params).omega_q

    def qubit_energy_derivative(self, params: DeviceParams) -> float:
        """
        Slope d w_q / d eps from Hellmann-Feynman, d_ee - d_gg.

        Raises:
            DegenerateSpectrumError: If the spectrum is degenerate
        """
        eigen = self.eigensystem(params, strict=True)
        return float(np.real(eigen.dipole[E, E] - eigen.dipole[G, G]))

    def find_tss(
        self,
        params: DeviceParams,
        branch_hint: Optional[int] = None,
        bracket: Optional[Tuple[float, float]] = None,
        energy_shift: float = 0.0,
    ) -> float:
        """
        Locate the transverse sweet spot eps_SS where d w_q / d eps = 0.

        Args:
            params: Device parameters; epsilon is ignored
            branch_hint: +1 or -1 to search only that sign of detuning.
                Defaults to sign(delta_b - tau).
            bracket: (lower, upper) detuning bracket in rad/ns
            energy_shift: Constant added to the diagonal of H_ST

        Returns:
            Sweet-spot detuning in rad/ns

        Raises:
            ValidationError: If delta_b == tau
            NoRootInBracketError: If the slope does not change sign
        """
        if math.isclose(params.delta_b, params.tau, rel_tol=1e-12, abs_tol=1e-15):
            raise ValidationError(
                "Sweet-spot branch is undefined for delta_b == tau", field="tau"
            )

        if bracket is None:
            limit = ghz_to_rad_per_ns(self.DEFAULT_BRACKET_GHZ)
            bracket = (-limit, limit)
        lower, upper = bracket

        if branch_hint is None:
            branch_hint = 1 if params.delta_b > params.tau else -1
        if branch_hint > 0:
            lower = max(lower, 0.0)
        elif branch_hint < 0:
            upper = min(upper, 0.0)

        def slope(epsilon: float) -> float:
            eigen = self.eigensystem(
                params.with_epsilon(epsilon), strict=True, energy_shift=energy_shift
            )
            return float(np.real(eigen.dipole[E, E] - eigen.dipole[G, G]))

        s_lower, s_upper = slope(lower), slope(upper)
        if s_lower == 0.0:
            return lower
        if s_upper == 0.0:
            return upper
        if np.sign(s_lower) == np.sign(s_upper):
            raise NoRootInBracketError(lower, upper)

        eps_ss = brentq(slope, lower, upper, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
        residual = abs(slope(eps_ss))
        if residual > self.SLOPE_TOLERANCE:
            logger.warning(f"Sweet-spot slope residual {residual:.2e} above tolerance")

        logger.debug(f"Sweet spot at eps = {eps_ss:.12f} rad/ns (slope {residual:.1e})")
        return float(eps_ss)

    def rabi_frequency(self, eigen: EigenSystem, eps_ac: float) -> float:
        """Resonant Rabi frequency Omega_0 = |d_ge| eps_ac."""
        return abs(eigen.d_ge) * eps_ac

    @staticmethod
    def leakage_detuning(eigen: EigenSystem) -> float:
        """w_ef - w_q: how far the e-f transition sits from the qubit line."""
        return float(eigen.energies[F] - 2 * eigen.energies[E] + eigen.energies[G])

    def spectrum_scan(self, params: DeviceParams, eps_grid: np.ndarray) -> Dict[str, np.ndarray]:
        """
        Energies, qubit splitting and slope over a detuning grid.

        Args:
            params: Device parameters; epsilon is replaced by the grid values
            eps_grid: Detunings in rad/ns

        Returns:
            Dict of arrays keyed epsilon, e_g, e_e, e_f, omega_q, slope, is_tss
        """
        eps_grid = np.atleast_1d(np.asarray(eps_grid, dtype=float))
        energies = np.empty((len(eps_grid), 3))
        slopes = np.empty(len(eps_grid))

        for i, epsilon in enumerate(eps_grid):
            eigen = self.eigensystem(params.with_epsilon(epsilon))
            energies[i] = eigen.energies
            slopes[i] = np.real(eigen.dipole[E, E] - eigen.dipole[G, G])

        is_tss = np.zeros(len(eps_grid), dtype=bool)
        try:
            eps_ss = self.find_tss(params)
        except (NoRootInBracketError, ValidationError, DegenerateSpectrumError) as e:
            logger.info(f"No sweet-spot marker for scan: {e.message}")
        else:
            nearest = int(np.argmin(np.abs(eps_grid - eps_ss)))
            spacing = float(np.min(np.diff(np.sort(eps_grid)))) if len(eps_grid) > 1 else 0.0
            if abs(eps_grid[nearest] - eps_ss) <= max(spacing / 2, 1e-9):
                is_tss[nearest] = True

        return {
            "epsilon": eps_grid,
            "e_g": energies[:, G],
            "e_e": energies[:, E],
            "e_f": energies[:, F],
            "omega_q": energies[:, E] - energies[:, G],
            "slope": slopes,
            "is_tss": is_tss,
        }


def get_hamiltonian_service() -> HamiltonianService:
    """Get Hamiltonian service instance."""
    return HamiltonianService()
