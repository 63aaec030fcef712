"""
Filter-transfer-function service.

Computes the control matrix R(w) of a piecewise-constant pulse sequence,
the z-noise filter function F_z(w) and the first-order fidelity under a
1/f^alpha spectrum.

Each segment rotates about an in-plane axis n = (cos phi, sin phi, 0) at rate
Omega0, so its SO(3) image is V(s) = P + cos(Omega0 s) Q + sin(Omega0 s) K with
P = n n^T, Q = 1 - P and K the cross-product matrix of n. The per-segment time
integrals then reduce to J(nu) = int_0^T exp(i nu t) dt, evaluated with a sinc
so the w = +-Omega0 points need no special casing.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Tuple

import numpy as np
from scipy.integrate import simpson

from stqubit.metrics import integration_refinements_total
from stqubit.schemas import ControlMatrix, FilterFunction, PulseSegment, PulseSequence, SpectralModel
from stqubit.schemas.enums import FilterConventionEnum, GateFamilyEnum
from stqubit.services.pulse_service import get_pulse_service
from stqubit.utils.error_handlers import ConvergenceError, ValidationError

logger = logging.getLogger(__name__)

# Order of columns in fidelity tables
FAMILIES = (
    GateFamilyEnum.NAIVE,
    GateFamilyEnum.CORPSE,
    GateFamilyEnum.GEOMETRIC,
    GateFamilyEnum.NON_CYCLIC,
)


def _segment_frame(phi: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """P, Q, K for a rotation axis at azimuth phi in the x-y plane."""
    n = np.array([math.cos(phi), math.sin(phi), 0.0])
    p = np.outer(n, n)
    q = np.eye(3) - p
    k = np.array(
        [
            [0.0, -n[2], n[1]],
            [n[2], 0.0, -n[0]],
            [-n[1], n[0], 0.0],
        ]
    )
    return p, q, k


def _window_integral(nu: np.ndarray, duration: float) -> np.ndarray:
    """J(nu) = int_0^T exp(i nu t) dt."""
    half = nu * duration / 2
    return duration * np.exp(1j * half) * np.sinc(half / math.pi)


def segment_rotation(segment: PulseSegment, elapsed: float) -> np.ndarray:
    """SO(3) image V[U_k(s)] of a segment after time s."""
    p, q, k = _segment_frame(segment.phi)
    angle = segment.omega0 * elapsed
    return p + math.cos(angle) * q + math.sin(angle) * k


class FilterService:
    """Service for filter functions and spectrum-weighted fidelities."""

    # Quadrature nodes per Rabi period for the numerical control matrix
    QUADRATURE_NODES_PER_PERIOD = 10_000

    def __init__(self):
        self.pulses = get_pulse_service()

    # ---------------------------------------------------------------- control matrix

    def control_matrix(self, sequence: PulseSequence, omega) -> ControlMatrix:
        """
        Control matrix R_ij(w), stitched segment by segment.

        R(w) = sum_k exp(i w T'_{k-1}) R^(k)(w) Lambda^(k-1), where T'_{k-1} is the
        start of segment k and Lambda^(k-1) the SO(3) image of the unitary
        accumulated before it.

        Args:
            sequence: Pulse sequence (at least one segment)
            omega: Scalar or 1-D array of angular frequencies

        Returns:
            ControlMatrix with entries shaped (len(omega), 3, 3)

        Raises:
            ValidationError: If the sequence has no segments
        """
        if not sequence.segments:
            raise ValidationError("Control matrix needs at least one segment", field="segments")

        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        w = omega[:, None, None]
        entries = np.zeros((len(omega), 3, 3), dtype=complex)
        accumulated = np.eye(3)
        start = 0.0

        for segment in sequence.segments:
            duration = segment.duration
            p, q, k = _segment_frame(segment.phi)
            j0 = _window_integral(omega, duration)[:, None, None]
            jp = _window_integral(omega + segment.omega0, duration)[:, None, None]
            jm = _window_integral(omega - segment.omega0, duration)[:, None, None]

            local = -1j * w * (p * j0 + q * (jp + jm) / 2 + k * (jp - jm) / 2j)
            entries += np.exp(1j * omega * start)[:, None, None] * (local @ accumulated)

            accumulated = segment_rotation(segment, duration) @ accumulated
            start += duration

        return ControlMatrix(omega=omega, entries=entries)

    def control_matrix_numeric(self, sequence: PulseSequence, omega: float) -> np.ndarray:
        """
        R(w) by composite Simpson quadrature of -i w int exp(i w t) V(t) dt.

        Slow reference used to check the closed form.
        """
        entries = np.zeros((3, 3), dtype=complex)
        accumulated = np.eye(3)
        start = 0.0

        for segment in sequence.segments:
            duration = segment.duration
            if duration > 0:
                periods = max(1.0, segment.omega0 * duration / (2 * math.pi))
                nodes = int(self.QUADRATURE_NODES_PER_PERIOD * periods) | 1
                s = np.linspace(0.0, duration, nodes)
                p, q, k = _segment_frame(segment.phi)
                angle = segment.omega0 * s
                frames = (
                    p[None] + np.cos(angle)[:, None, None] * q + np.sin(angle)[:, None, None] * k
                ) @ accumulated
                integrand = np.exp(1j * omega * (start + s))[:, None, None] * frames
                entries += -1j * omega * simpson(integrand, x=s, axis=0)

            accumulated = segment_rotation(segment, duration) @ accumulated
            start += duration

        return entries

    # ---------------------------------------------------------------- filter functions

    def filter_fn(self, sequence: PulseSequence, grid) -> FilterFunction:
        """
        z-noise filter function F_z(w) = sum_j |R_zj(w)|^2.

        Args:
            sequence: Pulse sequence
            grid: Sorted positive angular frequencies

        Returns:
            FilterFunction on the grid
        """
        grid = np.atleast_1d(np.asarray(grid, dtype=float))
        if np.any(grid <= 0):
            raise ValidationError("Filter grid must be strictly positive", field="grid")
        matrix = self.control_matrix(sequence, grid)
        values = np.sum(np.abs(matrix.entries[:, 2, :]) ** 2, axis=-1)
        return FilterFunction(grid=grid, values=values)

    @staticmethod
    def collinear_filter_analytic(sequence: PulseSequence, grid) -> np.ndarray:
        """
        Closed-form F_z(w)/w^2 for segments about +-n of one in-plane axis.

        With Theta(t) the signed rotation angle accumulated about n,
        F_z/w^2 = (|I+|^2 + |I-|^2)/2 and I+- = int exp(i w t +- i Theta(t)) dt.

        Raises:
            ValidationError: If the segment axes are not collinear
        """
        grid = np.atleast_1d(np.asarray(grid, dtype=float))
        phi_ref = sequence.segments[0].phi

        i_plus = np.zeros(len(grid), dtype=complex)
        i_minus = np.zeros(len(grid), dtype=complex)
        theta_acc = 0.0
        start = 0.0
        for segment in sequence.segments:
            alignment = math.cos(segment.phi - phi_ref)
            if not math.isclose(abs(alignment), 1.0, abs_tol=1e-12):
                raise ValidationError("Segment axes are not collinear", field="segments")
            sign = 1.0 if alignment > 0 else -1.0
            rate = sign * segment.omega0
            phase = np.exp(1j * grid * start)
            i_plus += np.exp(1j * theta_acc) * phase * _window_integral(grid + rate, segment.duration)
            i_minus += np.exp(-1j * theta_acc) * phase * _window_integral(grid - rate, segment.duration)
            theta_acc += sign * segment.theta
            start += segment.duration

        return (np.abs(i_plus) ** 2 + np.abs(i_minus) ** 2) / 2

    def corpse_filter_analytic(
        self, phi: float, theta: float, grid, omega0: float = 1.0
    ) -> np.ndarray:
        """Closed-form F_z(w)/w^2 of the CORPSE version of R(phi, theta)."""
        sequence = self.pulses.corpse_sequence(phi, theta, omega0)
        return self.collinear_filter_analytic(sequence, grid)

    # ---------------------------------------------------------------- fidelity

    @staticmethod
    def prefactor(model: SpectralModel, convention: FilterConventionEnum) -> float:
        """Weight in front of int S(w) F_z(w)/w^2 dw."""
        if convention is FilterConventionEnum.TIME_DOMAIN:
            return 1.0 / (8.0 * model.kappa)
        return 1.0 / (2.0 * math.pi)

    @classmethod
    def noise_scale(
        cls, model: SpectralModel, convention: FilterConventionEnum, use_trace: bool = False
    ) -> float:
        """
        Amplitude factor that puts sampled noise on a convention's footing.

        To leading order, noise drawn from the model gives 1 - F_trace equal to
        int S F_z/w^2 dw / (8 kappa), and an average gate infidelity 4/3 times
        larger. Samples multiplied by this factor give a Monte-Carlo infidelity,
        in the chosen measure, equal to fidelity_from_spectrum under convention.

        Args:
            model: Noise spectrum
            convention: Prefactor convention to match
            use_trace: Match the trace fidelity instead of the average gate fidelity

        Returns:
            sqrt(prefactor / time-domain weight of the measure)
        """
        weight = 1.0 / (8.0 * model.kappa) if use_trace else 1.0 / (6.0 * model.kappa)
        return math.sqrt(cls.prefactor(model, convention) / weight)

    def _weighted_integral(
        self, sequence: PulseSequence, model: SpectralModel, points_per_decade: int
    ) -> float:
        decades = math.log10(model.omega_uv / model.omega_ir)
        n = max(3, math.ceil(decades * points_per_decade) + 1)
        log_grid = np.linspace(math.log(model.omega_ir), math.log(model.omega_uv), n)
        omega = np.exp(log_grid)
        # dw = w d(ln w)
        integrand = model.psd(omega) * self.filter_fn(sequence, omega).over_omega2 * omega
        return float(simpson(integrand, x=log_grid))

    def fidelity_from_spectrum(
        self,
        sequence: PulseSequence,
        model: SpectralModel,
        convention: FilterConventionEnum = FilterConventionEnum.ONE_SIDED,
        points_per_decade: int = 200,
        tolerance: float = 1e-6,
        max_refinements: int = 4,
    ) -> float:
        """
        First-order fidelity 1 - c int_{w_ir}^{w_uv} S(w) F_z(w)/w^2 dw.

        The integral is taken in ln w and the grid density doubled until the
        fidelity changes by less than tolerance.

        Args:
            sequence: Pulse sequence
            model: Noise spectrum
            convention: ONE_SIDED (c = 1/2pi) or TIME_DOMAIN (c = 1/(8 kappa))
            points_per_decade: Initial grid density
            tolerance: Absolute convergence threshold on the fidelity
            max_refinements: Maximum number of doublings

        Returns:
            Fidelity

        Raises:
            ConvergenceError: If the grid refinement does not converge
        """
        if model.amplitude_a == 0.0:
            return 1.0

        weight = self.prefactor(model, convention)
        previous = weight * self._weighted_integral(sequence, model, points_per_decade)
        change = math.inf
        density = points_per_decade

        for _ in range(max_refinements):
            density *= 2
            current = weight * self._weighted_integral(sequence, model, density)
            integration_refinements_total.inc()
            change = abs(current - previous)
            previous = current
            if change < tolerance:
                logger.debug(
                    f"Spectral integral converged at {density} pts/decade (change {change:.2e})"
                )
                return 1.0 - current

        raise ConvergenceError("spectral fidelity integral", change, tolerance)

    def fig4_table(
        self,
        omega0: float,
        model: SpectralModel,
        convention: FilterConventionEnum = FilterConventionEnum.ONE_SIDED,
        points_per_decade: int = 200,
        tolerance: float = 1e-6,
        max_refinements: int = 4,
        threads: int = 1,
    ) -> Dict[str, Dict[str, float]]:
        """
        Fidelities of the Clifford catalog (4 gates x 4 families).

        Args:
            omega0: Rabi frequency (rad/ns)
            model: Noise spectrum
            convention: Fidelity prefactor convention
            points_per_decade: Initial grid density
            tolerance: Convergence threshold
            max_refinements: Maximum grid doublings
            threads: Worker threads for the 16 independent integrals

        Returns:
            Nested dict gate -> family value -> fidelity
        """
        catalog = self.pulses.clifford_catalog(omega0)
        jobs: List[Tuple[str, GateFamilyEnum, PulseSequence]] = [
            (gate, family, catalog[gate][family]) for gate in catalog for family in FAMILIES
        ]

        def run(job: Tuple[str, GateFamilyEnum, PulseSequence]) -> float:
            return self.fidelity_from_spectrum(
                job[2], model, convention, points_per_decade, tolerance, max_refinements
            )

        logger.info(f"Computing {len(jobs)} spectral fidelities with {threads} thread(s)")
        with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
            values = list(executor.map(run, jobs))

        table: Dict[str, Dict[str, float]] = {gate: {} for gate in catalog}
        for (gate, family, _), value in zip(jobs, values):
            table[gate][family.value] = value
            logger.info(f"{gate:>10s} {family.value:<11s} F = {value:.5f}")
        return table

    def export_grid(
        self, omega0: float, points: int, lower: float = 1e-3, upper: float = 1e2
    ) -> np.ndarray:
        """Log grid in rad/ns spanning [lower, upper] * omega0."""
        return omega0 * np.geomspace(lower, upper, points)

    def filter_curves(
        self, sequences: Dict[str, PulseSequence], grid: np.ndarray
    ) -> Dict[str, np.ndarray]:
        """F_z/w^2 of several sequences on one grid."""
        return {name: self.filter_fn(seq, grid).over_omega2 for name, seq in sequences.items()}


def get_filter_service() -> FilterService:
    """Get filter service instance."""
    return FilterService()
