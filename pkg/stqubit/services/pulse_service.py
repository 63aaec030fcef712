"""
Pulse-sequence service.

Builds piecewise-constant control sequences for the naive, CORPSE, cyclic
geometric and non-cyclic geometric gate families, their closed-form
unitaries and the quasi-static fidelity expansions.

Conventions: a segment (phi, theta) is the rotation
    R(phi, theta) = exp[-i theta/2 (cos phi X + sin phi Y)],
segments are listed in time order and multiply right to left.
"""

import logging
import math
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from stqubit.schemas import PulseSegment, PulseSequence
from stqubit.schemas.enums import GateFamilyEnum
from stqubit.utils.error_handlers import (
    NonPositiveAreaError,
    UnknownFamilyError,
    ValidationError,
)
from stqubit.utils.validators import validate_theta_range

logger = logging.getLogger(__name__)

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)

# In-plane axis -> drive phase
AXIS_PHASE = {"x": 0.0, "y": math.pi / 2, "-x": math.pi, "-y": -math.pi / 2}

Axis = Tuple[float, float, float]


def su2_exponential(h: np.ndarray, t: Union[float, np.ndarray]) -> np.ndarray:
    """
    exp(-i t h.sigma) for real 3-vectors h, broadcasting over leading axes.

    Args:
        h: Array (..., 3) of field components
        t: Duration, scalar or broadcastable to h[..., 0]

    Returns:
        Array (..., 2, 2) of unitaries
    """
    h = np.asarray(h, dtype=float)
    norm = np.linalg.norm(h, axis=-1)
    angle = norm * t
    safe = np.where(norm > 0, norm, 1.0)
    # sin(|h| t)/|h| -> t as |h| -> 0
    sinc = np.where(norm > 0, np.sin(angle) / safe, t * np.ones_like(norm))
    cos = np.cos(angle)

    out = np.empty(h.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0] = cos - 1j * sinc * h[..., 2]
    out[..., 1, 1] = cos + 1j * sinc * h[..., 2]
    out[..., 0, 1] = -1j * sinc * (h[..., 0] - 1j * h[..., 1])
    out[..., 1, 0] = -1j * sinc * (h[..., 0] + 1j * h[..., 1])
    return out


def rotation(axis: Sequence[float], angle: float) -> np.ndarray:
    """Target rotation exp(-i angle/2 n.sigma) about a (not necessarily unit) axis."""
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    return su2_exponential(n / 2.0, angle)


def rotation_axis_angle(unitary: np.ndarray) -> Tuple[Axis, float]:
    """
    Axis and angle of a 2x2 unitary, ignoring global phase.

    The angle is reported in [0, pi] with the axis sign chosen to match.
    """
    det = np.linalg.det(unitary)
    su = unitary / np.sqrt(det)
    if np.real(np.trace(su)) < 0:
        su = -su
    cos_half = float(np.clip(np.real(np.trace(su)) / 2, -1.0, 1.0))
    vec = np.array([np.real(1j * np.trace(su @ p) / 2) for p in PAULI])
    sin_half = float(np.linalg.norm(vec))
    angle = 2 * math.atan2(sin_half, cos_half)
    if sin_half < 1e-15:
        return (0.0, 0.0, 1.0), 0.0
    axis = vec / sin_half
    return (float(axis[0]), float(axis[1]), float(axis[2])), angle


def phase_aligned_distance(unitary: np.ndarray, target: np.ndarray) -> float:
    """Frobenius distance after aligning global phase on the largest target entry."""
    idx = np.unravel_index(np.argmax(np.abs(target)), target.shape)
    if abs(unitary[idx]) == 0:
        return float(np.linalg.norm(unitary - target))
    phase = target[idx] / unitary[idx]
    phase /= abs(phase)
    return float(np.linalg.norm(unitary * phase - target))


def trace_fidelity(unitary: np.ndarray, target: np.ndarray) -> float:
    """|Tr(U_t^dag U)| / d."""
    d = target.shape[0]
    return float(abs(np.trace(target.conj().T @ unitary)) / d)


def average_gate_fidelity(unitary: np.ndarray, target: np.ndarray) -> float:
    """
    Average gate fidelity of a (possibly leaky) block map against a unitary.

    F = (Tr(M M^dag) + |Tr M|^2) / (d (d + 1)),  M = U_t^dag U
    """
    d = target.shape[0]
    m = target.conj().T @ unitary
    return float((np.real(np.trace(m @ m.conj().T)) + abs(np.trace(m)) ** 2) / (d * (d + 1)))


class PulseService:
    """Service for building gate sequences and their unitaries."""

    EXPANSION_LIMIT = 0.3
    DEFAULT_CHI_FRACTION = 0.01

    # ---------------------------------------------------------------- unitaries

    @staticmethod
    def rotation_unitary(segment: PulseSegment, delta: float = 0.0) -> np.ndarray:
        """
        Propagator of one segment with a quasi-static sigma_z detuning.

        exp[-i (Omega0/2 (cos phi X + sin phi Y) + delta/2 Z) theta/Omega0]

        Args:
            segment: Pulse segment
            delta: Detuning offset (rad/ns)

        Returns:
            2x2 unitary
        """
        h = np.array(
            [
                segment.omega0 * math.cos(segment.phi) / 2,
                segment.omega0 * math.sin(segment.phi) / 2,
                delta / 2,
            ]
        )
        return su2_exponential(h, segment.duration)

    def sequence_unitary(self, sequence: PulseSequence, delta: float = 0.0) -> np.ndarray:
        """Time-ordered product of all segment propagators."""
        unitary = IDENTITY.copy()
        for segment in sequence.segments:
            unitary = self.rotation_unitary(segment, delta) @ unitary
        return unitary

    @staticmethod
    def target_unitary(sequence: PulseSequence) -> np.ndarray:
        """Ideal rotation a sequence is meant to implement."""
        return rotation(sequence.target_axis, sequence.target_angle)

    # ---------------------------------------------------------------- families

    def naive_sequence(
        self,
        steps: Iterable[Tuple[str, float]],
        target_axis: Axis,
        target_angle: float,
        omega0: float = 1.0,
    ) -> PulseSequence:
        """
        Direct rotations about in-plane axes, listed in time order.

        Args:
            steps: (axis, angle) pairs with axis in x, y, -x, -y
            target_axis: Rotation axis of the composite gate
            target_angle: Rotation angle of the composite gate
            omega0: Rabi frequency

        Returns:
            Naive PulseSequence
        """
        segments = []
        for axis, angle in steps:
            phi = AXIS_PHASE[axis]
            if angle < 0:
                phi, angle = phi + math.pi, -angle
            segments.append(PulseSegment(phi=phi, theta=angle, omega0=omega0))
        return PulseSequence(
            segments=segments,
            family=GateFamilyEnum.NAIVE,
            target_axis=target_axis,
            target_angle=target_angle,
        )

    @staticmethod
    def corpse_segments(phi: float, theta: float, omega0: float = 1.0) -> List[PulseSegment]:
        """Short CORPSE replacement of a single rotation R(phi, theta)."""
        theta = validate_theta_range(theta)
        if theta < 0:
            phi, theta = phi + math.pi, -theta
        k = math.asin(math.sin(theta / 2) / 2)
        outer = theta / 2 - k
        inner = 2 * math.pi - 2 * k
        return [
            PulseSegment(phi=phi, theta=outer, omega0=omega0),
            PulseSegment(phi=phi + math.pi, theta=inner, omega0=omega0),
            PulseSegment(phi=phi, theta=outer, omega0=omega0),
        ]

    def corpse_sequence(self, phi: float, theta: float, omega0: float = 1.0) -> PulseSequence:
        """
        CORPSE version of R(phi, theta), theta in (-2pi, 2pi).

        Returns:
            Three-segment PulseSequence
        """
        return PulseSequence(
            segments=self.corpse_segments(phi, theta, omega0),
            family=GateFamilyEnum.CORPSE,
            target_axis=(math.cos(phi), math.sin(phi), 0.0),
            target_angle=theta,
        )

    def corpse_of(self, sequence: PulseSequence) -> PulseSequence:
        """Replace every segment of a naive sequence by its CORPSE triple."""
        segments = []
        for seg in sequence.segments:
            segments.extend(self.corpse_segments(seg.phi, seg.theta, seg.omega0))
        return PulseSequence(
            segments=segments,
            family=GateFamilyEnum.CORPSE,
            target_axis=sequence.target_axis,
            target_angle=sequence.target_angle,
        )

    @staticmethod
    def geometric_sequence(
        theta_p: float, phi_p: float, gamma_p: float, omega0: float = 1.0
    ) -> PulseSequence:
        """
        Cyclic geometric gate R_geo(theta', phi', gamma').

        The dressed state is carried around a closed loop on the Bloch sphere,
        so the total pulse area is always 2pi. The gate is the rotation by
        -2 gamma' about n = (sin theta' cos phi', sin theta' sin phi', cos theta').

        Args:
            theta_p: Polar angle of the rotation axis, in [0, pi]
            phi_p: Azimuth of the rotation axis
            gamma_p: Geometric phase; the rotation angle is -2 gamma_p
            omega0: Rabi frequency

        Returns:
            Three-segment PulseSequence with areas (theta', pi, pi - theta')

        Raises:
            ValidationError: If theta_p is outside [0, pi]
        """
        if not 0.0 <= theta_p <= math.pi:
            raise ValidationError(f"theta' must lie in [0, pi], got {theta_p}", field="theta_p")

        base = phi_p - math.pi / 2
        segments = [
            PulseSegment(phi=base, theta=theta_p, omega0=omega0),
            PulseSegment(phi=base + gamma_p, theta=math.pi, omega0=omega0),
            PulseSegment(phi=base, theta=math.pi - theta_p, omega0=omega0),
        ]
        axis = (
            math.sin(theta_p) * math.cos(phi_p),
            math.sin(theta_p) * math.sin(phi_p),
            math.cos(theta_p),
        )
        return PulseSequence(
            segments=segments,
            family=GateFamilyEnum.GEOMETRIC,
            target_axis=axis,
            target_angle=-2.0 * gamma_p,
        )

    @staticmethod
    def non_cyclic_unitary(chi0: float, phi0: float, phi1: float, beta0: float) -> np.ndarray:
        """Closed form U_n(chi0, phi0, phi1, beta0) of the two-piece gate."""
        c1, s1 = math.cos(chi0 / 2), math.sin(chi0 / 2)
        c2, s2 = math.cos(beta0 / 2), math.sin(beta0 / 2)
        return np.array(
            [
                [
                    c1 * c2 - s1 * s2 * np.exp(-1j * phi1),
                    -c2 * s1 * np.exp(-1j * phi0) - c1 * s2 * np.exp(-1j * (phi0 + phi1)),
                ],
                [
                    c1 * s2 * np.exp(1j * (phi0 + phi1)) + c2 * s1 * np.exp(1j * phi0),
                    c1 * c2 - s1 * s2 * np.exp(1j * phi1),
                ],
            ]
        )

    def non_cyclic_sequence(
        self,
        chi0: float,
        phi0: float,
        phi1: float,
        beta0: float,
        omega0: float = 1.0,
        target: Optional[Tuple[Axis, float]] = None,
    ) -> PulseSequence:
        """
        Non-cyclic geometric gate built from two constant pieces.

        Args:
            chi0: Area of the first piece, > 0
            phi0: Phase parameter of the first piece
            phi1: Phase step between the pieces
            beta0: Area of the second piece, > 0
            omega0: Rabi frequency
            target: Optional (axis, angle); derived from the closed form otherwise

        Returns:
            Two-segment PulseSequence

        Raises:
            NonPositiveAreaError: If chi0 <= 0 or beta0 <= 0
        """
        if chi0 <= 0:
            raise NonPositiveAreaError("chi0", chi0)
        if beta0 <= 0:
            raise NonPositiveAreaError("beta0", beta0)

        if target is None:
            target = rotation_axis_angle(self.non_cyclic_unitary(chi0, phi0, phi1, beta0))

        return PulseSequence(
            segments=[
                PulseSegment(phi=phi0 + math.pi / 2, theta=chi0, omega0=omega0),
                PulseSegment(phi=phi0 + phi1 + math.pi / 2, theta=beta0, omega0=omega0),
            ],
            family=GateFamilyEnum.NON_CYCLIC,
            target_axis=target[0],
            target_angle=target[1],
        )

    @classmethod
    def default_non_cyclic_angles(cls, gamma: float) -> Tuple[float, float]:
        """(chi0, beta0) = (0.01 gamma, 1.01 gamma); improves on naive for pi < |gamma| < 2pi."""
        return cls.DEFAULT_CHI_FRACTION * gamma, (1 + cls.DEFAULT_CHI_FRACTION) * gamma

    @staticmethod
    def optimal_non_cyclic_angles(gamma: float) -> Tuple[float, float]:
        """(chi0, beta0) at least as robust as the naive pulse for |gamma| < pi."""
        return 2 * math.pi - gamma / 2, 2 * math.pi + gamma / 2

    # ---------------------------------------------------------------- catalog

    def clifford_catalog(self, omega0: float = 1.0) -> Dict[str, Dict[GateFamilyEnum, PulseSequence]]:
        """
        Representative single-qubit Clifford gates in all four families.

        Returns:
            Map gate name -> family -> PulseSequence
        """
        pi = math.pi
        gates = {
            "x_pi2": {
                "target": ((1.0, 0.0, 0.0), pi / 2),
                "naive": [("x", pi / 2)],
                "geometric": (pi / 2, 0.0, -pi / 4),
                "non_cyclic": (pi / 8, pi / 2, pi, 5 * pi / 8),
            },
            "z_pi2": {
                "target": ((0.0, 0.0, 1.0), pi / 2),
                "naive": [("-x", pi / 2), ("y", pi / 2), ("x", pi / 2)],
                "geometric": (0.0, 0.0, -pi / 4),
                "non_cyclic": (pi, 0.0, pi / 4, pi),
            },
            "xy-z_4pi3": {
                "target": ((1.0, 1.0, -1.0), 4 * pi / 3),
                "naive": [("-y", pi / 2), ("-x", pi / 2)],
                "geometric": (pi - math.atan(math.sqrt(2)), pi / 4, -2 * pi / 3),
                "non_cyclic": (3 * pi / 2, 0.0, pi / 2, pi / 2),
            },
            "xz_pi": {
                "target": ((1.0, 0.0, 1.0), pi),
                "naive": [("x", pi), ("-y", pi / 2)],
                "geometric": (pi / 4, 0.0, -pi / 2),
                "non_cyclic": (pi / 2, 0.0, -pi / 2, pi),
            },
        }

        catalog: Dict[str, Dict[GateFamilyEnum, PulseSequence]] = {}
        for name, spec in gates.items():
            axis, angle = spec["target"]
            norm = math.sqrt(sum(a * a for a in axis))
            axis = tuple(a / norm for a in axis)

            naive = self.naive_sequence(spec["naive"], axis, angle, omega0)
            geometric = self.geometric_sequence(*spec["geometric"], omega0=omega0)
            non_cyclic = self.non_cyclic_sequence(
                *spec["non_cyclic"], omega0=omega0, target=(axis, angle)
            )
            catalog[name] = {
                GateFamilyEnum.NAIVE: naive,
                GateFamilyEnum.CORPSE: self.corpse_of(naive),
                GateFamilyEnum.GEOMETRIC: geometric.model_copy(
                    update={"target_axis": axis, "target_angle": angle}
                ),
                GateFamilyEnum.NON_CYCLIC: non_cyclic,
            }

        logger.debug(f"Built catalog with {len(catalog)} gates x 4 families")
        return catalog

    # ---------------------------------------------------------------- expansions

    def quasistatic_fidelity(
        self,
        family: Union[GateFamilyEnum, str],
        gamma: float,
        delta_over_omega0: float,
        chi0: Optional[float] = None,
        beta0: Optional[float] = None,
    ) -> float:
        """
        Second/fourth-order trace fidelity of a rotation about x by gamma.

        Args:
            family: Gate family
            gamma: Rotation angle
            delta_over_omega0: Quasi-static detuning in units of Omega0
            chi0: Non-cyclic first area (default 0.01 gamma)
            beta0: Non-cyclic second area (default 1.01 gamma)

        Returns:
            Fidelity in [0, 1]

        Raises:
            UnknownFamilyError: If family is not recognised
            ValidationError: If |delta/Omega0| exceeds the expansion regime
        """
        try:
            family = GateFamilyEnum(family)
        except ValueError:
            raise UnknownFamilyError(str(family))

        d = float(delta_over_omega0)
        if abs(d) > self.EXPANSION_LIMIT:
            raise ValidationError(
                f"|delta/Omega0| = {abs(d)} outside expansion regime (<= {self.EXPANSION_LIMIT})",
                field="delta_over_omega0",
            )
        d2 = d * d

        if family is GateFamilyEnum.NAIVE:
            value = (4 - d2 + d2 * math.cos(gamma)) / 4
        elif family is GateFamilyEnum.NON_CYCLIC:
            default_chi, default_beta = self.default_non_cyclic_angles(gamma)
            chi0 = default_chi if chi0 is None else chi0
            beta0 = default_beta if beta0 is None else beta0
            value = 1 + d2 * (-3 + 2 * math.cos(beta0) - math.cos(gamma) + 2 * math.cos(chi0)) / 4
        elif family is GateFamilyEnum.GEOMETRIC:
            value = 1 - 3 * d2 / 4 + d2 * math.cos(gamma / 2) - d2 * math.cos(gamma) / 4
        else:
            value = 1 - d2 * d2 * self.corpse_coefficient(gamma) / 32

        return float(min(max(value, 0.0), 1.0))

    @staticmethod
    def corpse_coefficient(gamma: float) -> float:
        """Fourth-order infidelity coefficient c(gamma) of short CORPSE, 1 - F = c d^4 / 32."""
        return (
            7
            + (gamma - 2 * math.pi) ** 2
            - 6 * math.cos(gamma)
            - math.cos(2 * gamma)
            - 2
            * math.sin(gamma / 2)
            * (
                (4 * math.pi - 2 * gamma) * math.cos(gamma / 2)
                + math.sqrt(2) * math.sqrt(7 + math.cos(gamma)) * (gamma - 2 * math.pi + math.sin(gamma))
            )
        )


def get_pulse_service() -> PulseService:
    """Get pulse service instance."""
    return PulseService()
