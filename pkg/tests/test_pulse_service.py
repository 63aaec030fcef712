"""
Tests for the pulse-sequence service.
"""

import math

import numpy as np
import pytest
from scipy.linalg import expm

from stqubit.schemas import PulseSegment, PulseSequence
from stqubit.schemas.enums import GateFamilyEnum
from stqubit.services.pulse_service import (
    IDENTITY,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    average_gate_fidelity,
    phase_aligned_distance,
    rotation,
    rotation_axis_angle,
    su2_exponential,
    trace_fidelity,
)
from stqubit.utils.error_handlers import (
    NonPositiveAreaError,
    UnknownFamilyError,
    ValidationError,
)


def _x_rotation(gamma):
    return rotation((1.0, 0.0, 0.0), gamma)


@pytest.mark.unit
class TestSU2Helpers:
    """Test closed-form SU(2) helpers."""

    def test_exponential_matches_expm(self, rng):
        """Test closed form against a dense matrix exponential."""
        for _ in range(5):
            h = rng.normal(size=3)
            t = rng.uniform(0.1, 3.0)
            dense = expm(-1j * t * (h[0] * SIGMA_X + h[1] * SIGMA_Y + h[2] * SIGMA_Z))
            assert np.allclose(su2_exponential(h, t), dense, atol=1e-12)

    def test_exponential_zero_field(self):
        """Test zero field gives the identity."""
        assert np.allclose(su2_exponential(np.zeros(3), 2.0), IDENTITY)

    def test_exponential_broadcasts(self, rng):
        """Test a stack of fields gives a stack of unitaries."""
        h = rng.normal(size=(4, 3))
        out = su2_exponential(h, 0.7)

        assert out.shape == (4, 2, 2)
        assert np.allclose(out[2], su2_exponential(h[2], 0.7))

    def test_pi_rotation(self):
        """Test R_x(pi) = -iX."""
        assert np.allclose(_x_rotation(math.pi), -1j * SIGMA_X, atol=1e-12)

    def test_axis_angle_roundtrip(self, rng):
        """Test axis and angle are recovered from a unitary."""
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        angle = 2.1

        found_axis, found_angle = rotation_axis_angle(np.exp(0.4j) * rotation(axis, angle))

        assert found_angle == pytest.approx(angle)
        assert np.allclose(found_axis, axis, atol=1e-10)

    def test_fidelity_measures(self):
        """Test trace and average gate fidelity of identical unitaries."""
        u = rotation((0.0, 1.0, 1.0), 1.3)

        assert trace_fidelity(u * 1j, u) == pytest.approx(1.0)
        assert average_gate_fidelity(u, u) == pytest.approx(1.0)
        assert trace_fidelity(SIGMA_X, IDENTITY) == pytest.approx(0.0)

    def test_phase_aligned_distance(self):
        """Test global phase is ignored."""
        u = rotation((1.0, 0.0, 0.0), 0.8)
        assert phase_aligned_distance(np.exp(1.1j) * u, u) < 1e-12


@pytest.mark.unit
class TestSequences:
    """Test sequence construction and unitaries."""

    def test_catalog_hits_targets(self, pulse_service):
        """Test every catalog entry implements its target up to global phase."""
        catalog = pulse_service.clifford_catalog()

        assert set(catalog) == {"x_pi2", "z_pi2", "xy-z_4pi3", "xz_pi"}
        for name, families in catalog.items():
            assert set(families) == set(GateFamilyEnum)
            for family, sequence in families.items():
                unitary = pulse_service.sequence_unitary(sequence)
                target = pulse_service.target_unitary(sequence)
                assert phase_aligned_distance(unitary, target) < 1e-10, (name, family)

    def test_catalog_omega0(self, pulse_service):
        """Test the Rabi frequency sets durations but not the unitary."""
        slow = pulse_service.clifford_catalog(omega0=0.5)["x_pi2"][GateFamilyEnum.NAIVE]

        assert slow.total_duration == pytest.approx(math.pi)
        assert np.allclose(
            pulse_service.sequence_unitary(slow), _x_rotation(math.pi / 2), atol=1e-12
        )

    def test_segment_order(self, pulse_service):
        """Test the first listed segment is applied first."""
        seq = pulse_service.naive_sequence(
            [("x", math.pi / 2), ("y", math.pi / 2)], (0.0, 0.0, 1.0), 0.0
        )
        expected = rotation((0.0, 1.0, 0.0), math.pi / 2) @ _x_rotation(math.pi / 2)

        assert np.allclose(pulse_service.sequence_unitary(seq), expected, atol=1e-12)

    def test_negative_naive_angle(self, pulse_service):
        """Test negative angles flip the drive phase."""
        seq = pulse_service.naive_sequence([("x", -math.pi / 2)], (1.0, 0.0, 0.0), -math.pi / 2)

        assert seq.segments[0].theta == pytest.approx(math.pi / 2)
        assert seq.segments[0].phi == pytest.approx(math.pi)

    def test_corpse_areas(self, pulse_service):
        """Test CORPSE areas for a pi/2 rotation."""
        seq = pulse_service.corpse_sequence(0.0, math.pi / 2)
        k = math.asin(math.sin(math.pi / 4) / 2)
        areas = [seg.theta for seg in seq.segments]

        assert areas == pytest.approx([math.pi / 4 - k, 2 * math.pi - 2 * k, math.pi / 4 - k])
        assert seq.segments[1].phi == pytest.approx(math.pi)
        assert phase_aligned_distance(
            pulse_service.sequence_unitary(seq), _x_rotation(math.pi / 2)
        ) < 1e-10

    def test_corpse_angle_range(self, pulse_service):
        """Test rotation angles beyond 2pi are rejected."""
        with pytest.raises(ValidationError):
            pulse_service.corpse_sequence(0.0, 7.0)

    def test_geometric_closed_path(self, pulse_service):
        """Test geometric gates have area 2pi and rotate by -2 gamma'."""
        seq = pulse_service.geometric_sequence(0.7, 0.3, 0.9)

        assert seq.total_area == pytest.approx(2 * math.pi)
        assert seq.target_angle == pytest.approx(-1.8)
        assert phase_aligned_distance(
            pulse_service.sequence_unitary(seq), pulse_service.target_unitary(seq)
        ) < 1e-10

    def test_geometric_theta_range(self, pulse_service):
        """Test polar angle outside [0, pi] is rejected."""
        with pytest.raises(ValidationError):
            pulse_service.geometric_sequence(4.0, 0.0, 0.5)

    def test_non_cyclic_closed_form(self, pulse_service, rng):
        """Test the closed form equals the segment product."""
        for _ in range(5):
            chi0, beta0 = rng.uniform(0.1, 6.0, size=2)
            phi0, phi1 = rng.uniform(-math.pi, math.pi, size=2)
            seq = pulse_service.non_cyclic_sequence(chi0, phi0, phi1, beta0)

            closed = pulse_service.non_cyclic_unitary(chi0, phi0, phi1, beta0)
            assert phase_aligned_distance(pulse_service.sequence_unitary(seq), closed) < 1e-10

    def test_non_cyclic_limit(self, pulse_service):
        """Test chi0 -> 0 reduces to a single rotation."""
        phi0, phi1, beta0 = 0.4, 1.1, 2.3
        closed = pulse_service.non_cyclic_unitary(0.0, phi0, phi1, beta0)
        single = pulse_service.rotation_unitary(
            PulseSegment(phi=phi0 + phi1 + math.pi / 2, theta=beta0)
        )

        assert np.allclose(closed, single, atol=1e-12)

    def test_non_cyclic_areas_positive(self, pulse_service):
        """Test non-positive areas are rejected."""
        with pytest.raises(NonPositiveAreaError):
            pulse_service.non_cyclic_sequence(0.0, 0.0, 0.0, 1.0)
        with pytest.raises(NonPositiveAreaError):
            pulse_service.non_cyclic_sequence(1.0, 0.0, 0.0, -1.0)

    def test_with_omega0(self, pulse_service):
        """Test rescaling keeps areas."""
        seq = pulse_service.clifford_catalog()["xz_pi"][GateFamilyEnum.CORPSE]
        fast = seq.with_omega0(4.0)

        assert fast.total_area == pytest.approx(seq.total_area)
        assert fast.total_duration == pytest.approx(seq.total_duration / 4.0)

    def test_json_roundtrip_unitary(self, pulse_service):
        """Test a serialized sequence gives the same unitary."""
        seq = pulse_service.clifford_catalog()["z_pi2"][GateFamilyEnum.GEOMETRIC]
        restored = PulseSequence.from_json(seq.to_json())

        assert np.allclose(
            pulse_service.sequence_unitary(restored), pulse_service.sequence_unitary(seq)
        )


@pytest.mark.unit
class TestQuasiStaticExpansions:
    """Test quasi-static fidelity expansions against exact propagation."""

    D = 0.02

    def _exact(self, pulse_service, sequence, d):
        unitary = pulse_service.sequence_unitary(sequence, delta=d)
        return trace_fidelity(unitary, pulse_service.target_unitary(sequence))

    @pytest.mark.parametrize("gamma", [math.pi / 2, math.pi, 3 * math.pi / 2])
    def test_naive(self, pulse_service, gamma):
        """Test naive expansion."""
        seq = pulse_service.naive_sequence([("x", gamma)], (1.0, 0.0, 0.0), gamma)

        exact = 1 - self._exact(pulse_service, seq, self.D)
        approx = 1 - pulse_service.quasistatic_fidelity("naive", gamma, self.D)
        assert exact == pytest.approx(approx, rel=0.02)

    @pytest.mark.parametrize("gamma", [math.pi / 2, math.pi])
    def test_geometric(self, pulse_service, gamma):
        """Test geometric expansion for an x rotation."""
        seq = pulse_service.geometric_sequence(math.pi / 2, 0.0, -gamma / 2)

        exact = 1 - self._exact(pulse_service, seq, self.D)
        approx = 1 - pulse_service.quasistatic_fidelity(GateFamilyEnum.GEOMETRIC, gamma, self.D)
        assert exact == pytest.approx(approx, rel=0.02)

    @pytest.mark.parametrize("optimal", [False, True])
    def test_non_cyclic(self, pulse_service, optimal):
        """Test non-cyclic expansion for default and optimal areas."""
        gamma = math.pi / 2
        if optimal:
            chi0, beta0 = pulse_service.optimal_non_cyclic_angles(gamma)
        else:
            chi0, beta0 = pulse_service.default_non_cyclic_angles(gamma)
        seq = pulse_service.non_cyclic_sequence(
            chi0, math.pi / 2, math.pi, beta0, target=((1.0, 0.0, 0.0), gamma)
        )

        exact = 1 - self._exact(pulse_service, seq, self.D)
        approx = 1 - pulse_service.quasistatic_fidelity(
            "non_cyclic", gamma, self.D, chi0=chi0, beta0=beta0
        )
        assert exact == pytest.approx(approx, rel=0.02)

    def test_corpse_fourth_order(self, pulse_service):
        """Test CORPSE expansion is fourth order."""
        gamma, d = math.pi / 2, 0.05
        seq = pulse_service.corpse_sequence(0.0, gamma)

        exact = 1 - self._exact(pulse_service, seq, d)
        approx = 1 - pulse_service.quasistatic_fidelity("corpse", gamma, d)
        assert exact == pytest.approx(approx, rel=0.1)

    def test_corpse_coefficient_at_zero(self, pulse_service):
        """Test c(0) = 4 pi^2."""
        assert pulse_service.corpse_coefficient(0.0) == pytest.approx(4 * math.pi**2)

    def test_non_cyclic_default_regime(self, pulse_service):
        """Test default areas beat naive only for pi < gamma < 2pi."""
        d = 0.05
        for gamma, better in ((math.pi / 2, False), (3 * math.pi / 2, True)):
            naive = pulse_service.quasistatic_fidelity("naive", gamma, d)
            non = pulse_service.quasistatic_fidelity("non_cyclic", gamma, d)
            assert (non > naive) is better

    def test_non_cyclic_optimal_regime(self, pulse_service):
        """Test optimal areas are at least as robust as naive below pi."""
        d = 0.05
        for gamma in (0.3, math.pi / 2, 2.5):
            chi0, beta0 = pulse_service.optimal_non_cyclic_angles(gamma)
            non = pulse_service.quasistatic_fidelity("non_cyclic", gamma, d, chi0, beta0)
            assert non >= pulse_service.quasistatic_fidelity("naive", gamma, d) - 1e-15

    def test_zero_detuning(self, pulse_service):
        """Test all expansions give 1 without detuning."""
        for family in GateFamilyEnum:
            assert pulse_service.quasistatic_fidelity(family, 1.0, 0.0) == pytest.approx(1.0)

    def test_unknown_family(self, pulse_service):
        """Test unknown family names are rejected."""
        with pytest.raises(UnknownFamilyError):
            pulse_service.quasistatic_fidelity("bb1", 1.0, 0.01)

    def test_expansion_regime(self, pulse_service):
        """Test large detuning is rejected."""
        with pytest.raises(ValidationError):
            pulse_service.quasistatic_fidelity("naive", 1.0, 0.5)
