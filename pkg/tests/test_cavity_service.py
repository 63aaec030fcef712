"""
Tests for the resonator-mediated two-qubit gate service.
"""

import logging
import math

import numpy as np
import pytest

from stqubit.schemas import CavityConfig, CavityConfigModel, NoiseDraw
from stqubit.schemas.enums import FidelityMetricEnum, QubitLevelsEnum
from stqubit.services.cavity_service import COMPUTATIONAL_LABELS
from stqubit.utils.error_handlers import PositivityViolationError, ValidationError
from stqubit.utils.units import ghz_to_rad_per_ns, rad_per_ns_to_ghz


def _config(**kwargs):
    g = ghz_to_rad_per_ns(0.1)
    params = {"g1": g, "g2": g}
    params.update(kwargs)
    return CavityConfig(**params)


@pytest.mark.unit
class TestEntangler:
    """Test the ideal entangling gate and its parameters."""

    def test_unitary_reflection(self, cavity_service, rng):
        """Test U_ent is a unitary, Hermitian involution."""
        for xi in rng.uniform(-math.pi, math.pi, size=4):
            u = cavity_service.entangler_unitary(xi)

            assert np.allclose(u @ u.conj().T, np.eye(4))
            assert np.allclose(u, u.conj().T)
            assert np.allclose(u @ u, np.eye(4))

    def test_symmetric_couplings_swap(self, cavity_service, tss_eigen):
        """Test equal couplings give xi = -pi/2, a swap with sign."""
        spec = cavity_service.entangler_spec(_config(), tss_eigen)
        u = cavity_service.entangler_unitary(spec.xi)

        assert spec.xi == pytest.approx(-math.pi / 2)
        assert spec.duration * spec.omega == pytest.approx(math.pi)
        assert u[1, 2].real == pytest.approx(-1.0)
        assert u[3, 3].real == pytest.approx(-1.0)

    def test_asymmetric_mixing_angle(self, cavity_service, tss_eigen):
        """Test tan(xi/2) = -Omega_2/Omega_1."""
        config = _config(g2=ghz_to_rad_per_ns(0.05))
        omega_1, omega_2 = cavity_service.couplings(config, tss_eigen)
        spec = cavity_service.entangler_spec(config, tss_eigen)

        assert math.tan(spec.xi / 2) == pytest.approx(-omega_2 / omega_1)
        assert spec.omega == pytest.approx(math.hypot(omega_1, omega_2))

    def test_uncoupled_rejected(self, cavity_service, tss_eigen):
        """Test vanishing couplings are rejected."""
        with pytest.raises(ValidationError):
            cavity_service.entangler_spec(_config(g1=0.0, g2=0.0), tss_eigen)

    def test_quality_factor(self, cavity_service):
        """Test Gamma_a = omega_r / Q."""
        assert cavity_service.gamma_a_from_quality_factor(10.0, 1e4) == pytest.approx(1e-3)
        with pytest.raises(ValidationError):
            cavity_service.gamma_a_from_quality_factor(10.0, 0.0)

    def test_rwa_margin(self, cavity_service, tss_eigen, tss_eigen_lt, caplog):
        """Test the dB < tau point violates the RWA margin and dB > tau does not."""
        assert cavity_service.rwa_margin(_config(), tss_eigen) > cavity_service.RWA_MARGIN

        with caplog.at_level(logging.WARNING):
            margin = cavity_service.rwa_margin(_config(), tss_eigen_lt)

        assert margin < cavity_service.RWA_MARGIN
        assert margin == pytest.approx(7.7, abs=0.5)
        assert "RWA margin" in caplog.text


@pytest.mark.unit
class TestHamiltonian:
    """Test the effective Hamiltonian."""

    def test_lambda_couplings(self, cavity_service, tss_eigen):
        """Test single-excitation couplings equal g |d_ge|, about 45 MHz."""
        config = _config()
        h = cavity_service.effective_hamiltonian(config, tss_eigen).full()
        gg1 = cavity_service._index(config, "gg1")
        ge0 = cavity_service._index(config, "ge0")
        eg0 = cavity_service._index(config, "eg0")

        assert h[gg1, ge0].real == pytest.approx(config.g2 * abs(tss_eigen.d_ge))
        assert h[gg1, eg0].real == pytest.approx(config.g1 * abs(tss_eigen.d_ge))
        assert h[ge0, eg0] == 0
        assert rad_per_ns_to_ghz(h[gg1, ge0].real) * 1e3 == pytest.approx(45.055, abs=0.1)

    def test_hermitian(self, cavity_service, tss_eigen_lt):
        """Test Hermiticity with noise and three levels."""
        config = _config(qubit_levels=QubitLevelsEnum.THREE)
        h = cavity_service.effective_hamiltonian(
            config, tss_eigen_lt, NoiseDraw(delta1=0.01, delta2=-0.02, delta_r=0.005)
        )

        assert h.isherm
        assert h.shape == (18, 18)

    def test_index_matches_basis(self, cavity_service):
        """Test flat indices agree with tensor-product kets."""
        config = _config(n_max=3)
        for label in ("gg0", "ge2", "eg1", "ee0"):
            ket = cavity_service.basis_state(config, label).full().ravel()
            assert abs(ket[cavity_service._index(config, label)]) == pytest.approx(1.0)

    def test_noise_operators(self, cavity_service, tss_eigen):
        """Test qubit detuning noise shifts only the excited levels."""
        config = _config()
        h0 = cavity_service.effective_hamiltonian(config, tss_eigen).full()
        h1 = cavity_service.effective_hamiltonian(
            config, tss_eigen, NoiseDraw(delta1=0.1)
        ).full()
        diff = np.real(np.diag(h1 - h0))

        assert diff[cavity_service._index(config, "eg0")] == pytest.approx(0.1)
        assert diff[cavity_service._index(config, "ge0")] == pytest.approx(0.0)

    def test_decoupled_qubit(self, cavity_service, tss_eigen):
        """Test g2 = 0 keeps qubit 2's excitation conserved."""
        config = _config(g2=0.0)
        h = cavity_service.effective_hamiltonian(config, tss_eigen)
        n2 = cavity_service.noise_operators(config)[1]

        assert np.allclose((h * n2 - n2 * h).full(), 0.0)


@pytest.mark.unit
class TestEvolution:
    """Test master-equation evolution and channels."""

    def test_lossless_transfer(self, cavity_service, tss_eigen):
        """Test |ge0> -> |eg0> completes with Gamma_a = 0."""
        pops = cavity_service.populations(_config(), tss_eigen, points=51)

        assert pops["p_eg0"][-1] == pytest.approx(1.0, abs=1e-6)
        assert pops["p_ge0"][0] == pytest.approx(1.0)
        assert np.allclose(pops["p_ge0"] + pops["p_eg0"] + pops["p_gg1"], 1.0, atol=1e-7)
        assert len(pops["t_ns"]) == 51

    def test_photon_decay(self, cavity_service):
        """Test an undriven photon decays at Gamma_a."""
        config = _config(gamma_a=0.1)
        hamiltonian = 0 * cavity_service.noise_operators(config)[2]
        rho0 = cavity_service.basis_state(config, "gg1")

        run = cavity_service.evolve_lindblad(config, hamiltonian, rho0, 10.0, 1.0)
        idx = cavity_service._index(config, "gg1")
        p_gg1 = np.array([np.real(rho[idx, idx]) for rho in run["states"]])

        assert np.allclose(p_gg1, np.exp(-0.1 * run["times"]), atol=1e-6)

    def test_positivity_check(self, cavity_service):
        """Test negative eigenvalues are reported."""
        with pytest.raises(PositivityViolationError):
            cavity_service._check_positive(np.diag([1.001, -1e-3]))

    def test_noise_free_channel_is_entangler(self, cavity_service, tss_eigen):
        """Test exp(L t) reproduces U_ent exactly without noise or loss."""
        config = _config()
        spec = cavity_service.entangler_spec(config, tss_eigen)
        base, terms = cavity_service.liouvillian_terms(config, tss_eigen)

        fidelity = cavity_service.realization_fidelity(config, base, terms, NoiseDraw(), spec)

        assert fidelity == pytest.approx(1.0, abs=1e-9)

    def test_channel_preserves_trace(self, cavity_service, tss_eigen):
        """Test lossy channels keep total probability."""
        config = _config(gamma_a=0.01)
        spec = cavity_service.entangler_spec(config, tss_eigen)
        base, terms = cavity_service.liouvillian_terms(config, tss_eigen)
        propagator = cavity_service.channel(base, terms, NoiseDraw(delta1=0.02), spec.duration)

        dim = 8
        rho0 = np.zeros((dim, dim), dtype=complex)
        idx = cavity_service._index(config, "ee0")
        rho0[idx, idx] = 1.0
        rho = (propagator @ rho0.reshape(-1, order="F")).reshape(dim, dim, order="F")

        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-9)

    def test_noise_draws(self, cavity_service):
        """Test correlated and resonator-noise switches and common random numbers."""
        plain = cavity_service.noise_draws(_config(), 0.1, 50, seed=3)
        doubled = cavity_service.noise_draws(_config(), 0.2, 50, seed=3)
        correlated = cavity_service.noise_draws(_config(correlated_noise=True), 0.1, 5, seed=3)
        resonator = cavity_service.noise_draws(_config(resonator_noise=True), 0.1, 5, seed=3)

        assert all(d.delta_r == 0.0 for d in plain)
        assert doubled[7].delta2 == pytest.approx(2 * plain[7].delta2)
        assert all(d.delta1 == d.delta2 for d in correlated)
        assert any(d.delta_r != 0.0 for d in resonator)


@pytest.mark.unit
class TestFidelitySweep:
    """Test entangler fidelity under quasi-static noise."""

    def test_sweep_properties(self, cavity_service, tss_eigen, tss_eigen_lt):
        """Test fidelity starts high, falls with noise and favours dB > tau."""
        config = CavityConfigModel().to_cavity_config()
        grid = [0.0, 0.05, 0.1]
        scale = cavity_service.effective_coupling(config, tss_eigen)

        strong = cavity_service.fidelity_sweep(
            config, tss_eigen, grid, 100, seed=1, coupling_scale=scale
        )
        weak = cavity_service.fidelity_sweep(
            config, tss_eigen_lt, grid, 100, seed=1, coupling_scale=scale
        )

        assert strong["mean_fidelity"][0] >= 0.99
        assert weak["mean_fidelity"][0] >= 0.99
        assert np.all(np.diff(strong["mean_fidelity"]) < 0)
        assert np.all(np.diff(weak["mean_fidelity"]) < 0)
        assert strong["mean_fidelity"][2] > weak["mean_fidelity"][2]
        assert list(strong["n"]) == [100, 100, 100]

    def test_transfer_loss(self, cavity_service, tss_eigen, tss_eigen_lt):
        """Test photon loss costs more for the slower dB < tau gate."""
        config = CavityConfigModel().to_cavity_config()

        strong = cavity_service.fidelity_sweep(
            config, tss_eigen, [0.0], 100, metric=FidelityMetricEnum.TRANSFER
        )
        weak = cavity_service.fidelity_sweep(
            config, tss_eigen_lt, [0.0], 100, metric=FidelityMetricEnum.TRANSFER
        )

        assert strong["mean_fidelity"][0] < 1.0
        assert strong["mean_fidelity"][0] > weak["mean_fidelity"][0]
        assert strong["stderr"][0] == pytest.approx(0.0, abs=1e-12)

    def test_threads_do_not_change_result(self, cavity_service, tss_eigen):
        """Test threaded sweeps match serial ones."""
        config = _config()

        serial = cavity_service.fidelity_sweep(config, tss_eigen, [0.1], 100, seed=4)
        threaded = cavity_service.fidelity_sweep(config, tss_eigen, [0.1], 100, seed=4, threads=3)

        assert np.array_equal(serial["mean_fidelity"], threaded["mean_fidelity"])

    def test_three_level_leakage(self, cavity_service, tss_eigen_lt):
        """Test the f level degrades the gate but not the single-excitation transfer."""
        two = _config()
        three = _config(qubit_levels=QubitLevelsEnum.THREE)

        def fidelity(config, metric):
            spec = cavity_service.entangler_spec(config, tss_eigen_lt)
            base, terms = cavity_service.liouvillian_terms(config, tss_eigen_lt)
            return cavity_service.realization_fidelity(
                config, base, terms, NoiseDraw(), spec, metric
            )

        assert fidelity(three, FidelityMetricEnum.GATE) < fidelity(two, FidelityMetricEnum.GATE) - 1e-3
        assert fidelity(three, FidelityMetricEnum.TRANSFER) == pytest.approx(
            fidelity(two, FidelityMetricEnum.TRANSFER), abs=1e-9
        )

    def test_labels(self):
        """Test computational ordering."""
        assert COMPUTATIONAL_LABELS == ("gg0", "ge0", "eg0", "ee0")

    def test_effective_coupling(self, cavity_service, tss_eigen):
        """Test the sigma unit is g' |d_ge|, not the bare coupling."""
        config = CavityConfigModel().to_cavity_config()

        scale = cavity_service.effective_coupling(config, tss_eigen)

        assert rad_per_ns_to_ghz(scale) * 1e3 == pytest.approx(45.055, abs=0.05)
        assert cavity_service.effective_coupling(_config(g1=0.0), tss_eigen) == pytest.approx(
            ghz_to_rad_per_ns(0.1) * abs(tss_eigen.d_ge)
        )
        with pytest.raises(ValidationError):
            cavity_service.effective_coupling(_config(g1=0.0, g2=0.0), tss_eigen)

    def test_sigma_measured_in_effective_coupling(self, cavity_service, tss_eigen):
        """Test the default unit equals an explicit Omega' and differs from bare g."""
        config = CavityConfigModel().to_cavity_config()
        scale = cavity_service.effective_coupling(config, tss_eigen)

        default = cavity_service.fidelity_sweep(config, tss_eigen, [0.2], 100, seed=5)
        explicit = cavity_service.fidelity_sweep(
            config, tss_eigen, [0.2], 100, seed=5, coupling_scale=scale
        )
        bare = cavity_service.fidelity_sweep(
            config, tss_eigen, [0.2], 100, seed=5, coupling_scale=config.g1
        )

        assert np.array_equal(default["mean_fidelity"], explicit["mean_fidelity"])
        assert bare["mean_fidelity"][0] < default["mean_fidelity"][0] - 0.01


@pytest.mark.slow
class TestEntanglerNoiseBudget:
    """Test the two-qubit sweep at the reference operating points."""

    def test_reference_fidelities(self, cavity_service, tss_eigen, tss_eigen_lt):
        """Test dB > tau and dB < tau transfer fidelities on a shared sigma axis."""
        settings = CavityConfigModel()
        config = settings.to_cavity_config()
        scale = cavity_service.effective_coupling(config, tss_eigen)
        grid = [0.0, 0.05, 0.2]

        strong = cavity_service.fidelity_sweep(
            config, tss_eigen, grid, 1000, 1234, settings.metric, 2, coupling_scale=scale
        )
        weak = cavity_service.fidelity_sweep(
            config, tss_eigen_lt, grid, 1000, 1234, settings.metric, 2, coupling_scale=scale
        )

        assert settings.metric is FidelityMetricEnum.TRANSFER
        assert strong["mean_fidelity"][0] >= 0.99
        assert weak["mean_fidelity"][0] >= 0.99
        assert strong["mean_fidelity"][1] == pytest.approx(0.9963, abs=0.003)
        assert strong["mean_fidelity"][2] >= 0.97
        assert weak["mean_fidelity"][2] == pytest.approx(0.92, abs=0.01)
