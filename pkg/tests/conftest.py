"""
Pytest fixtures for stqubit tests.
"""

import sys
from pathlib import Path

# Add project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

import numpy as np
import pytest

from stqubit.schemas import DeviceParams, SpectralModel
from stqubit.services import (
    get_cavity_service,
    get_dynamics_service,
    get_filter_service,
    get_hamiltonian_service,
    get_noise_service,
    get_pulse_service,
)
from stqubit.utils.units import ghz_to_rad_per_ns


@pytest.fixture
def device_db_gt_tau():
    """Device with dB/2pi = 2.5 GHz, tau/2pi = 1.5 GHz."""
    return DeviceParams.from_ghz(2.5, 1.5)


@pytest.fixture
def device_db_lt_tau():
    """Device with dB/2pi = 1.5 GHz, tau/2pi = 1.75 GHz."""
    return DeviceParams.from_ghz(1.5, 1.75)


@pytest.fixture
def hamiltonian_service():
    return get_hamiltonian_service()


@pytest.fixture
def pulse_service():
    return get_pulse_service()


@pytest.fixture
def noise_service():
    return get_noise_service()


@pytest.fixture
def filter_service():
    return get_filter_service()


@pytest.fixture
def dynamics_service():
    return get_dynamics_service()


@pytest.fixture
def cavity_service():
    return get_cavity_service()


@pytest.fixture
def tss_eigen(hamiltonian_service, device_db_gt_tau):
    """Eigensystem at the sweet spot for dB > tau."""
    eps = hamiltonian_service.find_tss(device_db_gt_tau)
    return hamiltonian_service.eigensystem(device_db_gt_tau.with_epsilon(eps))


@pytest.fixture
def tss_eigen_lt(hamiltonian_service, device_db_lt_tau):
    """Eigensystem at the sweet spot for dB < tau."""
    eps = hamiltonian_service.find_tss(device_db_lt_tau)
    return hamiltonian_service.eigensystem(device_db_lt_tau.with_epsilon(eps))


@pytest.fixture
def rng():
    """Seeded random generator."""
    return np.random.default_rng(20240611)


@pytest.fixture
def rabi_omega0():
    """Omega0 / 2pi = 45.055 MHz."""
    return ghz_to_rad_per_ns(0.045055)


@pytest.fixture
def one_over_f_model(rabi_omega0):
    """1/f spectrum with A t0 = 1e-3, t0 = 1/Omega0 and 100 kHz - 20 GHz cutoffs."""
    t0 = 1.0 / rabi_omega0
    return SpectralModel(
        amplitude_a=1e-3 / t0,
        alpha=1.0,
        t0=t0,
        omega_ir=ghz_to_rad_per_ns(1e-4),
        omega_uv=ghz_to_rad_per_ns(20.0),
    )
