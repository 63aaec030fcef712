"""Simulation services, one per physics module."""

from .cavity_service import CavityService, get_cavity_service
from .dynamics_service import DynamicsService, get_dynamics_service
from .filter_service import FilterService, get_filter_service
from .hamiltonian_service import HamiltonianService, get_hamiltonian_service
from .noise_service import NoiseService, get_noise_service
from .pulse_service import PulseService, get_pulse_service

__all__ = [
    "HamiltonianService",
    "PulseService",
    "NoiseService",
    "FilterService",
    "DynamicsService",
    "CavityService",
    "get_hamiltonian_service",
    "get_pulse_service",
    "get_noise_service",
    "get_filter_service",
    "get_dynamics_service",
    "get_cavity_service",
]
