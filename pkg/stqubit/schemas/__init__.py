"""
Pydantic schemas for simulation inputs, intermediate results and run configs.

Physical fields are angular frequencies in rad/ns unless the field name says
otherwise (``*_ghz``, ``*_mhz``, ``*_uev`` fields only appear in RunConfig).
"""

import json
import math
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from stqubit.schemas.enums import (
    FidelityMetricEnum,
    FilterConventionEnum,
    GateFamilyEnum,
    NoiseModeEnum,
    PsdNormalizationEnum,
    QubitLevelsEnum,
)
from stqubit.utils.error_handlers import CutoffOrderError
from stqubit.utils.units import (
    ghz_to_rad_per_ns,
    mhz_to_rad_per_ns,
    microev_to_rad_per_ns,
)

# Eigenstate indices, ascending energy
G, E, F = 0, 1, 2


class DeviceParams(BaseModel):
    """Parameters of the three-level ST Hamiltonian."""

    model_config = ConfigDict(frozen=True)

    delta_b: float = Field(..., ge=0.0, description="Field gradient dB (rad/ns)")
    tau: float = Field(..., ge=0.0, description="Interdot tunneling (rad/ns)")
    epsilon: float = Field(0.0, description="Detuning (rad/ns)")

    @classmethod
    def from_ghz(
        cls, delta_b_ghz: float, tau_ghz: float, epsilon_ghz: float = 0.0
    ) -> "DeviceParams":
        return cls(
            delta_b=ghz_to_rad_per_ns(delta_b_ghz),
            tau=ghz_to_rad_per_ns(tau_ghz),
            epsilon=ghz_to_rad_per_ns(epsilon_ghz),
        )

    def with_epsilon(self, epsilon: float) -> "DeviceParams":
        return self.model_copy(update={"epsilon": float(epsilon)})


class EigenSystem(BaseModel):
    """Sorted spectrum, eigenvectors (as columns) and dipole matrix."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    energies: np.ndarray
    states: np.ndarray
    dipole: np.ndarray

    @property
    def omega_q(self) -> float:
        return float(self.energies[E] - self.energies[G])

    @property
    def omega_ef(self) -> float:
        return float(self.energies[F] - self.energies[E])

    @property
    def d_ge(self) -> complex:
        return complex(self.dipole[G, E])


class DriveConfig(BaseModel):
    """AC detuning drive eps_ac * cos(omega t + phi(t))."""

    model_config = ConfigDict(frozen=True)

    eps_ac: float = Field(..., gt=0.0)
    omega: float = Field(..., gt=0.0)


class PulseSegment(BaseModel):
    """Constant-Hamiltonian rotation about an axis in the x-y plane."""

    model_config = ConfigDict(frozen=True)

    phi: float
    theta: float = Field(..., ge=0.0)
    omega0: float = Field(1.0, gt=0.0)

    @property
    def duration(self) -> float:
        return self.theta / self.omega0


class PulseSequence(BaseModel):
    """Ordered segments, first segment applied first."""

    model_config = ConfigDict(frozen=True)

    segments: List[PulseSegment]
    family: GateFamilyEnum
    target_axis: Tuple[float, float, float] = (1.0, 0.0, 0.0)
    target_angle: float = 0.0

    @model_validator(mode="after")
    def _closed_geometric_path(self) -> "PulseSequence":
        if self.family is GateFamilyEnum.GEOMETRIC:
            area = self.total_area
            if not math.isclose(area, 2 * math.pi, rel_tol=0.0, abs_tol=1e-12):
                raise ValueError(f"Geometric sequence must have total area 2pi, got {area}")
        return self

    @property
    def total_area(self) -> float:
        return float(sum(seg.theta for seg in self.segments))

    @property
    def total_duration(self) -> float:
        return float(sum(seg.duration for seg in self.segments))

    def with_omega0(self, omega0: float) -> "PulseSequence":
        segments = [seg.model_copy(update={"omega0": omega0}) for seg in self.segments]
        return self.model_copy(update={"segments": segments})

    def to_json(self) -> str:
        return json.dumps(
            {
                "family": self.family.value,
                "target_axis": list(self.target_axis),
                "target_angle": self.target_angle,
                "segments": [
                    {"phi_rad": seg.phi, "theta_rad": seg.theta} for seg in self.segments
                ],
            }
        )

    @classmethod
    def from_json(cls, payload: str, omega0: float = 1.0) -> "PulseSequence":
        data = json.loads(payload)
        return cls(
            segments=[
                PulseSegment(phi=s["phi_rad"], theta=s["theta_rad"], omega0=omega0)
                for s in data["segments"]
            ],
            family=GateFamilyEnum(data["family"]),
            target_axis=tuple(data["target_axis"]),
            target_angle=data["target_angle"],
        )


class SpectralModel(BaseModel):
    """Power spectral density S(w) = A / (w t0)^alpha between two cutoffs."""

    model_config = ConfigDict(frozen=True)

    amplitude_a: float = Field(0.0, ge=0.0)
    alpha: float = Field(1.0, ge=0.5, le=2.0)
    t0: float = Field(1.0, gt=0.0)
    omega_ir: float
    omega_uv: float
    normalization: PsdNormalizationEnum = PsdNormalizationEnum.PI
    mode: NoiseModeEnum = NoiseModeEnum.ONE_OVER_F

    @model_validator(mode="after")
    def _ordered_cutoffs(self) -> "SpectralModel":
        if not (0 < self.omega_ir < self.omega_uv):
            raise CutoffOrderError(self.omega_ir, self.omega_uv)
        return self

    @property
    def kappa(self) -> float:
        """Constant k in  integral(S) = k * sigma^2."""
        return math.pi if self.normalization is PsdNormalizationEnum.PI else 2 * math.pi

    def psd(self, omega: np.ndarray) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        return self.amplitude_a / np.power(omega * self.t0, self.alpha)


class NoiseTrace(BaseModel):
    """Sampled detuning noise delta(t_k), t_k = k dt."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dt: float = Field(..., gt=0.0)
    samples: np.ndarray
    seed: int

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self.samples))


class ControlMatrix(BaseModel):
    """R_ij(w) for i, j in (x, y, z), one 3x3 block per frequency."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    omega: np.ndarray
    entries: np.ndarray


class FilterFunction(BaseModel):
    """F_z(w) on a frequency grid."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: np.ndarray
    values: np.ndarray

    @property
    def over_omega2(self) -> np.ndarray:
        return self.values / self.grid**2


class RotatingFrameModel(BaseModel):
    """Driven three-level qubit in the interaction frame of H_ST."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    eigen: EigenSystem
    drive: DriveConfig
    rwa: bool = False
    # Detuning noise delta_eps(t); level n shifts by d_nn * delta_eps
    noise_injection: Optional[NoiseTrace] = None


class CavityConfig(BaseModel):
    """Resonator-mediated two-qubit coupling (rates in rad/ns)."""

    model_config = ConfigDict(frozen=True)

    omega_r: Optional[float] = Field(None, gt=0.0, description="None: resonant with qubit 1")
    g1: float = Field(..., ge=0.0)
    g2: float = Field(..., ge=0.0)
    gamma_a: float = Field(0.0, ge=0.0)
    gamma_1: float = Field(0.0, ge=0.0)
    gamma_2: float = Field(0.0, ge=0.0)
    n_max: int = Field(2, ge=2, description="Fock-space dimension")
    qubit_levels: QubitLevelsEnum = QubitLevelsEnum.TWO
    correlated_noise: bool = False
    resonator_noise: bool = False


class EntanglerSpec(BaseModel):
    """Lambda-system pi condition for the resonator gate."""

    model_config = ConfigDict(frozen=True)

    xi: float
    omega: float = Field(..., gt=0.0)
    duration: float = Field(..., gt=0.0)


class NoiseDraw(BaseModel):
    """Quasi-static detunings for one two-qubit realization."""

    model_config = ConfigDict(frozen=True)

    delta1: float = 0.0
    delta2: float = 0.0
    delta_r: float = 0.0


# --------------------------------------------------------------------------
# Run configuration (JSON, ordinary frequencies)
# --------------------------------------------------------------------------


class _StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DeviceConfig(_StrictModel):
    """Device operating point, GHz."""

    delta_b_ghz: float = Field(2.5, ge=0.0)
    tau_ghz: float = Field(1.5, ge=0.0)
    epsilon_ghz: Optional[float] = Field(None, description="None: use the sweet spot")
    eps_ac_ghz: float = Field(0.1, gt=0.0)

    def to_params(self, epsilon: Optional[float] = None) -> DeviceParams:
        eps = epsilon if epsilon is not None else ghz_to_rad_per_ns(self.epsilon_ghz or 0.0)
        return DeviceParams(
            delta_b=ghz_to_rad_per_ns(self.delta_b_ghz),
            tau=ghz_to_rad_per_ns(self.tau_ghz),
            epsilon=eps,
        )


class NoiseConfig(_StrictModel):
    """1/f charge-noise model."""

    sigma_uev: float = Field(0.02, ge=0.0, description="Qubit-frequency noise std (ueV)")
    alpha: float = Field(1.0, ge=0.5, le=2.0)
    omega_ir_ghz: float = Field(1e-4, gt=0.0)
    omega_uv_ghz: float = Field(20.0, gt=0.0)
    amplitude_t0: Optional[float] = Field(
        1e-3, ge=0.0, description="Dimensionless A*t0 override; None calibrates from sigma"
    )
    normalization: PsdNormalizationEnum = PsdNormalizationEnum.PI

    @property
    def sigma(self) -> float:
        return microev_to_rad_per_ns(self.sigma_uev)


class FilterConfig(_StrictModel):
    """Spectral-integration settings."""

    points_per_decade: int = Field(200, ge=10)
    tolerance: float = Field(1e-6, gt=0.0)
    max_refinements: int = Field(4, ge=1, le=10)
    convention: FilterConventionEnum = FilterConventionEnum.ONE_SIDED
    export_grid_points: int = Field(400, ge=2)


class DynamicsConfig(_StrictModel):
    """Rotating-frame propagation settings."""

    steps_per_period: int = Field(40, ge=8)
    rwa: bool = False
    n_realizations: int = Field(500, ge=100)
    check_convergence: bool = False


class SpectrumConfig(_StrictModel):
    """Detuning scan for the energy spectrum."""

    eps_min_ghz: float = -5.0
    eps_max_ghz: float = 5.0
    points: int = Field(2001, ge=1)

    @model_validator(mode="after")
    def _ordered(self) -> "SpectrumConfig":
        if self.eps_max_ghz < self.eps_min_ghz:
            raise ValueError("eps_max_ghz must be >= eps_min_ghz")
        return self


class CavityConfigModel(_StrictModel):
    """Two-qubit resonator gate, MHz."""

    g_mhz: float = Field(100.0, ge=0.0)
    gamma_a_mhz: float = Field(0.028, ge=0.0)
    quality_factor: Optional[float] = Field(None, gt=0.0)
    gamma_1_mhz: float = Field(0.0, ge=0.0)
    gamma_2_mhz: float = Field(0.0, ge=0.0)
    n_max: int = Field(2, ge=2)
    qubit_levels: QubitLevelsEnum = QubitLevelsEnum.TWO
    correlated_noise: bool = False
    resonator_noise: bool = False
    metric: FidelityMetricEnum = FidelityMetricEnum.TRANSFER
    sigma_over_g: List[float] = Field(default_factory=lambda: [0.0, 0.05, 0.1, 0.15, 0.2])
    n_realizations: int = Field(1000, ge=100)
    population_points: int = Field(201, ge=2)
    compare_device: DeviceConfig = Field(
        default_factory=lambda: DeviceConfig(delta_b_ghz=1.5, tau_ghz=1.75)
    )

    def to_cavity_config(self, omega_r: Optional[float] = None) -> CavityConfig:
        g = mhz_to_rad_per_ns(self.g_mhz)
        return CavityConfig(
            omega_r=omega_r,
            g1=g,
            g2=g,
            gamma_a=mhz_to_rad_per_ns(self.gamma_a_mhz),
            gamma_1=mhz_to_rad_per_ns(self.gamma_1_mhz),
            gamma_2=mhz_to_rad_per_ns(self.gamma_2_mhz),
            n_max=self.n_max,
            qubit_levels=self.qubit_levels,
            correlated_noise=self.correlated_noise,
            resonator_noise=self.resonator_noise,
        )


class RunConfig(_StrictModel):
    """Top-level CLI configuration."""

    device: DeviceConfig = Field(default_factory=DeviceConfig)
    noise: NoiseConfig = Field(default_factory=NoiseConfig)
    filter: FilterConfig = Field(default_factory=FilterConfig)
    dynamics: DynamicsConfig = Field(default_factory=DynamicsConfig)
    spectrum: SpectrumConfig = Field(default_factory=SpectrumConfig)
    cavity: CavityConfigModel = Field(default_factory=CavityConfigModel)
    seed: int = Field(1234, ge=0)
    output_dir: str = "results"
