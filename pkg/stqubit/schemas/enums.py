"""
Enums for configuration and service options.

String-valued so they round-trip through JSON configs unchanged.
"""

from enum import Enum


class GateFamilyEnum(str, Enum):
    """Pulse-sequence families."""

    NAIVE = "naive"
    CORPSE = "corpse"
    GEOMETRIC = "geometric"
    NON_CYCLIC = "non_cyclic"


class FilterConventionEnum(str, Enum):
    """Prefactor of the spectral infidelity integral."""

    # 1/(2 pi) over positive frequencies
    ONE_SIDED = "one_sided"
    # 1/(8 pi): trace-fidelity average under generate_trace noise
    TIME_DOMAIN = "time_domain"


class PsdNormalizationEnum(str, Enum):
    """Integral of the PSD that equals sigma^2 times this constant."""

    PI = "pi"
    TWO_PI = "two_pi"


class NoiseModeEnum(str, Enum):
    """Time structure of generated detuning noise."""

    ONE_OVER_F = "one_over_f"
    QUASI_STATIC = "quasi_static"


class FidelityMetricEnum(str, Enum):
    """Two-qubit figure of merit."""

    GATE = "gate"
    TRANSFER = "transfer"


class QubitLevelsEnum(str, Enum):
    """Levels kept per qubit in the cavity model."""

    TWO = "two"
    THREE = "three"

    @property
    def dimension(self) -> int:
        return 2 if self is QubitLevelsEnum.TWO else 3
