"""
Centralized error handling for the stqubit simulator.

Every failure a service can report is a subclass of SimulationException,
which carries a process exit code and a details dict for the CLI.
"""

import logging
from typing import Optional

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_NOT_CONVERGED = 3


class SimulationException(Exception):
    """Base exception for the stqubit simulator."""

    def __init__(
        self,
        message: str,
        exit_code: int = EXIT_FAILURE,
        details: Optional[dict] = None,
    ):
        self.message = message
        self.exit_code = exit_code
        self.details = details or {}
        super().__init__(self.message)


class ConfigError(SimulationException):
    """Run configuration could not be loaded or is inconsistent."""

    def __init__(self, message: str, details: Optional[dict] = None):
        super().__init__(
            message=message, exit_code=EXIT_CONFIG_ERROR, details=details
        )


class ValidationError(SimulationException):
    """Input validation error."""

    def __init__(self, message: str, field: Optional[str] = None):
        details = {"field": field} if field else {}
        super().__init__(
            message=message, exit_code=EXIT_CONFIG_ERROR, details=details
        )


class DegenerateSpectrumError(SimulationException):
    """Two eigenvalues of the ST Hamiltonian are closer than the threshold."""

    def __init__(self, gap: float, threshold: float):
        super().__init__(
            message=f"Degenerate spectrum: level gap {gap:.3e} rad/ns < {threshold:.1e}",
            details={"gap": gap, "threshold": threshold},
        )


class NoRootInBracketError(SimulationException):
    """The sweet-spot slope does not change sign inside the bracket."""

    def __init__(self, lower: float, upper: float):
        super().__init__(
            message=f"No sweet spot in detuning bracket [{lower:.6g}, {upper:.6g}] rad/ns",
            details={"lower": lower, "upper": upper},
        )


class NonPositiveAreaError(SimulationException):
    """A pulse area that must be positive is not."""

    def __init__(self, name: str, value: float):
        super().__init__(
            message=f"Pulse area {name} must be > 0, got {value:.6g}",
            exit_code=EXIT_CONFIG_ERROR,
            details={"name": name, "value": value},
        )


class UnknownFamilyError(SimulationException):
    """Gate family is not one of naive, corpse, geometric, non_cyclic."""

    def __init__(self, family: str):
        super().__init__(
            message=f"Unknown gate family: {family}",
            exit_code=EXIT_CONFIG_ERROR,
            details={"family": family},
        )


class CutoffOrderError(SimulationException):
    """Spectral cutoffs are not ordered 0 < omega_ir < omega_uv."""

    def __init__(self, omega_ir: float, omega_uv: float):
        super().__init__(
            message=f"Cutoffs must satisfy 0 < omega_ir < omega_uv, got ({omega_ir}, {omega_uv})",
            exit_code=EXIT_CONFIG_ERROR,
            details={"omega_ir": omega_ir, "omega_uv": omega_uv},
        )


class ResolutionError(SimulationException):
    """Sampling step too coarse for the top of the noise band."""

    def __init__(self, dt: float, dt_max: float):
        super().__init__(
            message=f"Time step {dt:.4g} ns exceeds pi/omega_uv = {dt_max:.4g} ns",
            exit_code=EXIT_CONFIG_ERROR,
            details={"dt": dt, "dt_max": dt_max},
        )


class TooShortError(SimulationException):
    """Trace too short for a spectral estimate."""

    def __init__(self, n: int, n_min: int):
        super().__init__(
            message=f"Trace has {n} samples, at least {n_min} are required",
            details={"n": n, "n_min": n_min},
        )


class PositivityViolationError(SimulationException):
    """Density matrix lost positivity during propagation."""

    def __init__(self, min_eigenvalue: float, tolerance: float):
        super().__init__(
            message=f"Density matrix eigenvalue {min_eigenvalue:.3e} below -{tolerance:.1e}",
            exit_code=EXIT_NOT_CONVERGED,
            details={"min_eigenvalue": min_eigenvalue, "tolerance": tolerance},
        )


class ConvergenceError(SimulationException):
    """A refinement loop did not reach its tolerance."""

    def __init__(self, quantity: str, change: float, tolerance: float):
        super().__init__(
            message=f"{quantity} did not converge: change {change:.3e} > {tolerance:.1e}",
            exit_code=EXIT_NOT_CONVERGED,
            details={"quantity": quantity, "change": change, "tolerance": tolerance},
        )


def handle_cli_error(exc: SimulationException) -> int:
    """
    Log a simulation error and map it to a process exit code.

    Args:
        exc: Raised simulation exception

    Returns:
        Exit code for sys.exit
    """
    logger.error(
        f"Simulation error: {exc.message}",
        extra={"exit_code": exc.exit_code, "details": exc.details},
    )
    return exc.exit_code
