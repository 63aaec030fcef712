"""Utilities module for the stqubit simulator."""

from .error_handlers import (
    EXIT_CONFIG_ERROR,
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    ConfigError,
    ConvergenceError,
    CutoffOrderError,
    DegenerateSpectrumError,
    NonPositiveAreaError,
    NoRootInBracketError,
    PositivityViolationError,
    ResolutionError,
    SimulationException,
    TooShortError,
    UnknownFamilyError,
    ValidationError,
    handle_cli_error,
)

__all__ = [
    "EXIT_OK",
    "EXIT_CONFIG_ERROR",
    "EXIT_NOT_CONVERGED",
    "SimulationException",
    "ConfigError",
    "ValidationError",
    "DegenerateSpectrumError",
    "NoRootInBracketError",
    "NonPositiveAreaError",
    "UnknownFamilyError",
    "CutoffOrderError",
    "ResolutionError",
    "TooShortError",
    "PositivityViolationError",
    "ConvergenceError",
    "handle_cli_error",
]
