"""
Input validation utilities.

Provides validators for physical parameters, cutoffs, angles and seeds.
"""

import math

from .error_handlers import CutoffOrderError, ValidationError

# Largest seed accepted by numpy's SeedSequence without wrapping surprises
MAX_SEED = 2**63 - 1


def validate_positive(value: float, field: str, allow_zero: bool = False) -> float:
    """
    Validate that a physical quantity is positive and finite.

    Args:
        value: Quantity to check
        field: Name reported in the error
        allow_zero: Accept exactly zero

    Returns:
        The value as float

    Raises:
        ValidationError: If the value is negative, zero (unless allowed) or not finite
    """
    value = float(value)

    if not math.isfinite(value):
        raise ValidationError(f"{field} must be finite, got {value}", field=field)

    if value < 0 or (value == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise ValidationError(f"{field} must be {bound}, got {value}", field=field)

    return value


def validate_cutoffs(omega_ir: float, omega_uv: float) -> tuple[float, float]:
    """
    Validate the spectral band of a noise model.

    Args:
        omega_ir: Low cutoff (rad/ns)
        omega_uv: High cutoff (rad/ns)

    Returns:
        Tuple of (omega_ir, omega_uv)

    Raises:
        CutoffOrderError: If not 0 < omega_ir < omega_uv
    """
    if not (0 < omega_ir < omega_uv) or not math.isfinite(omega_uv):
        raise CutoffOrderError(omega_ir, omega_uv)

    return float(omega_ir), float(omega_uv)


def validate_theta_range(theta: float, limit: float = 2 * math.pi) -> float:
    """
    Validate a composite-pulse rotation angle.

    Args:
        theta: Rotation angle (rad)
        limit: Open bound on |theta|

    Returns:
        The angle as float

    Raises:
        ValidationError: If |theta| >= limit
    """
    if not abs(theta) < limit:
        raise ValidationError(
            f"Rotation angle must lie in (-{limit:.6g}, {limit:.6g}), got {theta}",
            field="theta",
        )

    return float(theta)


def validate_seed(seed: int) -> int:
    """
    Validate a random seed.

    Args:
        seed: Non-negative integer seed

    Returns:
        Validated seed

    Raises:
        ValidationError: If seed is negative or too large
    """
    if seed < 0 or seed > MAX_SEED:
        raise ValidationError(f"Seed must be in [0, {MAX_SEED}], got {seed}", field="seed")

    return int(seed)


def validate_realizations(n: int, minimum: int = 100) -> int:
    """
    Validate a Monte-Carlo ensemble size.

    Args:
        n: Requested number of realizations
        minimum: Smallest ensemble accepted

    Returns:
        Validated count

    Raises:
        ValidationError: If n is below the minimum
    """
    if n < minimum:
        raise ValidationError(
            f"At least {minimum} realizations are required, got {n}",
            field="n_realizations",
        )

    return int(n)
