"""
Unit conversions.

Everything inside the package is an angular frequency in rad/ns (hbar = 1).
Conversions happen once, where configuration is read.
"""

import math

TWO_PI = 2.0 * math.pi

# 1 ueV / hbar expressed in rad/ns
RAD_PER_NS_PER_MICROEV = 1.519267


def ghz_to_rad_per_ns(value_ghz: float) -> float:
    """Convert an ordinary frequency in GHz to rad/ns."""
    return TWO_PI * value_ghz


def rad_per_ns_to_ghz(value: float) -> float:
    """Convert rad/ns back to GHz."""
    return value / TWO_PI


def mhz_to_rad_per_ns(value_mhz: float) -> float:
    """Convert an ordinary frequency in MHz to rad/ns."""
    return TWO_PI * value_mhz * 1e-3


def microev_to_rad_per_ns(value_uev: float) -> float:
    """Convert an energy in micro-electronvolts to rad/ns."""
    return value_uev * RAD_PER_NS_PER_MICROEV
