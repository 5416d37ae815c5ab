"""Physical constants (CODATA 2018, SI units) and small unit helpers.

All internal computation in this package is done in strict SI units:
kilograms, coulombs, metres, seconds, and angular frequencies in rad/s.
"""

from __future__ import annotations

import math

# CODATA 2018 exact / recommended values.
HBAR = 1.054571817e-34
"""Reduced Planck constant (J s)."""

ELEMENTARY_CHARGE = 1.602176634e-19
"""Elementary charge e (C), exact."""

ATOMIC_MASS = 1.66053906660e-27
"""Unified atomic mass unit u (kg)."""

ELECTRON_MASS = 9.1093837015e-31
"""Electron rest mass (kg)."""

EPSILON_0 = 8.8541878128e-12
"""Vacuum electric permittivity (F/m)."""

BOLTZMANN = 1.380649e-23
"""Boltzmann constant k_B (J/K), exact."""

SPEED_OF_LIGHT = 299792458.0
"""Speed of light in vacuum c (m/s), exact."""

COULOMB_CONSTANT = 1.0 / (4.0 * math.pi * EPSILON_0)
"""Coulomb constant 1/(4 pi epsilon_0) (N m^2 / C^2)."""


def angular(frequency_hz: float) -> float:
    """Convert an ordinary frequency in Hz to an angular frequency in rad/s."""
    return 2.0 * math.pi * frequency_hz
