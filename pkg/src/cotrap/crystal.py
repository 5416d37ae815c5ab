"""Normal-mode structure of a two-particle charged crystal in a linear trap.

A light ion (mass ``m``, charge ``e_ion``) and a heavy charged disc (mass
``M``, charge ``Q``) share one axial trapping potential and repel each other
electrostatically.  Both particles see the same endcap potential curvature,
which ties the bare secular frequencies together:

    M omega_2^2 = (Q / e_ion) m omega_1^2.

The axial potential is

    V(z1, z2) = m omega_1^2 z1^2 / 2 + M omega_2^2 z2^2 / 2
                + e_ion Q / (4 pi epsilon_0 (z2 - z1)),

with the ion at ``z1 < 0`` and the disc at ``z2 > 0`` in equilibrium.

For a large mass ratio the two axial normal modes are an "in-phase" mode
(both particles moving together, dominated by the disc) and an "out-of-phase"
mode (dominated by the ion).  The closed-form amplitudes and frequencies
implemented here are the leading-order expressions in the small parameters
``e_ion/Q`` and ``1/mu``; they are exact for identical particles and their
residual error at finite charge ratio is O(e_ion/Q).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import (
    ATOMIC_MASS,
    COULOMB_CONSTANT,
    ELEMENTARY_CHARGE,
    EPSILON_0,
    HBAR,
)

__all__ = [
    "ParticleSpec",
    "TrapSpec",
    "LaserSpec",
    "FlakeGeometry",
    "ModeStructure",
    "FeasibilityReport",
    "mode_structure",
    "feasibility",
    "potential_energy",
    "potential_gradient",
    "potential_hessian",
]

CARBON_ATOMIC_MASS = 12.011 * ATOMIC_MASS
GRAPHENE_AREAL_DENSITY = 7.6e-7  # kg / m^2


@dataclass(frozen=True)
class ParticleSpec:
    """A trapped point particle: mass in kg, positive charge in C."""

    mass: float
    charge: float
    label: str = ""

    def __post_init__(self):
        if not (self.mass > 0):
            raise ValueError(f"particle mass must be positive, got {self.mass}")
        if not (self.charge > 0):
            raise ValueError(f"particle charge must be positive, got {self.charge}")


@dataclass(frozen=True)
class TrapSpec:
    """Axial trap parameters.

    ``omega1`` is the bare angular secular frequency of the ion (rad/s),
    ``raman_wavenumber`` the effective wavenumber of the driving beam pair
    (1/m, may be zero when no optical drive is modelled), and
    ``endcap_distance`` the distance between the endcap electrodes (m),
    used for induced-current estimates.
    """

    omega1: float
    raman_wavenumber: float = 0.0
    endcap_distance: float = 1.11e-3

    def __post_init__(self):
        if not (self.omega1 > 0):
            raise ValueError(f"omega1 must be positive, got {self.omega1}")
        if self.raman_wavenumber < 0:
            raise ValueError("raman_wavenumber must be non-negative")
        if not (self.endcap_distance > 0):
            raise ValueError("endcap_distance must be positive")


@dataclass(frozen=True)
class LaserSpec:
    """Raman drive parameters: single-beam coupling ``g``, detuning ``delta``
    from the auxiliary level, and spin-splitting ``omega_s`` (all rad/s)."""

    g: float
    delta: float
    omega_s: float

    def __post_init__(self):
        for name in ("g", "delta", "omega_s"):
            if not (getattr(self, name) > 0):
                raise ValueError(f"laser {name} must be positive")


@dataclass(frozen=True)
class FlakeGeometry:
    """Disc radius (m) and areal mass density (kg/m^2)."""

    radius: float
    areal_density: float = GRAPHENE_AREAL_DENSITY

    def __post_init__(self):
        if not (self.radius > 0):
            raise ValueError("flake radius must be positive")
        if not (self.areal_density > 0):
            raise ValueError("areal density must be positive")

    @property
    def mass(self) -> float:
        return self.areal_density * math.pi * self.radius**2


@dataclass(frozen=True)
class ModeStructure:
    """Derived two-particle crystal quantities (strict SI units).

    Mode coordinates are normalised so that the ion carries unit effective
    mass: z1 = b1i q_i + b1o q_o and z2 = b2i q_i + b2o q_o with
    b1i^2 + mu b2i^2 = 1 (and likewise for the out-of-phase amplitudes).
    Ground-state lengths ``x0_i``/``x0_o`` therefore use the ion mass.
    """

    mu: float  # mass ratio M/m
    xi: float  # frequency-squared ratio (Q/e)(m/M)
    beta: float  # in-phase amplitude ratio z2/z1, (3 - xi)/2
    d: float  # equilibrium separation (m)
    z1_eq: float  # ion equilibrium position (m), negative
    z2_eq: float  # disc equilibrium position (m), positive
    b1i: float
    b2i: float
    b1o: float
    b2o: float
    omega_i: float  # in-phase mode angular frequency (rad/s)
    omega_o: float  # out-of-phase mode angular frequency (rad/s)
    x0_i: float  # in-phase ground-state length (m)
    x0_o: float  # out-of-phase ground-state length (m)
    eta_i: float  # drive Lamb-Dicke parameter of the in-phase mode
    eta_o: float  # drive Lamb-Dicke parameter of the out-of-phase mode
    ion: ParticleSpec = field(repr=False)
    flake: ParticleSpec = field(repr=False)
    trap: TrapSpec = field(repr=False)

    @property
    def pa_cross_coupling(self) -> float:
        """Dimensionless trap-modulation cross coupling onto the out-of-phase mode.

        Modulating the trap curvature by ``g(t)`` around the displaced ion
        equilibrium exerts a linear force on the out-of-phase mode of
        amplitude ``K g(t)`` with ``K = b1o z1_eq sqrt(2 m w_i^2 / (hbar w_o))``.
        """
        return (
            self.b1o
            * self.z1_eq
            * math.sqrt(2.0 * self.ion.mass * self.omega_i**2 / (HBAR * self.omega_o))
        )


def potential_energy(
    ion: ParticleSpec, flake: ParticleSpec, trap: TrapSpec, z1: float, z2: float
) -> float:
    """Axial potential V(z1, z2) in joules (z2 > z1 required)."""
    if not (z2 > z1):
        raise ValueError("ordering z2 > z1 required")
    m_om2 = ion.mass * trap.omega1**2
    flake_curvature = (flake.charge / ion.charge) * m_om2  # = M omega_2^2
    return (
        0.5 * m_om2 * z1**2
        + 0.5 * flake_curvature * z2**2
        + COULOMB_CONSTANT * ion.charge * flake.charge / (z2 - z1)
    )


def potential_gradient(
    ion: ParticleSpec, flake: ParticleSpec, trap: TrapSpec, z1: float, z2: float
) -> np.ndarray:
    """Gradient (dV/dz1, dV/dz2) in newtons."""
    m_om2 = ion.mass * trap.omega1**2
    flake_curvature = (flake.charge / ion.charge) * m_om2
    coul = COULOMB_CONSTANT * ion.charge * flake.charge / (z2 - z1) ** 2
    return np.array([m_om2 * z1 + coul, flake_curvature * z2 - coul])


def potential_hessian(
    ion: ParticleSpec, flake: ParticleSpec, trap: TrapSpec, z1: float, z2: float
) -> np.ndarray:
    """Hessian of V at (z1, z2) in N/m."""
    m_om2 = ion.mass * trap.omega1**2
    flake_curvature = (flake.charge / ion.charge) * m_om2
    coul = 2.0 * COULOMB_CONSTANT * ion.charge * flake.charge / (z2 - z1) ** 3
    return np.array(
        [
            [m_om2 + coul, -coul],
            [-coul, flake_curvature + coul],
        ]
    )


def mode_structure(
    ion: ParticleSpec, flake: ParticleSpec, trap: TrapSpec
) -> ModeStructure:
    """Closed-form normal-mode structure of the two-particle crystal.

    Returns the equilibrium geometry, the normalised mode amplitudes, the
    mode frequencies, ground-state lengths and the drive Lamb-Dicke
    parameters (referred to the ion coordinate z1).
    """
    m, M = ion.mass, flake.mass
    e_ion, q_flake = ion.charge, flake.charge

    mu = M / m
    xi = (q_flake / e_ion) * (m / M)
    beta = 0.5 * (3.0 - xi)

    d3 = (
        COULOMB_CONSTANT
        * e_ion
        * q_flake
        * (1.0 + e_ion / q_flake)
        / (m * trap.omega1**2)
    )
    d = d3 ** (1.0 / 3.0)
    z1_eq = -q_flake / (e_ion + q_flake) * d
    z2_eq = e_ion / (e_ion + q_flake) * d

    b1i = 1.0 / math.sqrt(1.0 + mu * beta**2)
    b2i = beta * b1i
    b1o = -math.sqrt(mu) * beta * b1i
    b2o = b1i / math.sqrt(mu)

    omega_i = math.sqrt(xi) * trap.omega1
    omega_o = math.sqrt(3.0) * trap.omega1

    x0_i = math.sqrt(HBAR / (2.0 * m * omega_i))
    x0_o = math.sqrt(HBAR / (2.0 * m * omega_o))

    eta_i = trap.raman_wavenumber * b1i * x0_i
    eta_o = trap.raman_wavenumber * b1o * x0_o

    return ModeStructure(
        mu=mu,
        xi=xi,
        beta=beta,
        d=d,
        z1_eq=z1_eq,
        z2_eq=z2_eq,
        b1i=b1i,
        b2i=b2i,
        b1o=b1o,
        b2o=b2o,
        omega_i=omega_i,
        omega_o=omega_o,
        x0_i=x0_i,
        x0_o=x0_o,
        eta_i=eta_i,
        eta_o=eta_o,
        ion=ion,
        flake=flake,
        trap=trap,
    )


@dataclass(frozen=True)
class FeasibilityReport:
    """Order-of-magnitude feasibility figures for a proposed crystal."""

    pauthenier_charge_limit: float  # C
    flake_mass: float  # kg
    carbon_atoms: float
    rabi_frequency: float  # rad/s
    gain_upper_bound: float
    oop_displacement_upper_bound: float
    warnings: tuple[str, ...] = ()


def feasibility(
    ion: ParticleSpec,
    flake: ParticleSpec,
    geometry: FlakeGeometry,
    laser: LaserSpec,
    modes: ModeStructure,
    breakdown_field: float = 1e7,
    pauthenier_factor: float = 3.0,
    scale_threshold: float = 100.0,
) -> FeasibilityReport:
    """Feasibility estimates: charging limit, drive strength and amplitude caps.

    Parameters
    ----------
    breakdown_field:
        Electric field magnitude (V/m) used in the Pauthenier charging limit
        ``Q_max = 4 pi epsilon_0 R^2 p E``.
    pauthenier_factor:
        Dimensionless ``p`` in the Pauthenier limit (3 for conductors).
    scale_threshold:
        Factor demanded between successive frequency scales in the chain
        omega_i << omega_s << delta (and laser g << delta); violations are
        reported as warnings, never as errors.
    """
    q_max = (
        4.0
        * math.pi
        * EPSILON_0
        * geometry.radius**2
        * pauthenier_factor
        * breakdown_field
    )
    flake_mass = geometry.mass
    atoms = flake_mass / CARBON_ATOMIC_MASS
    rabi = laser.g**2 / (2.0 * laser.delta)

    m = ion.mass
    gain_bound = (
        math.sqrt(2.0 * m * modes.omega_i / HBAR) * modes.d / abs(modes.b1i - modes.b2i)
    )
    alpha_o_bound = math.sqrt(2.0 * m * modes.omega_o / HBAR) * modes.d / abs(modes.b1o)

    warnings: list[str] = []
    if laser.omega_s < scale_threshold * modes.omega_i:
        warnings.append(
            f"spin splitting omega_s = {laser.omega_s:.3e} rad/s is not "
            f">> in-phase frequency {modes.omega_i:.3e} rad/s "
            f"(threshold factor {scale_threshold:g})"
        )
    if laser.delta < scale_threshold * laser.omega_s:
        warnings.append(
            f"laser detuning delta = {laser.delta:.3e} rad/s is not "
            f">> spin splitting {laser.omega_s:.3e} rad/s "
            f"(threshold factor {scale_threshold:g})"
        )
    if laser.delta < scale_threshold * laser.g:
        warnings.append(
            f"laser detuning delta = {laser.delta:.3e} rad/s is not "
            f">> coupling g = {laser.g:.3e} rad/s "
            f"(threshold factor {scale_threshold:g})"
        )
    if flake.charge > q_max:
        warnings.append(
            f"requested flake charge {flake.charge:.3e} C exceeds the "
            f"Pauthenier limit {q_max:.3e} C at E = {breakdown_field:.3e} V/m"
        )

    return FeasibilityReport(
        pauthenier_charge_limit=q_max,
        flake_mass=flake_mass,
        carbon_atoms=atoms,
        rabi_frequency=rabi,
        gain_upper_bound=gain_bound,
        oop_displacement_upper_bound=alpha_o_bound,
        warnings=tuple(warnings),
    )


def yb174_ion() -> ParticleSpec:
    """Convenience constructor: singly charged mass-174 ytterbium ion."""
    return ParticleSpec(mass=174.0 * ATOMIC_MASS, charge=ELEMENTARY_CHARGE, label="Yb-174+")
