"""Observables of the split-and-recombine interferometer.

Fringe visibility of spin-dependent displacements on thermal modes,
weighted exponential-decay fitting, a logarithmic macroscopicity measure
for superposition experiments, collapse-parameter exclusion grids, and an
environmental decoherence budget for a levitated charged oscillator.

Visibility is the magnitude of the off-diagonal spin-block trace.  For a
branch-difference unitary that is purely a displacement D(alpha) acting on
a thermal mode the trace has the closed form exp(-|alpha|^2 (2 nbar + 1) / 2);
the general Gaussian case is evaluated numerically in a truncated number
basis with an explicit convergence check.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import fock
from .constants import (
    ATOMIC_MASS,
    BOLTZMANN,
    ELECTRON_MASS,
    HBAR,
    SPEED_OF_LIGHT,
)
from .crystal import ModeStructure
from .errors import PhysicsValidityError

__all__ = [
    "ADLER_POINT",
    "GRW_POINT",
    "GAMMA_TARGET_RANGE",
    "DecayFit",
    "DecoherenceBudget",
    "Environment",
    "ExclusionRegion",
    "ThermalState",
    "VisibilityResult",
    "decoherence_budget",
    "displaced_thermal_visibility",
    "exclusion_region",
    "fit_decay",
    "fringe_pattern",
    "gaussian_thermal_trace",
    "general_gaussian_visibility",
    "macroscopicity",
]

# Benchmark localisation-model parameter points, given as (collapse length
# sigma in metres, single-electron coherence time tau_e in seconds).  The
# Adler point uses the proposed enhanced single-constituent collapse rate of
# 4e-8 per second (tau_e = 1 / rate) at the conventional 1e-7 m length.
GRW_POINT: tuple[float, float] = (1.0e-7, 1.0e16)
ADLER_POINT: tuple[float, float] = (1.0e-7, 2.5e7)

# Acceptable window for the background decay rate of the off-diagonal
# elements (1/s).  Background decoherence must sit at or below this range
# for a collapse-induced rate of a few thousand per second to remain
# resolvable over a millisecond-scale interferometer cycle.
GAMMA_TARGET_RANGE: tuple[float, float] = (1.0e2, 1.0e3)

# Two-sided 95% quantile of the standard normal distribution.
_Z95 = 1.959963984540054

_GAS_RATE_PREFACTOR = 16.0 * math.pi * math.sqrt(2.0 * math.pi) / 3.0


# ---------------------------------------------------------------------------
# Thermal occupation


@dataclass(frozen=True)
class ThermalState:
    """Single-mode thermal occupation."""

    nbar: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.nbar) or self.nbar < 0:
            raise ValueError(
                f"mean occupation must be finite and non-negative, got {self.nbar}"
            )

    @classmethod
    def from_temperature(cls, temperature: float, omega: float) -> "ThermalState":
        """Bose-Einstein occupation of a mode at ``omega`` (rad/s), ``temperature`` (K)."""
        if omega <= 0:
            raise ValueError("mode frequency must be positive")
        if temperature < 0:
            raise ValueError("temperature must be non-negative")
        if temperature == 0:
            return cls(0.0)
        return cls(1.0 / math.expm1(HBAR * omega / (BOLTZMANN * temperature)))

    def temperature(self, omega: float) -> float:
        """Temperature (K) at which a mode of frequency ``omega`` has this occupation."""
        if omega <= 0:
            raise ValueError("mode frequency must be positive")
        if self.nbar == 0:
            return 0.0
        return HBAR * omega / (BOLTZMANN * math.log1p(1.0 / self.nbar))


# ---------------------------------------------------------------------------
# Visibility


@dataclass(frozen=True)
class VisibilityResult:
    """Fringe contrast, optionally split into per-mode factors.

    Attributes
    ----------
    value:
        Total fringe contrast in [0, 1].
    in_phase, out_of_phase:
        Multiplicative contributions of the two crystal modes, when they
        were evaluated separately (``value`` is their product).
    stderr:
        One-sigma statistical uncertainty of ``value`` when it was
        estimated from a finite ensemble.
    """

    value: float
    in_phase: float | None = None
    out_of_phase: float | None = None
    stderr: float | None = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.value) or self.value < 0:
            raise ValueError(f"visibility must be finite and >= 0, got {self.value}")


def displaced_thermal_visibility(alpha: complex, nbar: float = 0.0) -> float:
    """Visibility of a pure branch-difference displacement on a thermal mode.

    Equals ``|Tr D(alpha) rho_th| = exp(-|alpha|^2 (2 nbar + 1) / 2)``, the
    magnitude of the thermal characteristic function at the displacement
    ``alpha`` of one branch relative to the other.
    """
    if nbar < 0:
        raise ValueError("nbar must be non-negative")
    return math.exp(-0.5 * abs(alpha) ** 2 * (2.0 * nbar + 1.0))


def _thermal_trace_once(
    alpha: complex, zeta: complex, phi: float, chi: float, nbar: float, dimension: int
) -> complex:
    disp = fock.matrix_displacement(alpha, dimension).matrix
    sq = fock.matrix_squeeze(zeta, dimension).matrix
    diag = np.einsum("ij,ji->i", disp, sq)  # diagonal of D @ S
    n = np.arange(dimension, dtype=float)
    diag = diag * np.exp(-1j * chi * (n + 0.5))
    weights = fock.thermal_weights(nbar, dimension)
    return cmath.exp(1j * phi) * complex(np.sum(weights * diag))


def gaussian_thermal_trace(
    alpha: complex,
    tau: complex = 0.0,
    phi: float = 0.0,
    chi: float = 0.0,
    nbar: float = 0.0,
    dimension: int | None = None,
) -> complex:
    """Tr{ U rho_th } for U = e^{i phi} D(alpha) S(zeta) R(chi).

    ``tau = e^{i theta} tanh r`` parameterises the squeeze; ``R(chi) =
    exp(-i chi (n + 1/2))``.  The trace is evaluated in a truncated number
    basis.  When ``dimension`` is omitted the basis is doubled until the
    value is stable to 1e-9 and the thermal weight beyond the basis is
    below 1e-8; if no stable value is reached within the maximum supported
    dimension a :class:`PhysicsValidityError` is raised.
    """
    if nbar < 0:
        raise ValueError("nbar must be non-negative")
    tau_c = complex(tau)
    if abs(tau_c) >= 1.0:
        raise PhysicsValidityError(f"|tau| must be < 1, got {abs(tau_c):.6g}")
    if abs(tau_c) > 0:
        zeta = math.atanh(abs(tau_c)) * cmath.exp(1j * cmath.phase(tau_c))
    else:
        zeta = 0.0 + 0.0j
    amp = abs(complex(alpha))
    stretch = (1.0 + abs(zeta)) * math.exp(2.0 * abs(zeta))

    if dimension is not None:
        if dimension < 2:
            raise ValueError("dimension must be at least 2")
        tail = (nbar / (1.0 + nbar)) ** dimension if nbar > 0 else 0.0
        if tail > 1e-6:
            raise PhysicsValidityError(
                f"thermal weight {tail:.3e} beyond dimension {dimension} exceeds 1e-6; "
                "increase the dimension"
            )
        return _thermal_trace_once(alpha, zeta, phi, chi, nbar, dimension)

    guess = 16.0 * (1.0 + nbar) * (1.0 + amp * amp) * stretch
    if nbar > 0:
        # Geometric tail below 1e-8.
        guess = max(guess, math.log(1e-8) / math.log(nbar / (1.0 + nbar)))
    dim = 32
    while dim < min(guess, fock.MAX_DIMENSION):
        dim *= 2
    previous: complex | None = None
    while dim <= fock.MAX_DIMENSION:
        value = _thermal_trace_once(alpha, zeta, phi, chi, nbar, dim)
        if previous is not None and fock.truncation_stable(
            [previous, value], rtol=1e-9
        ):
            return value
        previous = value
        dim *= 2
    raise PhysicsValidityError(
        "thermal trace did not converge within the maximum basis size "
        f"({fock.MAX_DIMENSION}); the state is too large for a reliable value"
    )


def general_gaussian_visibility(
    alpha: complex,
    tau: complex = 0.0,
    phi: float = 0.0,
    chi: float = 0.0,
    nbar: float = 0.0,
    dimension: int | None = None,
) -> float:
    """Visibility for a general Gaussian branch-difference unitary.

    Magnitude of :func:`gaussian_thermal_trace`; reduces to
    :func:`displaced_thermal_visibility` when ``tau == 0``.
    """
    return abs(gaussian_thermal_trace(alpha, tau, phi, chi, nbar, dimension))


def fringe_pattern(
    visibility: float, phase_offset: float, mu_values: Sequence[float] | np.ndarray
) -> np.ndarray:
    """Spin-up probability ``(1 + V cos(mu + offset)) / 2`` over analysis phases."""
    if not 0.0 <= visibility <= 1.0 + 1e-12:
        raise ValueError(f"visibility must lie in [0, 1], got {visibility}")
    mu = np.asarray(mu_values, dtype=float)
    return 0.5 * (1.0 + visibility * np.cos(mu + phase_offset))


# ---------------------------------------------------------------------------
# Exponential-decay fitting


@dataclass(frozen=True)
class DecayFit:
    """Weighted least-squares fit of V(t) = V0 exp(-rate t).

    The fit is linear in log space.  When per-point uncertainties are
    supplied the covariance comes from pure error propagation; otherwise it
    is scaled by the residual variance.  ``rate_ci95`` is the two-sided 95%
    interval using the normal quantile.
    """

    rate: float
    rate_stderr: float
    rate_ci95: tuple[float, float]
    initial_visibility: float
    initial_stderr: float
    residual_rms: float
    n_points: int


def fit_decay(
    times: Sequence[float] | np.ndarray,
    visibilities: Sequence[float] | np.ndarray,
    stderr: Sequence[float] | np.ndarray | None = None,
) -> DecayFit:
    """Fit an exponential decay to visibility samples.

    Parameters
    ----------
    times:
        Sample times (s).
    visibilities:
        Strictly positive visibility values (log-space fit).
    stderr:
        Optional one-sigma uncertainties of the visibilities.  When given,
        points are weighted by the propagated log-space variance and the
        parameter covariance is taken absolutely; when omitted, uniform
        weights are used and the covariance is scaled by the residual
        variance (requires at least three points).
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(visibilities, dtype=float)
    if t.ndim != 1 or t.shape != v.shape:
        raise ValueError("times and visibilities must be 1-D arrays of equal length")
    if np.any(~np.isfinite(t)) or np.any(~np.isfinite(v)):
        raise ValueError("times and visibilities must be finite")
    if np.any(v <= 0):
        raise ValueError(
            "visibilities must be strictly positive for a log-space fit; "
            "drop non-positive samples before fitting"
        )
    n = t.size
    min_points = 2 if stderr is not None else 3
    if n < min_points:
        raise ValueError(f"need at least {min_points} points, got {n}")
    if np.ptp(t) == 0:
        raise ValueError("times must not all coincide")

    y = np.log(v)
    if stderr is not None:
        s = np.asarray(stderr, dtype=float)
        if s.shape != v.shape:
            raise ValueError("stderr must match the shape of visibilities")
        if np.any(~np.isfinite(s)) or np.any(s <= 0):
            raise ValueError("stderr values must be finite and positive")
        weights = (v / s) ** 2  # 1 / var(log V)
        absolute = True
    else:
        weights = np.ones_like(y)
        absolute = False

    # Weighted straight-line fit y = b0 - rate * t.
    design = np.column_stack([np.ones_like(t), -t])
    wd = design * weights[:, None]
    normal = design.T @ wd
    rhs = wd.T @ y
    coeff = np.linalg.solve(normal, rhs)
    covariance = np.linalg.inv(normal)
    residual = y - design @ coeff
    chi2 = float(np.sum(weights * residual**2))
    if not absolute:
        dof = n - 2
        covariance = covariance * (chi2 / dof)

    rate = float(coeff[1])
    rate_stderr = float(math.sqrt(max(covariance[1, 1], 0.0)))
    initial = float(math.exp(coeff[0]))
    initial_stderr = initial * float(math.sqrt(max(covariance[0, 0], 0.0)))
    return DecayFit(
        rate=rate,
        rate_stderr=rate_stderr,
        rate_ci95=(rate - _Z95 * rate_stderr, rate + _Z95 * rate_stderr),
        initial_visibility=initial,
        initial_stderr=initial_stderr,
        residual_rms=float(math.sqrt(chi2 / n)),
        n_points=n,
    )


# ---------------------------------------------------------------------------
# Macroscopicity


def macroscopicity(
    mass: float, radius: float, delta_x: float, duration: float, fraction: float
) -> float:
    """Logarithmic macroscopicity of an observed superposition.

    ``log10( |1/ln f| (M / m_e)^2 (delta_x / R)^2 t / 1 s )`` where ``f`` is
    the retained coherence fraction attributed to hypothetical collapses,
    ``M`` the object mass, ``delta_x`` the superposition branch amplitude,
    ``R`` the object radius and ``t`` the coherence hold time.  The measure
    is invariant under a joint rescaling of ``delta_x`` and ``R``.
    """
    if mass <= 0 or radius <= 0 or delta_x <= 0 or duration <= 0:
        raise ValueError("mass, radius, delta_x and duration must all be positive")
    if not 0.0 < fraction < 1.0:
        raise ValueError(
            f"coherence fraction must lie strictly between 0 and 1, got {fraction}"
        )
    ratio = mass / ELECTRON_MASS
    return math.log10(
        abs(1.0 / math.log(fraction)) * ratio**2 * (delta_x / radius) ** 2 * duration
    )


# ---------------------------------------------------------------------------
# Collapse-parameter exclusion


@dataclass(frozen=True)
class ExclusionRegion:
    """Grid of predicted collapse-induced dephasing rates and exclusion mask.

    ``gamma[i, j]`` is the predicted dephasing rate at localisation length
    ``sigma_values[i]`` and electron coherence time ``tau_e_values[j]``; a
    point is excluded when that rate exceeds ``gamma_bound``.
    """

    sigma_values: np.ndarray
    tau_e_values: np.ndarray
    gamma: np.ndarray
    excluded: np.ndarray
    gamma_bound: float
    grw_gamma: float
    adler_gamma: float
    grw_excluded: bool
    adler_excluded: bool
    macroscopicity: float
    warnings: tuple[str, ...] = ()


def exclusion_region(
    gamma_bound: float,
    modes: ModeStructure,
    alpha_final: complex,
    sigma_values: Sequence[float] | np.ndarray,
    tau_e_values: Sequence[float] | np.ndarray,
    *,
    flake_radius: float,
    t_split: float | None = None,
) -> ExclusionRegion:
    """Collapse parameters excluded by bounding the dephasing rate.

    The predicted rate at localisation length ``sigma`` and electron
    coherence time ``tau_e`` is ``(|alpha_final| x0_i b2 / sigma)^2 (M /
    m_e)^2 / tau_e``: the squared phase-kick scale per collapse event times
    the mass-amplified event rate of the composite object.  The reported
    macroscopicity uses the convention of a coherence fraction 1/e at hold
    time ``1 / gamma_bound`` with the full flake branch amplitude.
    """
    if gamma_bound <= 0:
        raise ValueError("gamma_bound must be positive")
    sigma = np.asarray(sigma_values, dtype=float)
    tau_e = np.asarray(tau_e_values, dtype=float)
    if sigma.ndim != 1 or tau_e.ndim != 1 or sigma.size == 0 or tau_e.size == 0:
        raise ValueError("sigma_values and tau_e_values must be non-empty 1-D arrays")
    if np.any(sigma <= 0) or np.any(tau_e <= 0):
        raise ValueError("sigma and tau_e values must be positive")
    if flake_radius <= 0:
        raise ValueError("flake_radius must be positive")

    kick_length = modes.x0_i * abs(modes.b2i)  # flake length scale per unit amplitude
    amp = abs(complex(alpha_final))
    mass_ratio = modes.flake.mass / ELECTRON_MASS

    def predicted_rate(sig: np.ndarray | float, tau: np.ndarray | float):
        return (amp * kick_length / sig) ** 2 * mass_ratio**2 / tau

    gamma = np.outer(predicted_rate(sigma, 1.0), 1.0 / tau_e)
    excluded = gamma > gamma_bound

    grw_gamma = float(predicted_rate(*GRW_POINT))
    adler_gamma = float(predicted_rate(*ADLER_POINT))

    if math.isfinite(gamma_bound):
        big_m = macroscopicity(
            mass=modes.flake.mass,
            radius=flake_radius,
            delta_x=2.0 * amp * kick_length,
            duration=1.0 / gamma_bound,
            fraction=math.exp(-1.0),
        )
    else:
        big_m = float("nan")

    warnings: list[str] = []
    if t_split is not None and math.isfinite(gamma_bound) and gamma_bound * t_split > 1.0:
        warnings.append(
            f"gamma_bound {gamma_bound:.4g}/s implies a coherence time "
            f"{1.0 / gamma_bound:.4g} s shorter than the splitting time "
            f"{t_split:.4g} s; the interferometer cannot certify a bound that large"
        )

    return ExclusionRegion(
        sigma_values=sigma,
        tau_e_values=tau_e,
        gamma=gamma,
        excluded=excluded,
        gamma_bound=float(gamma_bound),
        grw_gamma=grw_gamma,
        adler_gamma=adler_gamma,
        grw_excluded=bool(grw_gamma > gamma_bound),
        adler_excluded=bool(adler_gamma > gamma_bound),
        macroscopicity=big_m,
        warnings=tuple(warnings),
    )


# ---------------------------------------------------------------------------
# Environmental decoherence budget


@dataclass(frozen=True)
class Environment:
    """Residual-gas and readout-circuit environment of the trap.

    Attributes
    ----------
    pressure:
        Residual gas pressure (Pa).
    gas_temperature:
        Residual gas temperature (K).
    gas_molecule_mass:
        Mean molecular mass of the residual gas (kg); defaults to air.
    circuit_inductance:
        Effective inductance of the trap readout circuit (H).
    circuit_frequency:
        Resonance frequency of the readout circuit (rad/s).
    circuit_temperature:
        Temperature of the readout circuit (K).
    endcap_distance:
        Electrode separation (m) used to convert the oscillating charge
        velocity into an induced image current.
    induced_current:
        Optional direct value of the induced image current amplitude (A);
        when ``None`` the current is computed as Q v / D.
    """

    pressure: float = 1.0e-14
    gas_temperature: float = 293.0
    gas_molecule_mass: float = 28.97 * ATOMIC_MASS
    circuit_inductance: float = 4.0e-6
    circuit_frequency: float = 2.0 * math.pi * 1.0e6
    circuit_temperature: float = 1.0
    endcap_distance: float = 1.11e-3
    induced_current: float | None = None

    def __post_init__(self) -> None:
        if self.pressure < 0:
            raise ValueError("pressure must be non-negative")
        if self.gas_temperature <= 0 or self.circuit_temperature <= 0:
            raise ValueError("temperatures must be positive")
        if self.gas_molecule_mass <= 0:
            raise ValueError("gas molecule mass must be positive")
        if self.circuit_inductance <= 0 or self.circuit_frequency <= 0:
            raise ValueError("circuit inductance and frequency must be positive")
        if self.endcap_distance <= 0:
            raise ValueError("endcap distance must be positive")
        if self.induced_current is not None and self.induced_current < 0:
            raise ValueError("induced current must be non-negative when given")


@dataclass(frozen=True)
class DecoherenceBudget:
    """Known environmental decoherence channels and their magnitudes.

    Rates are compared against :data:`GAMMA_TARGET_RANGE`; dimensionless
    figures against unity; temperature thresholds against the actual
    environment temperatures.
    """

    environment: Environment
    flake_radius: float
    delta_x: float
    charge: float
    gas_rate: float
    debroglie_temperature: float
    photon_temperature: float
    flake_velocity: float
    induced_current: float
    ramo_figure: float
    notes: tuple[str, ...] = field(default_factory=tuple)

    def rows(self) -> list[dict[str, object]]:
        """Per-mechanism summary rows for reporting."""
        floor, ceiling = GAMMA_TARGET_RANGE

        def rate_status(rate: float) -> str:
            if rate <= floor:
                return "pass"
            if rate <= ceiling:
                return "marginal"
            return "fail"

        suppressed = self.environment.gas_temperature <= self.debroglie_temperature
        photon_safe = (
            max(self.environment.gas_temperature, self.environment.circuit_temperature)
            < 0.1 * self.photon_temperature
        )
        if self.ramo_figure < 0.1:
            ramo_status = "pass"
        elif self.ramo_figure < 1.0:
            ramo_status = "marginal"
        else:
            ramo_status = "fail"
        return [
            {
                "mechanism": "gas_collisions",
                "value": self.gas_rate,
                "unit": "1/s",
                "status": rate_status(self.gas_rate),
                "note": (
                    f"off-diagonal decay from residual-gas collisions at "
                    f"{self.environment.pressure:.3e} Pa; target range "
                    f"{floor:g}-{ceiling:g} 1/s"
                ),
            },
            {
                "mechanism": "gas_de_broglie_threshold",
                "value": self.debroglie_temperature,
                "unit": "K",
                "status": "suppressing" if suppressed else "not-suppressing",
                "note": (
                    "below this gas temperature the thermal de Broglie wavelength "
                    "exceeds the branch amplitude and collisional which-path "
                    "information is suppressed"
                ),
            },
            {
                "mechanism": "thermal_photons",
                "value": self.photon_temperature,
                "unit": "K",
                "status": "pass" if photon_safe else "fail",
                "note": (
                    "radiation temperature needed for thermal photons to resolve "
                    "the superposition separation"
                ),
            },
            {
                "mechanism": "shockley_ramo",
                "value": self.ramo_figure,
                "unit": "dimensionless",
                "status": ramo_status,
                "note": (
                    f"induced-current figure of merit (must be << 1); image current "
                    f"{self.induced_current:.3e} A"
                ),
            },
        ]


def decoherence_budget(
    environment: Environment,
    modes: ModeStructure,
    delta_x: float,
    *,
    flake_radius: float,
    charge: float | None = None,
) -> DecoherenceBudget:
    """Evaluate the known environmental decoherence channels.

    Parameters
    ----------
    environment:
        Gas and circuit conditions.
    modes:
        Crystal normal-mode structure (supplies the in-phase frequency and
        the flake charge default).
    delta_x:
        Single-branch flake oscillation amplitude (m); the superposition
        separation is twice this.
    flake_radius:
        Flake radius (m) entering the collision cross-section.
    charge:
        Flake charge (C); defaults to the charge recorded in ``modes``.

    Notes
    -----
    Gas collisions: rate = (16 pi sqrt(2 pi) / 3) P R^2 / sqrt(m_gas k_B T).
    De Broglie threshold: temperature where pi hbar / sqrt(2 pi m_gas k_B T)
    equals ``delta_x``.  Thermal photons: temperature where the thermal
    wavelength matches the separation ``2 delta_x``.  Induced image
    current: I = Q v / D at peak velocity v = omega_i delta_x, compared to
    the zero-point current of the readout circuit with a thermal coth
    enhancement.
    """
    if delta_x <= 0:
        raise ValueError("delta_x must be positive")
    if flake_radius <= 0:
        raise ValueError("flake_radius must be positive")
    q = modes.flake.charge if charge is None else charge
    if q <= 0:
        raise ValueError("charge must be positive")

    env = environment
    gas_rate = (
        _GAS_RATE_PREFACTOR
        * env.pressure
        * flake_radius**2
        / math.sqrt(env.gas_molecule_mass * BOLTZMANN * env.gas_temperature)
    )
    debroglie_temperature = (
        math.pi * HBAR**2 / (2.0 * env.gas_molecule_mass * BOLTZMANN * delta_x**2)
    )
    photon_temperature = HBAR * SPEED_OF_LIGHT / (BOLTZMANN * 2.0 * delta_x)

    velocity = modes.omega_i * delta_x
    if env.induced_current is not None:
        current = env.induced_current
    else:
        current = q * velocity / env.endcap_distance
    zero_point_current = math.sqrt(
        HBAR * env.circuit_frequency / env.circuit_inductance
    )
    thermal_factor = 1.0 / math.tanh(
        HBAR * env.circuit_frequency / (2.0 * BOLTZMANN * env.circuit_temperature)
    )
    ramo_figure = (current / zero_point_current) * thermal_factor

    notes: list[str] = []
    floor = GAMMA_TARGET_RANGE[0]
    if gas_rate > 0:
        pressure_for_floor = env.pressure * floor / gas_rate
        notes.append(
            f"a gas-collision rate of {floor:g} 1/s would correspond to a pressure "
            f"of {pressure_for_floor:.3e} Pa at this geometry and temperature"
        )
    if env.induced_current is not None:
        computed = q * velocity / env.endcap_distance
        notes.append(
            f"induced current overridden to {env.induced_current:.3e} A; "
            f"Q v / D with D = {env.endcap_distance:.3e} m gives {computed:.3e} A"
        )

    return DecoherenceBudget(
        environment=env,
        flake_radius=flake_radius,
        delta_x=delta_x,
        charge=q,
        gas_rate=gas_rate,
        debroglie_temperature=debroglie_temperature,
        photon_temperature=photon_temperature,
        flake_velocity=velocity,
        induced_current=current,
        ramo_figure=ramo_figure,
        notes=tuple(notes),
    )
