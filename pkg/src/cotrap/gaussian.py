"""Exact Gaussian-branch propagation for driven single-mode dynamics.

The interaction-picture Hamiltonian of one motional mode driven by a linear
(spin-dependent) force ``f(t)`` and a quadratic (parametric) modulation
``g(t)`` is

    H(t)/hbar = f(t) (a e^{i w t} + a^dag e^{-i w t})
              + g(t)/2 (a e^{i w t} + a^dag e^{-i w t})^2.

Its propagator stays inside the four-parameter family

    U(t) = e^{i phi} D(alpha) S(zeta) R(chi),
    R(chi) = exp(-i chi (n + 1/2)),     tau = e^{i theta} tanh r,

and the parameters obey the ordinary differential equations

    alpha' = -i [ f e^{-i w t} + g e^{-2i w t} alpha* + g alpha ]
    tau'   =  i g (e^{-i w t} - tau e^{i w t})^2
    phi'   = -f Re(alpha e^{i w t})
    chi'   =  g [ 1 - Re(tau e^{2i w t}) ]

These four equations are derived by two independent routes (infinitesimal
operator composition and the Heisenberg-picture Bogoliubov flow) and are
pinned numerically against direct Schroedinger integration in a truncated
number basis (see :mod:`cotrap.fock` and the test suite).  The branch phase
of the state U|0> is ``phi - chi/2``.

Drives are serialisable sums of sinusoid tones rather than opaque callables,
so schedules can be stored in run manifests and reproduced bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import PhysicsValidityError

__all__ = [
    "TAU_LIMIT",
    "Tone",
    "DriveFunction",
    "GaussianPropagator",
    "Trajectory",
    "displace_compose",
    "squeeze_compose",
    "pull_displacement_through_squeeze",
    "push_displacement_through_squeeze",
    "rotate_displacement",
    "compose",
    "dagger",
    "tau_to_zeta",
    "zeta_to_tau",
    "propagate",
    "propagate_sampled",
    "amplified_displacement",
]

TAU_LIMIT = 1.0 - 1e-9
"""Squeezing parametrisation guard: propagation aborts at |tau| >= TAU_LIMIT."""

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12


# ---------------------------------------------------------------------------
# Drive model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Tone:
    """One sinusoid component ``amplitude * sin(frequency * t - phase)``.

    A constant offset is represented by ``frequency = 0`` with
    ``phase = -pi/2`` (see :meth:`constant`).
    """

    amplitude: float
    frequency: float
    phase: float = 0.0

    @classmethod
    def constant(cls, value: float) -> "Tone":
        return cls(amplitude=value, frequency=0.0, phase=-0.5 * math.pi)

    @classmethod
    def cosine(cls, amplitude: float, frequency: float) -> "Tone":
        """amplitude * cos(frequency * t)."""
        return cls(amplitude=amplitude, frequency=frequency, phase=-0.5 * math.pi)

    def value(self, t):
        return self.amplitude * np.sin(self.frequency * t - self.phase)

    def to_dict(self) -> dict[str, float]:
        return {
            "amplitude": self.amplitude,
            "frequency": self.frequency,
            "phase": self.phase,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Tone":
        return cls(
            amplitude=float(d["amplitude"]),
            frequency=float(d["frequency"]),
            phase=float(d.get("phase", 0.0)),
        )


def _tone_sum(tones: Sequence[Tone], t):
    if not tones:
        return np.zeros_like(np.asarray(t, dtype=float)) if np.ndim(t) else 0.0
    total = tones[0].value(t)
    for tone in tones[1:]:
        total = total + tone.value(t)
    return total


@dataclass(frozen=True)
class DriveFunction:
    """A smooth drive segment on ``[t_start, t_end]``.

    ``f`` (linear force, rad/s) and ``g`` (parametric strength, rad/s) are
    sums of :class:`Tone` components; ``omega`` is the mode frequency that
    enters the interaction-picture phase factors.  Time arguments are
    absolute (the same clock as the interaction picture), not relative to
    ``t_start``.
    """

    f_tones: tuple[Tone, ...]
    g_tones: tuple[Tone, ...]
    t_start: float
    t_end: float
    omega: float

    def __post_init__(self):
        if not (self.t_end > self.t_start):
            raise ValueError("drive segment must have t_end > t_start")
        if not (self.omega > 0):
            raise ValueError("mode frequency omega must be positive")
        object.__setattr__(self, "f_tones", tuple(self.f_tones))
        object.__setattr__(self, "g_tones", tuple(self.g_tones))

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def f(self, t):
        return _tone_sum(self.f_tones, t)

    def g(self, t):
        return _tone_sum(self.g_tones, t)

    def highest_frequency(self) -> float:
        freqs = [self.omega] + [abs(tn.frequency) for tn in self.f_tones + self.g_tones]
        return max(freqs)

    def to_dict(self) -> dict[str, Any]:
        return {
            "f_tones": [tn.to_dict() for tn in self.f_tones],
            "g_tones": [tn.to_dict() for tn in self.g_tones],
            "t_start": self.t_start,
            "t_end": self.t_end,
            "omega": self.omega,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DriveFunction":
        return cls(
            f_tones=tuple(Tone.from_dict(x) for x in d["f_tones"]),
            g_tones=tuple(Tone.from_dict(x) for x in d["g_tones"]),
            t_start=float(d["t_start"]),
            t_end=float(d["t_end"]),
            omega=float(d["omega"]),
        )


# ---------------------------------------------------------------------------
# Propagator parametrisation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianPropagator:
    """Canonical parameters of U = e^{i phi} D(alpha) S(zeta) R(chi).

    ``tau = e^{i theta} tanh r`` encodes the squeeze; ``phi`` is the scalar
    phase of the operator ordering above, and ``chi`` the accumulated number
    rotation.  Only parameter *differences* between the two spin branches are
    physical observables.  ``t`` records the evolution time reached and
    ``omega`` the mode frequency the interaction picture refers to.
    """

    alpha: complex = 0.0 + 0.0j
    tau: complex = 0.0 + 0.0j
    phi: float = 0.0
    chi: float = 0.0
    t: float = 0.0
    omega: float = 1.0

    def __post_init__(self):
        if abs(self.tau) >= 1.0:
            raise ValueError(f"|tau| = {abs(self.tau)} must be < 1")
        if not (self.omega > 0):
            raise ValueError("omega must be positive")

    @classmethod
    def identity(cls, omega: float, t: float = 0.0) -> "GaussianPropagator":
        return cls(alpha=0.0j, tau=0.0j, phi=0.0, chi=0.0, t=t, omega=omega)

    @property
    def zeta(self) -> complex:
        return tau_to_zeta(self.tau)

    @property
    def squeeze_magnitude(self) -> float:
        """r = artanh|tau|, the squeeze parameter magnitude."""
        return float(np.arctanh(abs(self.tau)))

    @property
    def state_phase(self) -> float:
        """Scalar phase of the state U|0> (vacuum input)."""
        return self.phi - 0.5 * self.chi


@dataclass(frozen=True)
class Trajectory:
    """Dense samples of a propagation, plus the final propagator."""

    t: np.ndarray
    alpha: np.ndarray
    tau: np.ndarray
    phi: np.ndarray
    chi: np.ndarray
    final: GaussianPropagator


# ---------------------------------------------------------------------------
# Operator algebra on the canonical parameters
# ---------------------------------------------------------------------------


def tau_to_zeta(tau: complex) -> complex:
    mag = abs(tau)
    if mag >= 1.0:
        raise ValueError("|tau| must be < 1")
    if mag == 0.0:
        return 0.0j
    return float(np.arctanh(mag)) * np.exp(1j * np.angle(tau))


def zeta_to_tau(zeta: complex) -> complex:
    mag = abs(zeta)
    if mag == 0.0:
        return 0.0j
    return float(np.tanh(mag)) * np.exp(1j * np.angle(zeta))


def displace_compose(a: complex, b: complex) -> tuple[complex, float]:
    """Merge displacements: D(a) D(b) = e^{i phase} D(a + b).

    Returns ``(a + b, phase)`` with ``phase = Im(a conj(b))``.
    """
    return a + b, float(np.imag(a * np.conj(b)))


def squeeze_compose(tau1: complex, tau2: complex) -> tuple[complex, complex]:
    """Merge squeezes: S(zeta1) S(zeta2) = S(zeta3) exp(c (n + 1/2)).

    Returns ``(tau3, c)`` with

        tau3 = (tau1 + tau2) / (1 + conj(tau1) tau2),
        c    = log[(1 + tau1 conj(tau2)) / (1 + conj(tau1) tau2)] / 2,

    where ``c`` is purely imaginary.  Raises
    :class:`~cotrap.errors.PhysicsValidityError` when the merged squeeze
    leaves the unit disc.
    """
    denom = 1.0 + np.conj(tau1) * tau2
    tau3 = (tau1 + tau2) / denom
    if abs(tau3) >= 1.0:
        raise PhysicsValidityError(
            f"merged squeeze parameter |tau| = {abs(tau3)} leaves the unit disc"
        )
    c = 0.5 * np.log((1.0 + tau1 * np.conj(tau2)) / denom)
    return complex(tau3), complex(c)


def pull_displacement_through_squeeze(gamma: complex, tau: complex) -> complex:
    """alpha such that D(alpha) S = S D(gamma):  alpha = (gamma - conj(gamma) tau) / sqrt(1 - |tau|^2)."""
    mag2 = abs(tau) ** 2
    if mag2 >= 1.0:
        raise ValueError("|tau| must be < 1")
    return (gamma - np.conj(gamma) * tau) / math.sqrt(1.0 - mag2)


def push_displacement_through_squeeze(alpha: complex, tau: complex) -> complex:
    """gamma such that D(alpha) S = S D(gamma):  gamma = (alpha + conj(alpha) tau) / sqrt(1 - |tau|^2)."""
    mag2 = abs(tau) ** 2
    if mag2 >= 1.0:
        raise ValueError("|tau| must be < 1")
    return (alpha + np.conj(alpha) * tau) / math.sqrt(1.0 - mag2)


def rotate_displacement(alpha: complex, chi: float) -> complex:
    """R(chi) D(alpha) R(-chi) = D(alpha e^{-i chi})."""
    return alpha * np.exp(-1j * chi)


def compose(later: GaussianPropagator, earlier: GaussianPropagator) -> GaussianPropagator:
    """Canonical parameters of the product ``later . earlier``.

    Both operands must refer to the same mode frequency.  The result carries
    ``later``'s time stamp.
    """
    if later.omega != earlier.omega:
        raise ValueError("cannot compose propagators of different mode frequencies")
    # Pull earlier's displacement and squeeze through later's rotation.
    alpha_b = rotate_displacement(earlier.alpha, later.chi)
    tau_b = earlier.tau * np.exp(-2j * later.chi)
    # Pull the displacement through later's squeeze.
    alpha_tilde = pull_displacement_through_squeeze(alpha_b, later.tau)
    # Merge displacements and squeezes.
    alpha_new, d_phase = displace_compose(later.alpha, alpha_tilde)
    tau_new, c = squeeze_compose(later.tau, tau_b)
    chi_extra = -float(np.imag(c))  # exp(c sigma3) = R(-Im c)
    return GaussianPropagator(
        alpha=alpha_new,
        tau=tau_new,
        phi=later.phi + earlier.phi + d_phase,
        chi=later.chi + earlier.chi + chi_extra,
        t=later.t,
        omega=later.omega,
    )


def dagger(u: GaussianPropagator) -> GaussianPropagator:
    """Canonical parameters of the inverse (adjoint) propagator."""
    mag2 = abs(u.tau) ** 2
    root = math.sqrt(1.0 - mag2)
    delta = (-u.alpha - np.conj(u.alpha) * u.tau) / root
    return GaussianPropagator(
        alpha=delta * np.exp(1j * u.chi),
        tau=-u.tau * np.exp(2j * u.chi),
        phi=-u.phi,
        chi=-u.chi,
        t=u.t,
        omega=u.omega,
    )


# ---------------------------------------------------------------------------
# Propagation
# ---------------------------------------------------------------------------


def _rhs(t: float, y: np.ndarray, drive: DriveFunction, omega: float) -> np.ndarray:
    alpha = y[0]
    tau = y[1]
    f = drive.f(t)
    g = drive.g(t)
    e1 = np.exp(-1j * omega * t)  # e^{-i w t}
    e2 = e1 * e1  # e^{-2i w t}
    d_alpha = -1j * (f * e1 + g * e2 * np.conj(alpha) + g * alpha)
    u = e1 - tau * np.conj(e1)
    d_tau = 1j * g * u * u
    d_phi = -f * np.real(alpha * np.conj(e1))  # -f Re(alpha e^{i w t})
    d_chi = g * (1.0 - np.real(tau * np.conj(e2)))  # g [1 - Re(tau e^{2i w t})]
    return np.array([d_alpha, d_tau, d_phi + 0.0j, d_chi + 0.0j])


def _run_ivp(
    state: GaussianPropagator,
    drive: DriveFunction,
    rtol: float,
    atol: float,
    max_step: float | None,
    t_eval: np.ndarray | None,
):
    if abs(state.t - drive.t_start) > 1e-12 * max(1.0, abs(drive.t_start)):
        raise ValueError(
            f"state time {state.t} does not match drive segment start {drive.t_start}"
        )
    omega = state.omega
    if max_step is None:
        max_step = 0.25 * 2.0 * math.pi / (2.0 * drive.highest_frequency())
    y0 = np.array(
        [state.alpha, state.tau, state.phi + 0.0j, state.chi + 0.0j], dtype=complex
    )

    def tau_guard(t, y, *args):
        return TAU_LIMIT - abs(y[1])

    tau_guard.terminal = True
    tau_guard.direction = -1

    sol = solve_ivp(
        _rhs,
        (drive.t_start, drive.t_end),
        y0,
        method="DOP853",
        args=(drive, omega),
        rtol=rtol,
        atol=atol,
        max_step=max_step,
        t_eval=t_eval,
        events=tau_guard,
        dense_output=False,
    )
    if sol.status == 1:  # terminated by the tau guard
        t_fail = float(sol.t_events[0][0])
        raise PhysicsValidityError(
            f"squeezing magnitude reached |tau| = {TAU_LIMIT} at t = {t_fail}; "
            f"the Gaussian parametrisation breaks down",
            time=t_fail,
        )
    if not sol.success:
        raise PhysicsValidityError(f"propagation failed: {sol.message}")
    return sol


def _final_from_solution(sol, omega: float) -> GaussianPropagator:
    yf = sol.y[:, -1]
    return GaussianPropagator(
        alpha=complex(yf[0]),
        tau=complex(yf[1]),
        phi=float(np.real(yf[2])),
        chi=float(np.real(yf[3])),
        t=float(sol.t[-1]),
        omega=omega,
    )


def propagate(
    state: GaussianPropagator,
    drive: DriveFunction,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    max_step: float | None = None,
) -> GaussianPropagator:
    """Evolve the propagator across one drive segment.

    Integration is adaptive eighth-order Runge-Kutta with a step cap at a
    quarter of the fastest drive period.  The run aborts with
    :class:`~cotrap.errors.PhysicsValidityError` (reporting the failure time)
    if the squeeze magnitude reaches the parametrisation boundary.
    """
    sol = _run_ivp(state, drive, rtol, atol, max_step, t_eval=None)
    return _final_from_solution(sol, state.omega)


def propagate_sampled(
    state: GaussianPropagator,
    drive: DriveFunction,
    t_eval: Iterable[float],
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    max_step: float | None = None,
) -> Trajectory:
    """Like :func:`propagate` but also samples the trajectory at ``t_eval``."""
    t_eval = np.asarray(list(t_eval), dtype=float)
    sol = _run_ivp(state, drive, rtol, atol, max_step, t_eval=t_eval)
    return Trajectory(
        t=sol.t.copy(),
        alpha=sol.y[0].copy(),
        tau=sol.y[1].copy(),
        phi=np.real(sol.y[2]).copy(),
        chi=np.real(sol.y[3]).copy(),
        final=_final_from_solution(sol, state.omega),
    )


def propagate_segments(
    state: GaussianPropagator,
    segments: Sequence[DriveFunction],
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> GaussianPropagator:
    """Chain :func:`propagate` across contiguous drive segments."""
    current = state
    for seg in segments:
        current = propagate(current, seg, rtol=rtol, atol=atol)
    return current


def amplified_displacement(gain: float, alpha_sdf: complex) -> complex:
    """Final displacement of the two-half amplification protocol.

    The bare force alone produces ``alpha_sdf``; squeezing to an amplitude
    gain ``G`` during the first half and unsqueezing during the second
    multiplies it by ``(G - 1)/ln G``, which tends to 1 as ``G -> 1``.
    """
    if gain <= 0:
        raise ValueError("gain must be positive")
    x = gain - 1.0
    if abs(x) < 1e-8:
        factor = 1.0 + 0.5 * x  # series limit of (G-1)/ln(G) at G = 1
    else:
        factor = x / math.log(gain)
    return factor * alpha_sdf
