"""Truncated number-basis oracle for single-mode evolution.

This module is deliberately independent of the analytic propagator in
:mod:`cotrap.gaussian`: it builds dense matrix exponentials of the raw
generators and integrates the Schroedinger equation directly in a truncated
number basis.  Every closed-form identity and phase convention used elsewhere
in the package is pinned by comparison against this module.

Conventions
-----------
Displacement      D(alpha) = exp(alpha a^dag - alpha* a)
Squeeze           S(zeta)  = exp((zeta* a^2 - zeta a^dag^2)/2),  zeta = r e^{i theta}
Number rotation   R(chi)   = exp(-i chi (n + 1/2))
Drive Hamiltonian H(t)/hbar = f(t) (a e^{i w t} + a^dag e^{-i w t})
                            + g(t)/2 (a e^{i w t} + a^dag e^{-i w t})^2

The interaction-picture Hamiltonian above is the single-mode role of both the
spin-dependent force (linear term) and the parametric modulation (quadratic
term).  Expanding the square gives a^2 e^{2iwt} + a^dag^2 e^{-2iwt} + 2n + 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import OracleError

__all__ = [
    "TruncatedOperator",
    "TruncatedState",
    "ladder",
    "matrix_displacement",
    "matrix_squeeze",
    "matrix_rotation",
    "ansatz_state",
    "vacuum_state",
    "propagate_numeric",
    "thermal_overlap",
    "thermal_weights",
    "truncation_stable",
]

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
MAX_DIMENSION = 512


@dataclass(frozen=True)
class TruncatedOperator:
    """A dense operator on the lowest ``dimension`` number states."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("operator matrix must be square")
        if m.shape[0] > MAX_DIMENSION:
            raise ValueError(f"dimension {m.shape[0]} exceeds {MAX_DIMENSION}")
        object.__setattr__(self, "matrix", m)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def unitarity_defect(self) -> float:
        """Spectral-free measure of how far the operator is from unitary.

        Returns max |(U^dag U - 1)_{jk}| over the lower 80% of the basis,
        where truncation effects are not expected to dominate.
        """
        prod = self.matrix.conj().T @ self.matrix
        n_keep = int(0.8 * self.dimension)
        defect = prod - np.eye(self.dimension)
        return float(np.max(np.abs(defect[:n_keep, :n_keep])))


@dataclass
class TruncatedState:
    """A normalised state vector on the lowest ``dimension`` number states."""

    vector: np.ndarray
    tail_fraction: float = field(default=0.8, repr=False)

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=complex)
        if v.ndim != 1:
            raise ValueError("state vector must be one-dimensional")
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > 1e-8:
            raise ValueError(f"state norm {norm} deviates from 1 by more than 1e-8")
        self.vector = v

    @property
    def dimension(self) -> int:
        return self.vector.shape[0]

    def tail_mass(self) -> float:
        """Probability carried by number states above ``tail_fraction * N``."""
        cut = int(self.tail_fraction * self.dimension)
        return float(np.sum(np.abs(self.vector[cut:]) ** 2))

    def overlap(self, other: "TruncatedState") -> complex:
        """Complex overlap <self|other>."""
        if other.dimension != self.dimension:
            raise ValueError("dimension mismatch")
        return complex(np.vdot(self.vector, other.vector))

    def fidelity(self, other: "TruncatedState") -> float:
        return abs(self.overlap(other)) ** 2


def ladder(dimension: int) -> np.ndarray:
    """Annihilation operator a on ``dimension`` number states."""
    return np.diag(np.sqrt(np.arange(1, dimension, dtype=float)), k=1).astype(complex)


def matrix_displacement(alpha: complex, dimension: int) -> TruncatedOperator:
    """D(alpha) = exp(alpha a^dag - alpha* a) as a dense matrix exponential."""
    a = ladder(dimension)
    gen = alpha * a.conj().T - np.conj(alpha) * a
    return TruncatedOperator(expm(gen))


def matrix_squeeze(zeta: complex, dimension: int) -> TruncatedOperator:
    """S(zeta) = exp((zeta* a^2 - zeta a^dag^2)/2) as a dense matrix exponential."""
    a = ladder(dimension)
    a2 = a @ a
    gen = 0.5 * (np.conj(zeta) * a2 - zeta * a2.conj().T)
    return TruncatedOperator(expm(gen))


def matrix_rotation(chi: float, dimension: int) -> TruncatedOperator:
    """R(chi) = exp(-i chi (n + 1/2)) as a diagonal matrix."""
    n = np.arange(dimension, dtype=float)
    return TruncatedOperator(np.diag(np.exp(-1j * chi * (n + 0.5))))


def vacuum_state(dimension: int) -> TruncatedState:
    v = np.zeros(dimension, dtype=complex)
    v[0] = 1.0
    return TruncatedState(v)


def ansatz_state(
    phi: float,
    alpha: complex,
    tau: complex,
    chi: float,
    dimension: int,
) -> TruncatedState:
    """Build e^{i phi} D(alpha) S(zeta) R(chi) |0> in the truncated basis.

    ``tau = e^{i theta} tanh r`` parametrises the squeeze; ``|tau| >= 1`` is
    outside the physical domain and raises ``ValueError``.
    """
    mag = abs(tau)
    if mag >= 1.0:
        raise ValueError(f"|tau| = {mag} is not inside the unit disc")
    r = float(np.arctanh(mag))
    theta = float(np.angle(tau)) if mag > 0 else 0.0
    zeta = r * np.exp(1j * theta)
    d = matrix_displacement(alpha, dimension).matrix
    s = matrix_squeeze(zeta, dimension).matrix
    vac = np.zeros(dimension, dtype=complex)
    vac[0] = np.exp(1j * (phi - 0.5 * chi))  # R(chi)|0> = e^{-i chi/2}|0>
    vec = d @ (s @ vac)
    norm = float(np.linalg.norm(vec))
    if abs(norm - 1.0) > 1e-6:
        raise OracleError(
            f"ansatz state norm {norm} deviates from 1; basis of dimension "
            f"{dimension} too small for alpha={alpha}, tau={tau}"
        )
    return TruncatedState(vec / norm)


def _as_drive_callables(drive) -> tuple[Callable[[float], float], Callable[[float], float]]:
    """Accept either an object with .f/.g methods or a plain (f, g) pair."""
    if hasattr(drive, "f") and hasattr(drive, "g"):
        return drive.f, drive.g
    f, g = drive
    return f, g


def propagate_numeric(
    initial: TruncatedState,
    drive,
    omega: float,
    t_span: tuple[float, float],
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> TruncatedState:
    """Integrate the Schroedinger equation for the drive Hamiltonian.

    Parameters
    ----------
    initial:
        State at ``t_span[0]``.
    drive:
        Object with scalar methods ``f(t)`` and ``g(t)`` (rad/s), or a plain
        ``(f, g)`` tuple of callables.
    omega:
        Mode angular frequency entering the interaction-picture phases (rad/s).
    t_span:
        ``(t0, t1)`` integration window in seconds.

    The right-hand side is evaluated matrix-free (shifted slices instead of
    matrix products), so the cost per step is O(N).
    """
    f_of_t, g_of_t = _as_drive_callables(drive)
    dim = initial.dimension
    root_n = np.sqrt(np.arange(1, dim, dtype=float))  # sqrt(1..N-1)
    root_nn = root_n[:-1] * root_n[1:]  # sqrt((n+1)(n+2)) for a^2
    n_diag = np.arange(dim, dtype=float)

    def rhs(t: float, psi: np.ndarray) -> np.ndarray:
        f = f_of_t(t)
        g = g_of_t(t)
        ph = np.exp(1j * omega * t)
        a_psi = np.zeros(dim, dtype=complex)
        a_psi[:-1] = root_n * psi[1:]
        adag_psi = np.zeros(dim, dtype=complex)
        adag_psi[1:] = root_n * psi[:-1]
        h_psi = f * (ph * a_psi + np.conj(ph) * adag_psi)
        if g != 0.0:
            a2_psi = np.zeros(dim, dtype=complex)
            a2_psi[:-2] = root_nn * psi[2:]
            adag2_psi = np.zeros(dim, dtype=complex)
            adag2_psi[2:] = root_nn * psi[:-2]
            h_psi += 0.5 * g * (
                ph * ph * a2_psi
                + np.conj(ph) * np.conj(ph) * adag2_psi
                + (2.0 * n_diag + 1.0) * psi
            )
        return -1j * h_psi

    sol = solve_ivp(
        rhs,
        t_span,
        initial.vector,
        method="DOP853",
        rtol=rtol,
        atol=atol,
        dense_output=False,
    )
    if not sol.success:
        raise OracleError(f"numeric propagation failed: {sol.message}")
    final = sol.y[:, -1]
    norm = float(np.linalg.norm(final))
    if abs(norm - 1.0) > 1e-6:
        raise OracleError(f"numeric propagation lost norm: {norm}")
    return TruncatedState(final / norm)


def thermal_weights(nbar: float, dimension: int) -> np.ndarray:
    """Renormalised geometric occupation weights of a thermal state.

    w_n proportional to q^n with q = nbar/(1+nbar), normalised over the
    truncated basis so the weights always sum to exactly 1.
    """
    if nbar < 0:
        raise ValueError("nbar must be non-negative")
    if nbar == 0:
        w = np.zeros(dimension)
        w[0] = 1.0
        return w
    q = nbar / (1.0 + nbar)
    w = q ** np.arange(dimension, dtype=float)
    return w / w.sum()


def thermal_overlap(operator: TruncatedOperator, nbar: float) -> complex:
    """Tr{ O rho_th } for a thermal state with mean occupation ``nbar``."""
    w = thermal_weights(nbar, operator.dimension)
    return complex(np.sum(w * np.diag(operator.matrix)))


def truncation_stable(values: Sequence[complex], rtol: float = 1e-7) -> bool:
    """True when successive basis-doubled evaluations agree to ``rtol``.

    ``values`` are the same scalar computed at increasing dimensions.  The
    comparison is relative to the largest magnitude in the sequence (with an
    absolute floor at ``rtol`` for values near zero).
    """
    vals = [complex(v) for v in values]
    if len(vals) < 2:
        return True
    scale = max(max(abs(v) for v in vals), 1.0)
    return all(
        abs(vals[i + 1] - vals[i]) <= rtol * scale for i in range(len(vals) - 1)
    )
