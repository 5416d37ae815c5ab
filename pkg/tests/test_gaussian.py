"""Phase-space composition algebra and exact propagation.

Composition rules are cross-checked against dense truncated-basis matrix
products; the propagator is cross-checked against direct integration of
the number-basis Schroedinger equation and against closed-form limits.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
import pytest

from cotrap.errors import PhysicsValidityError
from cotrap.fock import (
    ansatz_state,
    matrix_displacement,
    matrix_squeeze,
    propagate_numeric,
    vacuum_state,
)
from cotrap.gaussian import (
    DriveFunction,
    GaussianPropagator,
    Tone,
    displace_compose,
    propagate,
    propagate_sampled,
    pull_displacement_through_squeeze,
    squeeze_compose,
    tau_to_zeta,
    zeta_to_tau,
)

TWO_PI = 2.0 * math.pi
RNG = np.random.default_rng(20260816)


def disc(radius: float) -> complex:
    r = radius * math.sqrt(RNG.uniform())
    th = RNG.uniform(0.0, TWO_PI)
    return cmath.rect(r, th)


# ---------------------------------------------------------------------------
# composition algebra


def test_displace_compose_identity_and_inverse():
    a = 1.3 - 0.4j
    summed, phase = displace_compose(a, 0.0)
    assert summed == pytest.approx(a) and phase == pytest.approx(0.0)
    summed, phase = displace_compose(a, -a)
    assert abs(summed) < 1e-15


def test_displace_compose_phase_antisymmetric():
    a, b = 1.1 + 0.2j, -0.4 + 0.9j
    _, phase_ab = displace_compose(a, b)
    _, phase_ba = displace_compose(b, a)
    assert phase_ab == pytest.approx(-phase_ba, abs=1e-14)


@pytest.mark.parametrize("trial", range(12))
def test_displace_compose_matches_matrix_product(trial):
    a, b = disc(2.0), disc(2.0)
    summed, phase = displace_compose(a, b)
    dim, blk = 60, 12
    lhs = matrix_displacement(a, dim).matrix @ matrix_displacement(b, dim).matrix
    rhs = cmath.exp(1j * phase) * matrix_displacement(summed, dim).matrix
    assert np.max(np.abs((lhs - rhs)[:blk, :blk])) < 1e-8


def test_squeeze_compose_identity_element():
    tau = 0.25 * cmath.exp(0.4j)
    tau3, c = squeeze_compose(tau, 0.0)
    assert tau3 == pytest.approx(tau) and abs(c) < 1e-15


@pytest.mark.parametrize("trial", range(12))
def test_squeeze_compose_matches_matrix_product(trial):
    tau1, tau2 = disc(0.4), disc(0.4)
    tau3, c = squeeze_compose(tau1, tau2)
    assert abs(c.real) < 1e-12  # the induced number factor is a pure rotation
    dim, blk = 60, 12
    lhs = (
        matrix_squeeze(tau_to_zeta(tau1), dim).matrix
        @ matrix_squeeze(tau_to_zeta(tau2), dim).matrix
    )
    number_factor = np.exp(c * (np.arange(dim) + 0.5))
    rhs = matrix_squeeze(tau_to_zeta(tau3), dim).matrix * number_factor[None, :]
    assert np.max(np.abs((lhs - rhs)[:blk, :blk])) < 1e-8


@pytest.mark.parametrize("trial", range(12))
def test_interchange_matches_matrix_product(trial):
    gamma, tau = disc(2.0), disc(0.4)
    alpha = pull_displacement_through_squeeze(gamma, tau)
    dim, blk = 60, 12
    smat = matrix_squeeze(tau_to_zeta(tau), dim).matrix
    lhs = matrix_displacement(alpha, dim).matrix @ smat
    rhs = smat @ matrix_displacement(gamma, dim).matrix
    assert np.max(np.abs((lhs - rhs)[:blk, :blk])) < 1e-8


def test_tau_zeta_round_trip():
    for _ in range(20):
        tau = disc(0.95)
        assert zeta_to_tau(tau_to_zeta(tau)) == pytest.approx(tau, abs=1e-12)
    zeta = 1.2 * cmath.exp(-0.7j)
    assert tau_to_zeta(zeta_to_tau(zeta)) == pytest.approx(zeta, abs=1e-12)


# ---------------------------------------------------------------------------
# propagation


def make_drive(omega, n_periods, f_amp, g_amp, f_phase=0.0, g_phase=0.0):
    duration = TWO_PI * n_periods / omega
    f_tones = (Tone(amplitude=f_amp, frequency=omega, phase=f_phase),) if f_amp else ()
    g_tones = (
        (Tone(amplitude=g_amp, frequency=2 * omega, phase=g_phase),) if g_amp else ()
    )
    return DriveFunction(
        omega=omega, t_start=0.0, t_end=duration, f_tones=f_tones, g_tones=g_tones
    )


def test_zero_drive_is_identity():
    omega = TWO_PI * 1e6
    drive = make_drive(omega, 3, 0.0, 0.0)
    out = propagate(GaussianPropagator.identity(omega), drive)
    assert abs(out.alpha) < 1e-12 and abs(out.tau) < 1e-12
    assert abs(out.phi) < 1e-12 and abs(out.chi) < 1e-12


def test_resonant_force_displacement_growth_rate():
    # A resonant force tone A sin(omega t) displaces at rate A/2 in the
    # rotating frame; whole-period durations cancel the micromotion.
    omega = TWO_PI * 1e6
    n, amp = 4, omega * 1e-5
    drive = make_drive(omega, n, amp, 0.0)
    out = propagate(GaussianPropagator.identity(omega), drive)
    expected = 0.5 * amp * (TWO_PI * n / omega)
    assert abs(out.alpha) == pytest.approx(expected, rel=1e-4)
    assert abs(out.tau) < 1e-9


def test_resonant_parametric_squeeze_growth_rate():
    # A parametric tone at 2 omega squeezes at rate g/2: |zeta| = g t / 2.
    omega = TWO_PI * 1e6
    n, g_amp = 4, omega * 1e-5
    drive = make_drive(omega, n, 0.0, g_amp)
    out = propagate(GaussianPropagator.identity(omega), drive)
    expected = 0.5 * g_amp * (TWO_PI * n / omega)
    assert out.squeeze_magnitude == pytest.approx(expected, rel=1e-3)
    assert abs(out.alpha) < 1e-9


@pytest.mark.parametrize("trial", range(3))
def test_end_state_matches_direct_integration(trial):
    omega = TWO_PI * 1e6
    drive = make_drive(
        omega,
        3,
        omega * RNG.uniform(0.5e-5, 2e-5),
        omega * RNG.uniform(0.5e-5, 2e-5),
        RNG.uniform(0, TWO_PI),
        RNG.uniform(0, TWO_PI),
    )
    final = propagate(GaussianPropagator.identity(omega), drive)
    dim = 120
    ansatz = ansatz_state(final.phi, final.alpha, final.tau, final.chi, dim)
    numeric = propagate_numeric(vacuum_state(dim), drive, omega, (0.0, drive.t_end))
    assert numeric.fidelity(ansatz) > 1 - 1e-6


def test_propagate_sampled_consistent_with_propagate():
    omega = TWO_PI * 1e6
    drive = make_drive(omega, 3, omega * 1e-5, omega * 0.5e-5, 0.7, 1.9)
    grid = np.linspace(0.0, drive.t_end, 97)
    traj = propagate_sampled(GaussianPropagator.identity(omega), drive, grid)
    end = propagate(GaussianPropagator.identity(omega), drive)
    assert traj.alpha[-1] == pytest.approx(end.alpha, abs=1e-9)
    assert traj.tau[-1] == pytest.approx(end.tau, abs=1e-9)
    assert traj.phi[-1] == pytest.approx(end.phi, abs=1e-9)
    assert traj.final.alpha == pytest.approx(end.alpha, abs=1e-9)
    # segment splitting composes exactly: propagate to t_mid, then onward
    t_mid = grid[48]
    first = propagate(
        GaussianPropagator.identity(omega),
        DriveFunction(drive.f_tones, drive.g_tones, 0.0, t_mid, omega),
    )
    second = propagate(
        first, DriveFunction(drive.f_tones, drive.g_tones, t_mid, drive.t_end, omega)
    )
    assert second.alpha == pytest.approx(end.alpha, abs=1e-9)
    assert second.tau == pytest.approx(end.tau, abs=1e-9)
    assert second.phi == pytest.approx(end.phi, abs=1e-9)


def test_runaway_squeeze_raises_validity_error():
    # |tau| -> 1 is an unphysical parametric runaway; it must be reported
    # as a physics-validity failure, not silently produce garbage.
    omega = TWO_PI * 1e6
    # |zeta| grows at g/2, so this drive would reach |zeta| ~ 24 and
    # |tau| = tanh|zeta| crosses the guard threshold long before the end.
    drive = make_drive(omega, 1500, 0.0, omega * 5e-3)
    with pytest.raises(PhysicsValidityError):
        propagate(GaussianPropagator.identity(omega), drive)


def test_state_phase_combines_global_and_rotation_phase():
    state = GaussianPropagator(
        alpha=0.3, tau=0.1j, phi=0.25, chi=0.4, t=0.0, omega=TWO_PI * 1e6
    )
    assert state.state_phase == pytest.approx(0.25 - 0.2)
