"""Truncated number-basis operators: closed forms, unitarity, stability.

These checks are the independent verification route for the phase-space
algebra: dense matrix exponentials compared against closed-form matrix
elements and against basis-size doubling.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from cotrap.fock import (
    ansatz_state,
    ladder,
    matrix_displacement,
    matrix_rotation,
    matrix_squeeze,
    propagate_numeric,
    thermal_overlap,
    thermal_weights,
    truncation_stable,
    vacuum_state,
)
from cotrap.gaussian import DriveFunction, Tone

TWO_PI = 2.0 * math.pi


def test_ladder_matrix_elements():
    a = ladder(5)
    n = np.arange(5)
    assert np.allclose(a @ np.diag(np.ones(5)), a)
    # a |n> = sqrt(n) |n-1>
    for k in range(1, 5):
        e = np.zeros(5)
        e[k] = 1.0
        out = a @ e
        assert out[k - 1] == pytest.approx(math.sqrt(k))
        assert np.count_nonzero(out) == 1


def test_zero_displacement_and_squeeze_are_identity():
    assert np.allclose(matrix_displacement(0.0, 40).matrix, np.eye(40), atol=1e-14)
    assert np.allclose(matrix_squeeze(0.0, 40).matrix, np.eye(40), atol=1e-14)


def test_vacuum_displacement_matrix_element_closed_form():
    # <0|D(alpha)|0> = exp(-|alpha|^2 / 2), checked across the disc |alpha|<=2
    for alpha in (0.3, 1.0, 2.0, 1.2 + 0.9j, -1.5j, -2.0, 1.4 - 1.4j * 0.1):
        d = matrix_displacement(alpha, 60).matrix
        assert d[0, 0] == pytest.approx(math.exp(-abs(alpha) ** 2 / 2), abs=1e-8)


def test_displacement_column_is_coherent_state():
    # D(alpha)|0> has amplitudes e^{-|a|^2/2} alpha^n / sqrt(n!)
    alpha = 1.1 - 0.7j
    col = matrix_displacement(alpha, 80).matrix[:, 0]
    n = np.arange(80)
    expected = np.exp(-abs(alpha) ** 2 / 2) * alpha**n / np.sqrt(
        np.array([math.factorial(int(k)) for k in n], dtype=float)
    )
    assert np.allclose(col, expected, atol=1e-10)


def test_rotation_is_diagonal_number_phase():
    chi = 0.37
    r = matrix_rotation(chi, 10).matrix
    expected = np.diag(np.exp(-1j * chi * (np.arange(10) + 0.5)))
    assert np.allclose(r, expected, atol=1e-15)


def test_unitarity_defect_small_on_reliable_block():
    assert matrix_displacement(1.5 + 0.5j, 80).unitarity_defect() < 1e-10
    assert matrix_squeeze(0.5j, 80).unitarity_defect() < 1e-10


def test_thermal_overlap_identity_and_vacuum_limit():
    ident = matrix_displacement(0.0, 60)
    assert thermal_overlap(ident, 0.7) == pytest.approx(1.0, abs=1e-12)
    alpha = 1.3 - 0.4j
    d = matrix_displacement(alpha, 120)
    assert abs(thermal_overlap(d, 0.0)) == pytest.approx(
        math.exp(-abs(alpha) ** 2 / 2), abs=1e-10
    )


def test_thermal_overlap_nbar_one_frozen_value():
    # |tr(rho_th D(1))| at nbar=1: exp(-|a|^2 (2 nbar + 1)/2) = exp(-1.5)
    values = [abs(thermal_overlap(matrix_displacement(1.0, n), 1.0)) for n in (100, 200, 400)]
    assert truncation_stable(values, rtol=1e-7)
    assert values[1] == pytest.approx(math.exp(-1.5), rel=1e-9)
    assert values[1] == pytest.approx(0.22313016014842982, rel=1e-9)


def test_thermal_weights_normalised_geometric():
    w = thermal_weights(0.5, 300)
    assert w.sum() == pytest.approx(1.0, abs=1e-12)
    # geometric law: w_{n+1}/w_n = nbar/(nbar+1)
    ratios = w[1:20] / w[:19]
    assert np.allclose(ratios, 0.5 / 1.5, atol=1e-12)


def test_ansatz_state_matches_operator_product():
    phi, alpha, tau, chi = 0.21, 1.2 - 0.5j, 0.3j, 0.4
    state = ansatz_state(phi, alpha, tau, chi, 150)
    assert abs(np.linalg.norm(state.vector) - 1.0) < 1e-9
    zeta = np.arctanh(abs(tau)) * np.exp(1j * np.angle(tau))
    product = (
        np.exp(1j * phi)
        * matrix_displacement(alpha, 150).matrix
        @ matrix_squeeze(zeta, 150).matrix
        @ matrix_rotation(chi, 150).matrix
    )
    expected = product @ vacuum_state(150).vector
    assert np.allclose(state.vector, expected, atol=1e-9)


def test_propagate_numeric_preserves_norm():
    omega = TWO_PI * 1e6
    duration = 3 * TWO_PI / omega
    drive = DriveFunction(
        omega=omega,
        t_start=0.0,
        t_end=duration,
        f_tones=(Tone(amplitude=0.4 * omega / 10, frequency=omega, phase=0.3),),
        g_tones=(Tone(amplitude=0.2 * omega / 10, frequency=2 * omega, phase=1.1),),
    )
    out = propagate_numeric(vacuum_state(120), drive, omega, (0.0, duration))
    assert abs(np.linalg.norm(out.vector) - 1.0) < 1e-8
    assert out.tail_mass() < 1e-10


def test_truncation_stable_flags_drift():
    assert truncation_stable([1.0, 1.0 + 1e-9, 1.0 + 2e-9], rtol=1e-7)
    assert not truncation_stable([1.0, 1.001, 1.002], rtol=1e-7)
