"""Drive-program construction: tones, schedules, mirroring, calibration."""

from __future__ import annotations

import math

import numpy as np
import pytest

from cotrap.drives import (
    CalibrationTones,
    PADrive,
    SDFDrive,
    build_schedule,
    calibrate_closure,
    calibrate_pa_strength,
    mirror_tones,
    outofphase_drives,
    pa_inphase_drive,
    propagate_schedule,
    real_space_amplitude,
    sample_schedule,
    sdf_inphase_drive,
    snapped_time,
    superposition_separation,
)
from cotrap.gaussian import DriveFunction, GaussianPropagator, Tone, propagate

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="module")
def sdf(default_modes):
    # Sized so a bare 6-period resonant split reaches |alpha| ~ 2.
    t_split = snapped_time(default_modes.omega_i, 6)
    rabi = 4.0 / (default_modes.eta_i * t_split)
    return SDFDrive(rabi=rabi, detuning=default_modes.omega_i)


# ---------------------------------------------------------------------------
# tones


def test_tone_conventions():
    t = np.linspace(0.0, 3.0, 11)
    tone = Tone(amplitude=2.0, frequency=1.7, phase=0.3)
    np.testing.assert_allclose(tone.value(t), 2.0 * np.sin(1.7 * t - 0.3))
    np.testing.assert_allclose(Tone.constant(0.8).value(t), 0.8)
    np.testing.assert_allclose(
        Tone.cosine(1.1, 2.2).value(t), 1.1 * np.cos(2.2 * t), atol=1e-15
    )


def test_drive_parameter_validation():
    with pytest.raises(ValueError):
        SDFDrive(rabi=-1.0, detuning=1.0)
    with pytest.raises(ValueError):
        SDFDrive(rabi=1.0, detuning=0.0)
    with pytest.raises(ValueError):
        PADrive(strength=-1.0, modulation_frequency=1.0)
    with pytest.raises(ValueError):
        PADrive(strength=1.0, modulation_frequency=-2.0)
    assert SDFDrive(rabi=1.0, detuning=1.0, phase_up=0.4).phase_down == pytest.approx(
        0.4 + math.pi
    )


def test_snapped_time():
    assert snapped_time(TWO_PI * 10.0, 3) == pytest.approx(0.3)
    assert snapped_time(123.0, 0) == 0.0
    with pytest.raises(ValueError):
        snapped_time(1.0, -1)


def test_sdf_force_tones_spin_antisymmetric(default_modes, sdf):
    tones = CalibrationTones(force_cos=0.1 * sdf.rabi * default_modes.eta_i)
    up = sdf_inphase_drive(sdf, default_modes, "up", tones)
    down = sdf_inphase_drive(sdf, default_modes, "down", tones)
    assert up[0].amplitude == pytest.approx(sdf.rabi * default_modes.eta_i)
    assert up[0].frequency == pytest.approx(sdf.detuning)
    t = np.linspace(0.0, 3.0 / sdf.detuning, 301)
    f_up = sum(tn.value(t) for tn in up)
    f_down = sum(tn.value(t) for tn in down)
    np.testing.assert_allclose(f_down, -f_up, atol=1e-12 * np.max(np.abs(f_up)))


def test_pa_half_phase_flip(default_modes):
    pa = PADrive(strength=500.0, modulation_frequency=2 * default_modes.omega_i)
    g0 = pa_inphase_drive(pa, 0)
    g1 = pa_inphase_drive(pa, 1)
    t = np.linspace(0.0, 5.0 / pa.modulation_frequency, 101)
    np.testing.assert_allclose(
        sum(tn.value(t) for tn in g1),
        -sum(tn.value(t) for tn in g0),
        atol=1e-12 * pa.strength,
    )
    with pytest.raises(ValueError):
        pa_inphase_drive(pa, 2)
    # the calibration tone spans both halves unchanged
    cal = CalibrationTones(squeeze_cos=7.0)
    assert pa_inphase_drive(pa, 0, cal)[-1] == pa_inphase_drive(pa, 1, cal)[-1]
    assert pa_inphase_drive(PADrive(0.0, 1.0), 0) == ()


def test_outofphase_residual_drives(default_modes, sdf):
    pa = PADrive(strength=800.0, modulation_frequency=2 * default_modes.omega_i)
    f_tones, g_tones = outofphase_drives(sdf, pa, default_modes, "up")
    t = np.linspace(0.0, 2.0 / sdf.detuning, 97)
    # laser force tones are the in-phase ones scaled by eta_o / eta_i ...
    scale = default_modes.eta_o / default_modes.eta_i
    f_in = sum(tn.value(t) for tn in sdf_inphase_drive(sdf, default_modes, "up"))
    f_laser = sum(tn.value(t) for tn in f_tones if tn.frequency == sdf.detuning)
    np.testing.assert_allclose(f_laser, scale * f_in, rtol=1e-12)
    # ... plus the parametric cross force at the modulation frequency
    f_cross = [tn for tn in f_tones if tn.frequency == pa.modulation_frequency]
    assert len(f_cross) == 1
    assert f_cross[0].amplitude == pytest.approx(
        pa.strength * default_modes.pa_cross_coupling
    )
    # quadratic laser term: -rabi eta_o^2 cos(delta t - phase)
    g_val = sum(tn.value(t) for tn in g_tones)
    expected = -sdf.rabi * default_modes.eta_o**2 * np.cos(sdf.detuning * t)
    np.testing.assert_allclose(g_val, expected, atol=1e-12 * abs(expected).max())


def test_mirror_tones_pointwise():
    rng = np.random.default_rng(7)
    tones = tuple(
        Tone(rng.uniform(0.5, 2), rng.uniform(1, 5), rng.uniform(0, TWO_PI))
        for _ in range(4)
    )
    t_sum = 11.3
    mirrored = mirror_tones(tones, t_sum)
    t = np.linspace(0.0, t_sum, 257)
    original = sum(tn.value(t_sum - t) for tn in tones)
    np.testing.assert_allclose(
        sum(tn.value(t) for tn in mirrored), original, atol=1e-12
    )


# ---------------------------------------------------------------------------
# schedule assembly


def test_build_schedule_segment_structure(default_modes, sdf):
    pa = PADrive(strength=900.0, modulation_frequency=2 * default_modes.omega_i)
    t_split = snapped_time(default_modes.omega_i, 6)
    sched = build_schedule(sdf, pa, default_modes, t_split, n_hold_periods=2)
    assert set(sched.lanes) == {
        (s, m) for s in ("up", "down") for m in ("in_phase", "out_of_phase")
    }
    assert sched.total_duration == pytest.approx(
        2 * t_split + snapped_time(default_modes.omega_i, 2)
    )
    lane = sched.lane("up", "in_phase")
    assert len(lane) == 5  # split halves, hold, mirrored halves
    for first, second in zip(lane, lane[1:]):
        assert first.t_end == pytest.approx(second.t_start)
    assert lane[0].t_start == 0.0
    assert lane[-1].t_end == pytest.approx(sched.total_duration)
    hold = lane[2]
    assert hold.f_tones == () and hold.g_tones == ()
    # no hold -> four segments; out-of-phase lane optional
    sched0 = build_schedule(
        sdf, pa, default_modes, t_split, include_out_of_phase=False
    )
    assert len(sched0.lane("up", "in_phase")) == 4
    assert ("up", "out_of_phase") not in sched0.lanes


def test_build_schedule_rejects_incommensurate_split(default_modes, sdf):
    pa = PADrive(strength=900.0, modulation_frequency=2 * default_modes.omega_i)
    bad = snapped_time(default_modes.omega_i, 6) * 1.01
    with pytest.raises(ValueError, match="whole number"):
        build_schedule(sdf, pa, default_modes, bad)
    with pytest.raises(ValueError):
        build_schedule(sdf, pa, default_modes, -1.0)
    with pytest.raises(ValueError):
        build_schedule(
            sdf, pa, default_modes, snapped_time(default_modes.omega_i, 6), -3
        )


def test_recombination_is_time_mirror_of_split(default_modes, sdf):
    pa = PADrive(
        strength=900.0, modulation_frequency=2 * default_modes.omega_i, phase=0.6
    )
    t_split = snapped_time(default_modes.omega_i, 6)
    sched = build_schedule(sdf, pa, default_modes, t_split, n_hold_periods=1)
    lane = sched.lane("up", "in_phase")
    t_sum = lane[-1].t_end  # mirror maps recombination onto the split
    for split_seg, rec_seg in ((lane[0], lane[-1]), (lane[1], lane[-2])):
        t = np.linspace(rec_seg.t_start, rec_seg.t_end, 113)
        np.testing.assert_allclose(rec_seg.f(t), split_seg.f(t_sum - t), atol=1e-9)
        np.testing.assert_allclose(rec_seg.g(t), split_seg.g(t_sum - t), atol=1e-9)


def test_propagate_schedule_until_midpoint(default_modes, sdf):
    pa = PADrive(strength=700.0, modulation_frequency=2 * default_modes.omega_i)
    t_split = snapped_time(default_modes.omega_i, 4)
    sched = build_schedule(sdf, pa, default_modes, t_split)
    half = propagate_schedule(sched, "up", until=0.5 * t_split)
    seg = sched.lane("up", "in_phase")[0]
    direct = propagate(GaussianPropagator.identity(default_modes.omega_i), seg)
    assert half.alpha == pytest.approx(direct.alpha, abs=1e-12)
    assert half.tau == pytest.approx(direct.tau, abs=1e-12)


# ---------------------------------------------------------------------------
# calibration and closure


def test_calibrate_pa_strength_hits_gain(default_modes):
    t_split = snapped_time(default_modes.omega_i, 4)
    pa = calibrate_pa_strength(default_modes, t_split, gain_target=3.0)
    half = DriveFunction(
        (), pa_inphase_drive(pa, 0), 0.0, 0.5 * t_split, default_modes.omega_i
    )
    state = propagate(GaussianPropagator.identity(default_modes.omega_i), half)
    assert math.exp(state.squeeze_magnitude) == pytest.approx(3.0, rel=1e-5)
    with pytest.raises(ValueError):
        calibrate_pa_strength(default_modes, t_split, gain_target=0.9)


def test_calibrated_schedule_closes_and_antisymmetric(default_modes, sdf):
    t_split = snapped_time(default_modes.omega_i, 6)
    pa, tones, diag = calibrate_closure(sdf, default_modes, t_split, gain_target=3.0)
    assert diag["gain_measured"] == pytest.approx(3.0, rel=1e-7)
    assert abs(diag["im_tau_mid"]) < 1e-9
    assert abs(diag["im_alpha_end"]) < 1e-9
    sched = build_schedule(
        sdf, pa, default_modes, t_split, n_hold_periods=1, tones=tones,
        include_out_of_phase=False,
    )
    t, a_up, tau_up, _, _, fin_up = sample_schedule(
        sched, "up", samples_per_period=16
    )
    _, a_down, tau_down, _, _, fin_down = sample_schedule(
        sched, "down", samples_per_period=16
    )
    # interferometer closes on both branches
    for fin in (fin_up, fin_down):
        assert abs(fin.alpha) < 1e-6
        assert abs(fin.tau) < 1e-6
    # spin branches are exact mirror images at every sample
    scale = np.max(np.abs(a_up))
    assert scale > 1.0  # the split actually opened
    np.testing.assert_allclose(a_down, -a_up, atol=1e-9 * scale)
    np.testing.assert_allclose(tau_down, tau_up, atol=1e-9)
    # the parametric gain amplified the bare force displacement
    bare = 0.5 * sdf.rabi * default_modes.eta_i * t_split
    gain_factor = (3.0 - 1.0) / math.log(3.0)
    alpha_split = np.abs(a_up[np.searchsorted(t, t_split)])
    assert alpha_split == pytest.approx(bare * gain_factor, rel=0.05)


# ---------------------------------------------------------------------------
# real-space conversion


def test_real_space_amplitude_formulas(default_modes):
    m = default_modes
    cases = {
        ("ion", "in_phase"): (m.b1i, m.x0_i),
        ("flake", "in_phase"): (m.b2i, m.x0_i),
        ("ion", "out_of_phase"): (m.b1o, m.x0_o),
        ("flake", "out_of_phase"): (m.b2o, m.x0_o),
    }
    alpha = 2.0 - 1.5j
    for (which, mode), (b, x0) in cases.items():
        assert real_space_amplitude(alpha, m, which, mode) == pytest.approx(
            2.0 * abs(alpha) * abs(b) * x0
        )
    # antisymmetric branches: separation is twice the one-branch amplitude
    assert superposition_separation(alpha, -alpha, m) == pytest.approx(
        2.0 * real_space_amplitude(alpha, m)
    )
    assert superposition_separation(alpha, alpha, m) == 0.0
