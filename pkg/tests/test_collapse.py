"""Collapse-noise Monte Carlo: samplers, trajectories, ensembles.

The vectorised trajectory reduction is validated against a reference route
that composes each jump into the state mid-integration, and ensemble
statistics are validated against the diffusion law they are meant to obey.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from cotrap.collapse import (
    CollapseModel,
    KickStatistics,
    analytic_decay,
    ensemble_visibility,
    kick_statistics,
    prepare_protocol,
    propagate_with_jumps,
    run_ensemble,
    sample_jump,
    sample_jump_times,
    simulate_trajectory,
)
from cotrap.constants import ELECTRON_MASS, HBAR
from cotrap.drives import PADrive, SDFDrive, build_schedule, snapped_time

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="module")
def sdf_schedule(default_modes):
    """Force-only schedule, 4-period split, 12-period hold (closes exactly)."""
    m = default_modes
    t_split = snapped_time(m.omega_i, 4)
    sdf = SDFDrive(rabi=3.0 / (m.eta_i * t_split), detuning=m.omega_i)
    pa = PADrive(strength=0.0, modulation_frequency=2 * m.omega_i)
    return build_schedule(
        sdf, pa, m, t_split, n_hold_periods=12, include_out_of_phase=False
    )


def make_stats(gamma: float, sigma_alpha: float) -> KickStatistics:
    return KickStatistics(
        gamma=gamma,
        sigma_alpha=sigma_alpha,
        sigma_alpha_out=0.0,
        mass_ratio=1.0,
        sigma=1e-7,
        tau_e=1.0,
    )


# ---------------------------------------------------------------------------
# model parameters and derived statistics


def test_collapse_model_validation():
    model = CollapseModel(tau_e=1e16, sigma=1e-7)
    assert model.sigma_p == pytest.approx(HBAR / 1e-7)
    assert CollapseModel(tau_e=math.inf, sigma=1e-7).tau_e == math.inf
    for bad in (0.0, -1.0, math.nan):
        with pytest.raises(ValueError):
            CollapseModel(tau_e=bad, sigma=1e-7)
        with pytest.raises(ValueError):
            CollapseModel(tau_e=1.0, sigma=bad)


def test_kick_statistics_formulas(default_modes):
    model = CollapseModel(tau_e=1e16, sigma=1e-7)
    stats = kick_statistics(model, default_modes)
    ratio = default_modes.flake.mass / ELECTRON_MASS
    assert stats.gamma == pytest.approx(ratio**2 / 1e16, rel=1e-12)
    assert stats.sigma_alpha == pytest.approx(
        default_modes.x0_i * abs(default_modes.b2i) / 1e-7, rel=1e-12
    )
    assert stats.sigma_alpha_out == pytest.approx(
        default_modes.x0_o * abs(default_modes.b2o) / 1e-7, rel=1e-12
    )
    # the out-of-phase kick scale is suppressed by the tiny flake amplitude
    assert stats.sigma_alpha_out < 1e-3 * stats.sigma_alpha
    doubled = kick_statistics(model, default_modes, flake_mass=2 * default_modes.flake.mass)
    assert doubled.gamma == pytest.approx(4 * stats.gamma, rel=1e-12)
    with pytest.raises(ValueError):
        kick_statistics(model, default_modes, flake_mass=0.0)
    with pytest.warns(UserWarning, match="localisation"):
        kick_statistics(model, default_modes, flake_radius=0.5 * model.sigma)


def test_analytic_decay_closed_form():
    stats = make_stats(gamma=100.0, sigma_alpha=0.02)
    alpha, t = 12.0 + 0j, 1e-3
    sigma0 = 12.0 * 0.02
    decay = analytic_decay(stats, alpha, t)
    assert decay.rate == pytest.approx(sigma0**2 * 100.0)
    assert decay.rate == pytest.approx(stats.dephasing_rate(alpha))
    assert decay.sigma_phi == pytest.approx(sigma0 * math.sqrt(100.0 * t))
    assert decay.visibility == pytest.approx(math.exp(-decay.rate * t))
    with pytest.raises(ValueError):
        analytic_decay(stats, alpha, -1.0)


# ---------------------------------------------------------------------------
# jump sampling


def test_sample_jump_moments():
    stats = make_stats(gamma=1.0, sigma_alpha=0.37)
    rng = np.random.default_rng(5)
    draws = np.array([sample_jump(stats, rng) for _ in range(100_000)])
    assert np.all(draws.real == 0.0)  # momentum-axis kicks only
    n = draws.size
    assert abs(draws.imag.mean()) < 5 * 0.37 / math.sqrt(n)
    assert draws.imag.std() == pytest.approx(0.37, rel=0.01)


def test_sample_jump_times_validation():
    rng = np.random.default_rng(0)
    assert sample_jump_times(0.0, 1.0, rng).size == 0
    assert sample_jump_times(10.0, 0.0, rng).size == 0
    with pytest.raises(ValueError):
        sample_jump_times(-1.0, 1.0, rng)
    with pytest.raises(ValueError):
        sample_jump_times(1.0, -1.0, rng)
    with pytest.raises(ValueError, match="expected jump count"):
        sample_jump_times(1e9, 1.0, rng)
    with pytest.raises(ValueError, match="unknown sampling"):
        sample_jump_times(1.0, 1.0, rng, "gamma")  # type: ignore[arg-type]


@pytest.mark.parametrize("method", ["exponential", "uniform", "bernoulli"])
def test_sample_jump_times_are_sorted_in_range(method):
    rng = np.random.default_rng(11)
    times = sample_jump_times(50.0, 2.0, rng, method)
    assert times.size > 0
    assert np.all(np.diff(times) >= 0)
    assert times[0] >= 0.0 and times[-1] <= 2.0


@pytest.mark.parametrize(
    "method,count_rtol", [("exponential", 0.03), ("uniform", 0.03), ("bernoulli", 0.05)]
)
def test_sample_jump_times_poisson_statistics(method, count_rtol):
    # mean count = rate * duration; variance = mean (Poisson), checked
    # loosely for the two exact samplers.  The per-step Bernoulli sampler
    # carries an O(p) = 2% bias, hence its wider tolerance.
    rng = np.random.default_rng(42)
    rate, duration, reps = 80.0, 1.0, 400
    counts = np.array(
        [sample_jump_times(rate, duration, rng, method).size for _ in range(reps)]
    )
    expected = rate * duration
    assert counts.mean() == pytest.approx(expected, rel=count_rtol)
    if method != "bernoulli":
        assert counts.var(ddof=1) == pytest.approx(expected, rel=0.25)


def test_exponential_and_uniform_agree_in_distribution():
    # same point process by the order-statistics property: compare the mean
    # count and the mean of the times (uniform on [0, T] -> T/2)
    rng = np.random.default_rng(3)
    rate, duration, reps = 60.0, 1.5, 300
    stats = {}
    for method in ("exponential", "uniform"):
        all_times = [sample_jump_times(rate, duration, rng, method) for _ in range(reps)]
        counts = np.array([t.size for t in all_times])
        times = np.concatenate(all_times)
        stats[method] = (counts.mean(), times.mean())
    assert stats["exponential"][0] == pytest.approx(stats["uniform"][0], rel=0.03)
    assert stats["exponential"][1] == pytest.approx(duration / 2, rel=0.03)
    assert stats["uniform"][1] == pytest.approx(duration / 2, rel=0.03)


# ---------------------------------------------------------------------------
# single trajectories


def test_trajectory_deterministic_in_seed(sdf_schedule):
    stats = make_stats(gamma=2e4, sigma_alpha=0.05)
    prep = prepare_protocol(sdf_schedule)
    a = simulate_trajectory(sdf_schedule, stats, 7, prepared=prep)
    b = simulate_trajectory(sdf_schedule, stats, 7, prepared=prep)
    c = simulate_trajectory(sdf_schedule, stats, 8, prepared=prep)
    assert a.phase_difference == b.phase_difference
    assert a.jump_times == b.jump_times
    assert a.jump_amplitudes == b.jump_amplitudes
    assert (
        a.jump_times != c.jump_times or a.phase_difference != c.phase_difference
    )
    with pytest.raises(ValueError):
        simulate_trajectory(sdf_schedule, stats, -1, prepared=prep)


def test_noiseless_trajectory_is_clean(sdf_schedule):
    stats = make_stats(gamma=0.0, sigma_alpha=0.05)
    rec = simulate_trajectory(sdf_schedule, stats, 123)
    assert rec.jump_count == 0
    assert rec.jump_times == ()
    assert rec.jumps_recorded
    # the interferometer closes and the branches pick up equal phases
    assert abs(rec.final_up.alpha) < 1e-8
    assert abs(rec.phase_difference) < 1e-9


def test_phase_only_matches_composition_closed_form(sdf_schedule, default_modes):
    # Each jump k = i kappa at time t contributes the composition phase
    # Im(k e^{-i omega t} conj(alpha_b(t))) = kappa Re(e^{i omega t} alpha_b(t))
    # per branch; with antisymmetric branches the difference is twice the
    # up-branch value.
    from cotrap.drives import sample_schedule

    stats = make_stats(gamma=8.0 / sdf_schedule.total_duration, sigma_alpha=0.04)
    prep = prepare_protocol(sdf_schedule)
    assert prep.paths_antisymmetric
    t, alpha_up, _, _, _, _ = sample_schedule(
        sdf_schedule, "up", samples_per_period=256
    )
    omega = sdf_schedule.omega_in
    for seed in (1, 2, 3, 4):
        rec = simulate_trajectory(sdf_schedule, stats, seed, prepared=prep)
        assert rec.jumps_recorded and rec.jump_count > 0
        expected = 0.0
        for t_j, k in zip(rec.jump_times, rec.jump_amplitudes):
            a_j = np.interp(t_j, t, alpha_up.real) + 1j * np.interp(
                t_j, t, alpha_up.imag
            )
            expected += 2.0 * k.imag * float(np.real(np.exp(1j * omega * t_j) * a_j))
        assert rec.phase_difference == pytest.approx(expected, abs=5e-4 + 1e-3 * abs(expected))


def test_full_displacement_against_reference_propagation(sdf_schedule):
    # The reference route composes each jump into the branch state between
    # exact segment integrations; its phase difference must agree with the
    # vectorised full-displacement reduction, and the common-mode kick
    # displacement must appear in the final state.
    stats = make_stats(gamma=5.0 / sdf_schedule.total_duration, sigma_alpha=0.04)
    prep = prepare_protocol(sdf_schedule, mode="full_displacement")
    for seed in (11, 12, 13):
        rec = simulate_trajectory(
            sdf_schedule, stats, seed, mode="full_displacement", prepared=prep
        )
        assert rec.jump_count > 0
        jumps = list(zip(rec.jump_times, rec.jump_amplitudes))
        ref_up = propagate_with_jumps(sdf_schedule, "up", jumps)
        ref_down = propagate_with_jumps(sdf_schedule, "down", jumps)
        ref_dphi = ref_up.state_phase - ref_down.state_phase
        assert rec.phase_difference == pytest.approx(
            ref_dphi, abs=5e-4 + 1e-3 * abs(ref_dphi)
        )
        # kick displacement is common-mode: equal in both branches, and the
        # reference route reproduces it
        extra = complex(rec.final_up.alpha)
        # equal up to the per-branch noiseless closure residual (~1e-11 here)
        assert rec.final_down.alpha == pytest.approx(extra, abs=1e-9)
        assert complex(ref_up.alpha) == pytest.approx(extra, abs=1e-4)


def test_full_displacement_doubles_phase_only(sdf_schedule):
    # For an exactly recombining protocol the drive-work phase of each kick
    # equals its composition phase, so the branch phase difference in
    # full-displacement accounting is exactly twice the phase-only value.
    stats = make_stats(gamma=6.0 / sdf_schedule.total_duration, sigma_alpha=0.04)
    prep_p = prepare_protocol(sdf_schedule)
    prep_f = prepare_protocol(sdf_schedule, mode="full_displacement")
    for seed in (21, 22, 23, 24):
        rec_p = simulate_trajectory(sdf_schedule, stats, seed, prepared=prep_p)
        rec_f = simulate_trajectory(
            sdf_schedule, stats, seed, mode="full_displacement", prepared=prep_f
        )
        assert rec_p.jump_times == rec_f.jump_times
        if abs(rec_p.phase_difference) < 1e-6:
            continue
        ratio = rec_f.phase_difference / rec_p.phase_difference
        assert ratio == pytest.approx(2.0, rel=2e-3)


def test_full_displacement_needs_matching_preparation(sdf_schedule):
    stats = make_stats(gamma=1e3, sigma_alpha=0.01)
    prep = prepare_protocol(sdf_schedule)  # phase_only preparation
    with pytest.raises(ValueError, match="full_displacement"):
        simulate_trajectory(
            sdf_schedule, stats, 1, mode="full_displacement", prepared=prep
        )


def test_generic_route_matches_closed_form_for_asymmetric_branches(default_modes):
    # Branches that are not exact negatives must fall off the antisymmetric
    # fast path and still reduce to the per-branch composition phases.
    from dataclasses import replace as dc_replace

    from cotrap.drives import sample_schedule

    m = default_modes
    t_split = snapped_time(m.omega_i, 4)
    pa = PADrive(strength=0.0, modulation_frequency=2 * m.omega_i)
    sdf_a = SDFDrive(rabi=3.0 / (m.eta_i * t_split), detuning=m.omega_i)
    sdf_b = SDFDrive(rabi=1.07 * sdf_a.rabi, detuning=m.omega_i)
    sched_a = build_schedule(sdf_a, pa, m, t_split, n_hold_periods=8,
                             include_out_of_phase=False)
    sched_b = build_schedule(sdf_b, pa, m, t_split, n_hold_periods=8,
                             include_out_of_phase=False)
    mixed = dc_replace(
        sched_a,
        lanes={
            ("up", "in_phase"): sched_a.lane("up", "in_phase"),
            ("down", "in_phase"): sched_b.lane("down", "in_phase"),
        },
    )
    prep = prepare_protocol(mixed)
    assert not prep.paths_antisymmetric
    stats = make_stats(gamma=8.0 / mixed.total_duration, sigma_alpha=0.04)
    omega = mixed.omega_in
    paths = {}
    for spin in ("up", "down"):
        t, alpha, _, _, _, _ = sample_schedule(mixed, spin, samples_per_period=256)
        paths[spin] = (t, alpha)
    rec = simulate_trajectory(mixed, stats, 5, prepared=prep)
    assert rec.jump_count > 0
    expected = 0.0
    for t_j, k in zip(rec.jump_times, rec.jump_amplitudes):
        per_branch = []
        for spin in ("up", "down"):
            t, alpha = paths[spin]
            a_j = np.interp(t_j, t, alpha.real) + 1j * np.interp(t_j, t, alpha.imag)
            per_branch.append(k.imag * float(np.real(np.exp(1j * omega * t_j) * a_j)))
        expected += per_branch[0] - per_branch[1]
    noiseless = prep.noiseless_phase_difference
    assert rec.phase_difference - noiseless == pytest.approx(
        expected, abs=5e-4 + 1e-3 * abs(expected)
    )


def test_jump_recording_limit(sdf_schedule):
    stats = make_stats(gamma=30.0 / sdf_schedule.total_duration, sigma_alpha=0.01)
    prep = prepare_protocol(sdf_schedule)
    rec = simulate_trajectory(
        sdf_schedule, stats, 9, max_recorded_jumps=2, prepared=prep
    )
    assert rec.jump_count > 2
    assert not rec.jumps_recorded
    assert rec.jump_times == () and rec.jump_amplitudes == ()
    rec_all = simulate_trajectory(
        sdf_schedule, stats, 9, max_recorded_jumps=None, prepared=prep
    )
    assert rec_all.jumps_recorded
    assert rec_all.jump_count == rec.jump_count
    assert rec_all.phase_difference == rec.phase_difference
    d = rec_all.to_dict()
    assert d["seed"] == 9 and d["jump_count"] == rec.jump_count
    assert len(d["jump_times"]) == rec.jump_count


# ---------------------------------------------------------------------------
# ensembles


def test_ensemble_variance_matches_diffusion_integral(sdf_schedule):
    # Poisson jumps at rate gamma with phase weight w(t) = 2 sigma_a
    # Re(e^{i omega t} alpha_up(t)) give Var(dphi) = gamma int w(t)^2 dt;
    # the ensemble must reproduce that integral, and the fringe contrast
    # the Gaussian relation V = exp(-Var/2).
    from cotrap.drives import sample_schedule

    stats = make_stats(gamma=25.0 / sdf_schedule.total_duration, sigma_alpha=0.05)
    t, alpha_up, _, _, _, _ = sample_schedule(sdf_schedule, "up", samples_per_period=256)
    weight = 2.0 * stats.sigma_alpha * np.real(
        np.exp(1j * sdf_schedule.omega_in * t) * alpha_up
    )
    var_predicted = stats.gamma * np.trapezoid(weight**2, t)
    result = run_ensemble(sdf_schedule, stats, 800, master_seed=2026)
    assert result.mean_jump_count == pytest.approx(25.0, rel=0.05)
    assert result.phase_std**2 == pytest.approx(var_predicted, rel=0.12)
    assert result.visibility.value == pytest.approx(
        math.exp(-0.5 * var_predicted), abs=3 * (result.visibility.stderr or 0.0)
    )


def test_ensemble_worker_count_invariance(sdf_schedule):
    stats = make_stats(gamma=10.0 / sdf_schedule.total_duration, sigma_alpha=0.03)
    prep = prepare_protocol(sdf_schedule)
    serial = run_ensemble(
        sdf_schedule, stats, 130, master_seed=7, workers=1, prepared=prep
    )
    parallel = run_ensemble(
        sdf_schedule, stats, 130, master_seed=7, workers=2, prepared=prep
    )
    np.testing.assert_array_equal(serial.phases, parallel.phases)
    np.testing.assert_array_equal(serial.jump_counts, parallel.jump_counts)
    assert serial.visibility == parallel.visibility


def test_ensemble_validation(sdf_schedule):
    stats = make_stats(gamma=1.0, sigma_alpha=0.01)
    with pytest.raises(ValueError):
        run_ensemble(sdf_schedule, stats, 0, master_seed=1)
    with pytest.raises(ValueError):
        run_ensemble(sdf_schedule, stats, 1, master_seed=-1)
    with pytest.raises(ValueError):
        run_ensemble(sdf_schedule, stats, 1, master_seed=1 << 64)


def test_ensemble_visibility_reduction():
    assert ensemble_visibility(np.zeros(50), bootstrap=0).value == pytest.approx(1.0)
    assert ensemble_visibility(np.array([0.0, math.pi]), bootstrap=0).value == (
        pytest.approx(0.0, abs=1e-12)
    )
    phases = np.random.default_rng(1).normal(0.0, 0.6, size=2000)
    res = ensemble_visibility(phases, bootstrap=150, seed=4)
    assert res.value == pytest.approx(math.exp(-0.18), abs=0.02)
    assert res.stderr is not None and 0 < res.stderr < 0.05
    again = ensemble_visibility(phases, bootstrap=150, seed=4)
    assert again.stderr == res.stderr  # seeded bootstrap
    with pytest.raises(ValueError):
        ensemble_visibility(np.empty(0))


def test_propagate_with_jumps_rejects_outside_times(sdf_schedule):
    with pytest.raises(ValueError, match="outside"):
        propagate_with_jumps(
            sdf_schedule, "up", [(sdf_schedule.total_duration + 1.0, 0.1j)]
        )
