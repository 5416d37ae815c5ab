"""Operator-facing command line: config-driven batch runs with manifests.

Subcommands
-----------
modes
    Crystal normal-mode report (JSON + human-readable table) with
    feasibility figures: charging limit, drive strength, amplitude caps.
split
    Deterministic noiseless splitting/hold/recombination trajectory of
    both spin branches, one plot-ready CSV per crystal mode, including
    the phase-space ellipse parameters (centre and squeeze) per sample.
collapse-mc
    Seeded Monte Carlo of unitary-jump collapse noise: visibility versus
    intermediary free-flight time, fitted decay rate, analytic
    comparison, and a one-record-per-line trajectory log.
exclusion
    Collapse-parameter exclusion grid from a dephasing-rate bound, with
    the benchmark points annotated and the macroscopicity figure.
budget
    Environmental decoherence budget (gas collisions, thermal photons,
    induced image currents) with pass/fail against the target band.
oracle-check
    Truncated number-basis verification suite: operator-algebra
    identities, end-to-end propagation fidelity, the visibility
    convention, and basis-doubling stability.

All subcommands accept ``--config PATH`` (commented JSON, see
:mod:`cotrap.config`), ``--seed N`` (overrides the configured master
seed), ``--workers N`` (Monte Carlo worker processes; results are
bit-identical for any value) and ``--out DIR`` (overrides the configured
output directory).  Every run writes a ``manifest.json`` listing each
output file with its SHA-256.  Exit codes: 0 success, 2 configuration
error, 3 physics-validity error, 4 oracle failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from functools import lru_cache
from typing import Any, Sequence

import numpy as np

from ._version import __version__
from .analysis import (
    Environment,
    decoherence_budget,
    exclusion_region,
    fit_decay,
    macroscopicity,
)
from .collapse import (
    CollapseModel,
    analytic_decay,
    kick_statistics,
    prepare_protocol,
    run_ensemble,
)
from .config import CrystalConfig, DriveConfig, RunConfig, load_config
from .crystal import ModeStructure, feasibility
from .drives import (
    CalibrationTones,
    PADrive,
    SDFDrive,
    build_schedule,
    calibrate_closure,
    real_space_amplitude,
    sample_schedule,
    snapped_time,
)
from .errors import EXIT_OK, EXIT_ORACLE_ERROR, CotrapError
from .fock import (
    ansatz_state,
    matrix_displacement,
    matrix_squeeze,
    propagate_numeric,
    thermal_overlap,
    truncation_stable,
    vacuum_state,
)
from .gaussian import (
    DriveFunction,
    GaussianPropagator,
    Tone,
    displace_compose,
    propagate,
    pull_displacement_through_squeeze,
    squeeze_compose,
    tau_to_zeta,
)
from .output import Column, OutputWriter

__all__ = ["main"]

_TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# Shared derived quantities (cached per process so repeated commands on the
# same physics reuse the expensive closure calibration)
# ---------------------------------------------------------------------------


@lru_cache(maxsize=8)
def _calibrated_protocol(
    crystal_cfg: CrystalConfig,
    drive_cfg: DriveConfig,
    split_periods: int,
    gain_target: float,
) -> tuple[ModeStructure, SDFDrive, PADrive, CalibrationTones, dict, float]:
    """Mode structure plus the closure-calibrated drive for one config."""
    modes = crystal_cfg.modes()
    t_split = snapped_time(modes.omega_i, split_periods)
    sdf = SDFDrive(
        rabi=drive_cfg.rabi_frequency,
        detuning=(
            modes.omega_i if drive_cfg.sdf_detuning is None else drive_cfg.sdf_detuning
        ),
        phase_up=drive_cfg.sdf_phase,
    )
    if gain_target == 1.0:
        # no parametric drive: the split is a bare force ramp and the
        # mirror-symmetric recombination needs no calibration tones
        pa = PADrive(strength=0.0, modulation_frequency=2.0 * modes.omega_i)
        tones = CalibrationTones()
        diag = {
            "rounds": 0.0,
            "gain_measured": 1.0,
            "im_tau_mid": 0.0,
            "im_alpha_end": 0.0,
        }
    else:
        pa, tones, diag = calibrate_closure(
            sdf, modes, t_split, gain_target=gain_target
        )
    return modes, sdf, pa, tones, diag, t_split


@lru_cache(maxsize=8)
def _split_amplitude(
    crystal_cfg: CrystalConfig,
    drive_cfg: DriveConfig,
    split_periods: int,
    gain_target: float,
    samples_per_period: int,
) -> float:
    """Peak in-phase branch displacement |alpha| of the noiseless protocol."""
    modes, sdf, pa, tones, _, t_split = _calibrated_protocol(
        crystal_cfg, drive_cfg, split_periods, gain_target
    )
    schedule = build_schedule(sdf, pa, modes, t_split, n_hold_periods=0, tones=tones)
    _, alpha, _, _, _, _ = sample_schedule(
        schedule, "up", mode="in_phase", samples_per_period=samples_per_period
    )
    return float(np.max(np.abs(alpha)))


def _mode_snapshot(modes: ModeStructure) -> dict[str, float]:
    return {
        "mass_ratio": modes.mu,
        "charge_ratio": modes.flake.charge / modes.ion.charge,
        "frequency_ratio_squared": modes.xi,
        "amplitude_ratio_beta": modes.beta,
        "equilibrium_separation_m": modes.d,
        "ion_equilibrium_m": modes.z1_eq,
        "flake_equilibrium_m": modes.z2_eq,
        "omega_in_rad_s": modes.omega_i,
        "omega_out_rad_s": modes.omega_o,
        "frequency_in_Hz": modes.omega_i / _TWO_PI,
        "frequency_out_Hz": modes.omega_o / _TWO_PI,
        "ground_state_length_in_m": modes.x0_i,
        "ground_state_length_out_m": modes.x0_o,
        "ion_amplitude_in": modes.b1i,
        "flake_amplitude_in": modes.b2i,
        "ion_amplitude_out": modes.b1o,
        "flake_amplitude_out": modes.b2o,
        "lamb_dicke_in": modes.eta_i,
        "lamb_dicke_out": modes.eta_o,
    }


def _drive_snapshot(
    sdf: SDFDrive, pa: PADrive, tones: CalibrationTones, diag: dict, t_split: float
) -> dict[str, Any]:
    return {
        "sdf": sdf.to_dict(),
        "pa": pa.to_dict(),
        "tones": tones.to_dict(),
        "calibration": dict(diag),
        "t_split_s": t_split,
    }


def _stats_snapshot(stats) -> dict[str, float]:
    return {
        "event_rate_1_s": stats.gamma,
        "kick_scale_in": stats.sigma_alpha,
        "kick_scale_out": stats.sigma_alpha_out,
        "mass_ratio_electron": stats.mass_ratio,
    }


def _collapse_stats(config: RunConfig, modes: ModeStructure):
    """Kick statistics for the configured collapse model (zero-rate if off)."""
    if config.collapse is None:
        model = CollapseModel(tau_e=math.inf, sigma=math.inf)
    else:
        model = CollapseModel(
            tau_e=config.collapse.tau_e, sigma=config.collapse.sigma
        )
    return kick_statistics(
        model, modes, flake_radius=config.crystal.flake_radius
    )


def _zeta_from_tau(tau: np.ndarray) -> np.ndarray:
    """Vectorised disc-to-squeeze map zeta = artanh|tau| e^{i arg tau}."""
    mag = np.abs(tau)
    r = np.arctanh(np.clip(mag, 0.0, 1.0 - 1e-15))
    safe = np.where(mag > 0.0, mag, 1.0)
    return r * tau / safe


# ---------------------------------------------------------------------------
# modes
# ---------------------------------------------------------------------------


def _render_modes_table(modes: ModeStructure, report) -> str:
    rows = [
        ("mass ratio M/m", f"{modes.mu:.6e}"),
        ("charge ratio Q/e", f"{modes.flake.charge / modes.ion.charge:.6g}"),
        ("frequency ratio^2 (in/bare)", f"{modes.xi:.6e}"),
        ("mode frequency ratio out/in", f"{modes.omega_o / modes.omega_i:.4f}"),
        ("equilibrium separation", f"{modes.d * 1e6:.3f} um"),
        ("in-phase frequency", f"{modes.omega_i / _TWO_PI / 1e3:.4f} kHz"),
        ("out-of-phase frequency", f"{modes.omega_o / _TWO_PI / 1e6:.6f} MHz"),
        ("in-phase ground-state length", f"{modes.x0_i * 1e9:.4f} nm"),
        ("out-of-phase ground-state length", f"{modes.x0_o * 1e9:.4f} nm"),
        ("flake in-phase amplitude b2i", f"{modes.b2i:.6e}"),
        ("ion out-of-phase amplitude b1o", f"{modes.b1o:.9f}"),
        ("in-phase Lamb-Dicke parameter", f"{modes.eta_i:.6e}"),
        ("out-of-phase Lamb-Dicke parameter", f"{modes.eta_o:.6e}"),
        ("flake mass", f"{report.flake_mass:.6e} kg"),
        ("carbon-atom equivalent", f"{report.carbon_atoms:.4e}"),
        ("charging limit (Pauthenier)", f"{report.pauthenier_charge_limit:.4e} C"),
        ("two-photon Rabi frequency", f"{report.rabi_frequency / _TWO_PI / 1e6:.4f} MHz"),
        ("amplification gain cap", f"{report.gain_upper_bound:.4e}"),
        ("out-of-phase displacement cap", f"{report.oop_displacement_upper_bound:.4e}"),
    ]
    width = max(len(name) for name, _ in rows)
    lines = ["two-particle crystal normal modes", "-" * 48]
    lines += [f"{name:<{width}}  {value}" for name, value in rows]
    if report.warnings:
        lines.append("")
        lines += [f"warning: {w}" for w in report.warnings]
    return "\n".join(lines) + "\n"


def cmd_modes(config: RunConfig, args: argparse.Namespace) -> int:
    modes = config.crystal.modes()
    report = feasibility(
        config.crystal.ion(),
        config.crystal.flake(),
        config.crystal.geometry(),
        config.drive.laser(),
        modes,
    )
    payload = {
        "mode_structure": _mode_snapshot(modes),
        "feasibility": {
            "pauthenier_charge_limit_C": report.pauthenier_charge_limit,
            "flake_mass_kg": report.flake_mass,
            "carbon_atoms": report.carbon_atoms,
            "rabi_frequency_rad_s": report.rabi_frequency,
            "gain_upper_bound": report.gain_upper_bound,
            "oop_displacement_upper_bound": report.oop_displacement_upper_bound,
            "warnings": list(report.warnings),
        },
    }
    writer = OutputWriter(config.output_dir)
    writer.write_json("modes.json", payload)
    table = _render_modes_table(modes, report)
    writer.write_text("modes.txt", table)
    writer.write_manifest(
        command="modes",
        config_hash=config.config_hash(),
        config=config.to_canonical_dict(),
        master_seed=None,
        workers=None,
        derived={"mode_structure": _mode_snapshot(modes)},
    )
    print(table, end="")
    print(f"wrote modes.json, modes.txt, manifest.json to {writer.directory}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# split
# ---------------------------------------------------------------------------


def cmd_split(config: RunConfig, args: argparse.Namespace) -> int:
    proto = config.protocol
    modes, sdf, pa, tones, diag, t_split = _calibrated_protocol(
        config.crystal, config.drive, proto.split_periods, proto.gain_target
    )
    n_hold = proto.hold_periods[0]
    schedule = build_schedule(
        sdf, pa, modes, t_split, n_hold_periods=n_hold, tones=tones
    )
    writer = OutputWriter(config.output_dir)
    lane_summary: dict[str, Any] = {}
    flake_amp_max = 0.0
    alpha_split_max = 0.0
    for mode_name, b_flake, x0 in (
        ("in_phase", modes.b2i, modes.x0_i),
        ("out_of_phase", modes.b2o, modes.x0_o),
    ):
        t_up, a_up, tau_up, phi_up, chi_up, fin_up = sample_schedule(
            schedule, "up", mode=mode_name, samples_per_period=proto.samples_per_period
        )
        _, a_down, tau_down, phi_down, chi_down, fin_down = sample_schedule(
            schedule,
            "down",
            mode=mode_name,
            samples_per_period=proto.samples_per_period,
        )
        zeta_up = _zeta_from_tau(tau_up)
        zeta_down = _zeta_from_tau(tau_down)
        flake_up = 2.0 * np.abs(a_up) * abs(b_flake) * x0
        flake_down = 2.0 * np.abs(a_down) * abs(b_flake) * x0
        columns = [
            Column("t", "s", t_up),
            Column("alpha_up_re", "1", a_up.real),
            Column("alpha_up_im", "1", a_up.imag),
            Column("alpha_down_re", "1", a_down.real),
            Column("alpha_down_im", "1", a_down.imag),
            Column("tau_up_re", "1", tau_up.real),
            Column("tau_up_im", "1", tau_up.imag),
            Column("tau_down_re", "1", tau_down.real),
            Column("tau_down_im", "1", tau_down.imag),
            Column("zeta_up_re", "1", zeta_up.real),
            Column("zeta_up_im", "1", zeta_up.imag),
            Column("zeta_down_re", "1", zeta_down.real),
            Column("zeta_down_im", "1", zeta_down.imag),
            Column("phase_up", "rad", phi_up - 0.5 * chi_up),
            Column("phase_down", "rad", phi_down - 0.5 * chi_down),
            Column("flake_amplitude_up", "m", flake_up),
            Column("flake_amplitude_down", "m", flake_down),
        ]
        comments = [
            f"noiseless splitting protocol, {mode_name} crystal mode",
            "alpha: phase-space displacement (ellipse centre); zeta: squeeze "
            "parameter (ellipse axes); flake_amplitude: peak real-space "
            "flake excursion 2|alpha||b_flake|x0",
        ]
        writer.write_csv(f"split_{mode_name}.csv", columns, comments=comments)
        lane_summary[mode_name] = {
            "final_alpha_up": complex(fin_up.alpha),
            "final_alpha_down": complex(fin_down.alpha),
            "final_tau_up": complex(fin_up.tau),
            "final_tau_down": complex(fin_down.tau),
            "closure_alpha_abs": max(abs(fin_up.alpha), abs(fin_down.alpha)),
            "closure_tau_abs": max(abs(fin_up.tau), abs(fin_down.tau)),
            "max_flake_amplitude_m": float(max(flake_up.max(), flake_down.max())),
            "max_alpha_abs": float(np.max(np.abs(a_up))),
        }
        if mode_name == "in_phase":
            flake_amp_max = lane_summary[mode_name]["max_flake_amplitude_m"]
            alpha_split_max = lane_summary[mode_name]["max_alpha_abs"]
    summary = {
        "t_split_s": t_split,
        "t_hold_s": schedule.t_hold,
        "hold_periods": n_hold,
        "gain_target": proto.gain_target,
        "drive": _drive_snapshot(sdf, pa, tones, diag, t_split),
        "lanes": lane_summary,
        "alpha_split": alpha_split_max,
        "flake_amplitude_max_m": flake_amp_max,
    }
    writer.write_json("split_summary.json", summary)
    writer.write_manifest(
        command="split",
        config_hash=config.config_hash(),
        config=config.to_canonical_dict(),
        master_seed=None,
        workers=None,
        derived={
            "mode_structure": _mode_snapshot(modes),
            "protocol": _drive_snapshot(sdf, pa, tones, diag, t_split),
        },
    )
    print(
        f"split trajectory written to {writer.directory} "
        f"(peak |alpha| = {alpha_split_max:.4f}, "
        f"peak flake amplitude = {flake_amp_max * 1e10:.3f} angstrom)"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# collapse-mc
# ---------------------------------------------------------------------------


def cmd_collapse_mc(config: RunConfig, args: argparse.Namespace) -> int:
    proto = config.protocol
    ens = config.ensemble
    modes, sdf, pa, tones, diag, t_split = _calibrated_protocol(
        config.crystal, config.drive, proto.split_periods, proto.gain_target
    )
    stats = _collapse_stats(config, modes)
    workers = args.workers

    rows: list[dict[str, Any]] = []
    log_lines: list[dict[str, Any]] = []
    alpha_split = 0.0
    for point, n_hold in enumerate(proto.hold_periods):
        schedule = build_schedule(
            sdf, pa, modes, t_split, n_hold_periods=n_hold, tones=tones
        )
        prep = prepare_protocol(
            schedule,
            mode=ens.kick_mode,
            samples_per_period=proto.samples_per_period,
        )
        alpha_split = max(
            alpha_split, float(np.max(np.hypot(prep.path_up.re, prep.path_up.im)))
        )
        point_seed = ens.master_seed + point
        result = run_ensemble(
            schedule,
            stats,
            ens.size,
            point_seed,
            workers=workers,
            sampler=ens.sampler,
            mode=ens.kick_mode,
            max_recorded_jumps=ens.max_recorded_jumps,
            bootstrap=ens.bootstrap,
            prepared=prep,
        )
        t_int = schedule.t_hold
        rows.append(
            {
                "hold_periods": n_hold,
                "t_int": t_int,
                "visibility": result.visibility.value,
                "visibility_stderr": (
                    result.visibility.stderr
                    if result.visibility.stderr is not None
                    else 0.0
                ),
                "phase_std": result.phase_std,
                "mean_jumps": result.mean_jump_count,
                "n_trajectories": result.n_trajectories,
                "point_seed": point_seed,
            }
        )
        for rec in result.records:
            line: dict[str, Any] = {
                "point": point,
                "hold_periods": n_hold,
                "t_int": t_int,
                "seed": rec.seed,
                "jump_count": rec.jump_count,
                "phase_difference": rec.phase_difference,
            }
            if rec.jump_times:
                line["jump_times"] = list(rec.jump_times)
                line["jump_amplitudes_im"] = [k.imag for k in rec.jump_amplitudes]
                line["jumps_truncated"] = not rec.jumps_recorded
            log_lines.append(line)

    rate_analytic = stats.dephasing_rate(alpha_split)
    for row in rows:
        row["analytic_hold_factor"] = math.exp(-rate_analytic * row["t_int"])

    fit_summary: dict[str, Any] = {"fitted": False}
    fit_points = [
        (r["t_int"], r["visibility"], r["visibility_stderr"])
        for r in rows
        if r["visibility"] > 0.0
    ]
    use_err = bool(fit_points) and all(e > 0.0 for _, _, e in fit_points)
    min_fit_points = 2 if use_err else 3
    if (
        len(fit_points) >= min_fit_points
        and len({t for t, _, _ in fit_points}) >= 2
    ):
        t_fit = [p[0] for p in fit_points]
        v_fit = [p[1] for p in fit_points]
        e_fit = [p[2] for p in fit_points]
        fit = fit_decay(t_fit, v_fit, stderr=e_fit if use_err else None)
        fit_summary = {
            "fitted": True,
            "rate_1_s": fit.rate,
            "rate_stderr_1_s": fit.rate_stderr,
            "rate_ci95_1_s": list(fit.rate_ci95),
            "initial_visibility": fit.initial_visibility,
            "residual_rms": fit.residual_rms,
            "n_points": fit.n_points,
        }
        if rate_analytic > 0.0:
            fit_summary["analytic_rate_1_s"] = rate_analytic
            fit_summary["rate_ratio_fit_over_analytic"] = fit.rate / rate_analytic

    writer = OutputWriter(config.output_dir)
    columns = [
        Column("hold_periods", "1", [r["hold_periods"] for r in rows]),
        Column("t_int", "s", [r["t_int"] for r in rows]),
        Column("visibility", "1", [r["visibility"] for r in rows]),
        Column("visibility_stderr", "1", [r["visibility_stderr"] for r in rows]),
        Column("phase_std", "rad", [r["phase_std"] for r in rows]),
        Column("mean_jumps", "1", [r["mean_jumps"] for r in rows]),
        Column("n_trajectories", "1", [r["n_trajectories"] for r in rows]),
        Column("analytic_hold_factor", "1", [r["analytic_hold_factor"] for r in rows]),
    ]
    comments = [
        "ensemble visibility versus intermediary free-flight time",
        f"sampler={ens.sampler}, kick handling={ens.kick_mode}, "
        f"master seed={ens.master_seed}, trajectories/point={ens.size}",
        "analytic_hold_factor: exp(-rate * t_int) with the diffusion-law rate",
    ]
    writer.write_csv("visibility.csv", columns, comments=comments)
    writer.write_jsonl("trajectories.jsonl", log_lines)
    summary = {
        "collapse": (
            "off"
            if config.collapse is None
            else {"tau_e_s": config.collapse.tau_e, "sigma_m": config.collapse.sigma}
        ),
        "kick_statistics": _stats_snapshot(stats),
        "alpha_split": alpha_split,
        "dephasing_rate_analytic_1_s": rate_analytic,
        "points": rows,
        "decay_fit": fit_summary,
        "sampler": ens.sampler,
        "kick_mode": ens.kick_mode,
        "master_seed": ens.master_seed,
    }
    writer.write_json("collapse_summary.json", summary)
    writer.write_manifest(
        command="collapse-mc",
        config_hash=config.config_hash(),
        config=config.to_canonical_dict(),
        master_seed=ens.master_seed,
        workers=workers,
        derived={
            "mode_structure": _mode_snapshot(modes),
            "protocol": _drive_snapshot(sdf, pa, tones, diag, t_split),
            "kick_statistics": _stats_snapshot(stats),
            "alpha_split": alpha_split,
        },
    )
    lines = [
        f"collapse Monte Carlo: {len(rows)} sweep points x {ens.size} trajectories"
    ]
    for row in rows:
        lines.append(
            f"  hold={row['hold_periods']:>3d} periods  t_int={row['t_int']:.3e} s  "
            f"V={row['visibility']:.4f} +- {row['visibility_stderr']:.4f}  "
            f"phase std={row['phase_std']:.3f} rad"
        )
    if fit_summary.get("fitted") and "rate_ratio_fit_over_analytic" in fit_summary:
        lines.append(
            f"fitted decay rate {fit_summary['rate_1_s']:.4e} 1/s vs analytic "
            f"{rate_analytic:.4e} 1/s (ratio "
            f"{fit_summary['rate_ratio_fit_over_analytic']:.3f})"
        )
    lines.append(f"results written to {writer.directory}")
    print("\n".join(lines))
    return EXIT_OK


# ---------------------------------------------------------------------------
# exclusion
# ---------------------------------------------------------------------------


def cmd_exclusion(config: RunConfig, args: argparse.Namespace) -> int:
    proto = config.protocol
    excl = config.exclusion
    modes, sdf, pa, tones, diag, t_split = _calibrated_protocol(
        config.crystal, config.drive, proto.split_periods, proto.gain_target
    )
    alpha_split = _split_amplitude(
        config.crystal,
        config.drive,
        proto.split_periods,
        proto.gain_target,
        proto.samples_per_period,
    )
    sigma_values = np.logspace(
        math.log10(excl.sigma_min), math.log10(excl.sigma_max), excl.sigma_points
    )
    tau_values = np.logspace(
        math.log10(excl.tau_e_min), math.log10(excl.tau_e_max), excl.tau_e_points
    )
    gamma_bound = math.inf if excl.gamma_bound is None else excl.gamma_bound
    region = exclusion_region(
        gamma_bound,
        modes,
        alpha_split,
        sigma_values,
        tau_values,
        flake_radius=config.crystal.flake_radius,
        t_split=t_split,
    )

    n_sigma, n_tau = region.gamma.shape
    sigma_col = np.repeat(region.sigma_values, n_tau)
    tau_col = np.tile(region.tau_e_values, n_sigma)
    writer = OutputWriter(config.output_dir)
    delta_x = 2.0 * alpha_split * modes.x0_i * abs(modes.b2i)
    comments = [
        "predicted collapse dephasing rate on a (sigma, tau_e) grid",
        f"dephasing-rate bound: {region.gamma_bound!r} 1/s; excluded = rate > bound",
        f"macroscopicity (f=1/e at t=1/bound): {region.macroscopicity!r}",
    ]
    writer.write_csv(
        "exclusion.csv",
        [
            Column("sigma", "m", sigma_col),
            Column("tau_e", "s", tau_col),
            Column("predicted_rate", "1/s", region.gamma.reshape(-1)),
            Column("excluded", "1", region.excluded.reshape(-1).astype(int)),
        ],
        comments=comments,
    )
    big_m_resolvable = macroscopicity(
        mass=modes.flake.mass,
        radius=config.crystal.flake_radius,
        delta_x=delta_x,
        duration=1e-3,
        fraction=0.98,
    )
    summary = {
        "gamma_bound_1_s": region.gamma_bound,
        "alpha_split": alpha_split,
        "superposition_size_m": delta_x,
        "macroscopicity": (
            None if math.isnan(region.macroscopicity) else region.macroscopicity
        ),
        "macroscopicity_convention": (
            "log10(|1/ln f| (M/m_e)^2 (dx/R)^2 t), f = 1/e retained coherence "
            "at hold time t = 1/gamma_bound, dx = superposition size"
        ),
        "macroscopicity_resolvable_contrast": big_m_resolvable,
        "macroscopicity_resolvable_convention": (
            "same formula with f = 0.98 (a just-resolvable 2% contrast loss) "
            "at t = 1 ms, the single-run splitting timescale"
        ),
        "benchmark_points": {
            "grw": {
                "sigma_m": 1e-7,
                "tau_e_s": 1e16,
                "predicted_rate_1_s": region.grw_gamma,
                "excluded": region.grw_excluded,
            },
            "adler": {
                "sigma_m": 1e-7,
                "tau_e_s": 2.5e7,
                "predicted_rate_1_s": region.adler_gamma,
                "excluded": region.adler_excluded,
            },
        },
        "excluded_fraction": float(np.mean(region.excluded)),
        "warnings": list(region.warnings),
    }
    writer.write_json("exclusion_summary.json", summary)
    writer.write_manifest(
        command="exclusion",
        config_hash=config.config_hash(),
        config=config.to_canonical_dict(),
        master_seed=None,
        workers=None,
        derived={
            "mode_structure": _mode_snapshot(modes),
            "protocol": _drive_snapshot(sdf, pa, tones, diag, t_split),
            "alpha_split": alpha_split,
        },
    )
    if math.isfinite(region.gamma_bound):
        detail = (
            f"macroscopicity {region.macroscopicity:.2f} at bound "
            f"{region.gamma_bound:g} 1/s"
        )
    else:
        detail = "no dephasing-rate bound given: nothing is excluded"
    print(
        f"exclusion grid {n_sigma} x {n_tau} written to {writer.directory}\n"
        f"{detail}; GRW point "
        f"{'excluded' if region.grw_excluded else 'not excluded'}, Adler point "
        f"{'excluded' if region.adler_excluded else 'not excluded'}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# budget
# ---------------------------------------------------------------------------


def cmd_budget(config: RunConfig, args: argparse.Namespace) -> int:
    proto = config.protocol
    env_cfg = config.environment
    modes, sdf, pa, tones, diag, t_split = _calibrated_protocol(
        config.crystal, config.drive, proto.split_periods, proto.gain_target
    )
    alpha_split = _split_amplitude(
        config.crystal,
        config.drive,
        proto.split_periods,
        proto.gain_target,
        proto.samples_per_period,
    )
    delta_x = real_space_amplitude(alpha_split, modes, which="flake", mode="in_phase")
    environment = Environment(
        pressure=env_cfg.pressure,
        gas_temperature=env_cfg.gas_temperature,
        gas_molecule_mass=env_cfg.gas_molecule_mass,
        circuit_inductance=env_cfg.circuit_inductance,
        circuit_frequency=env_cfg.circuit_frequency,
        circuit_temperature=env_cfg.circuit_temperature,
        endcap_distance=config.crystal.endcap_distance,
        induced_current=env_cfg.induced_current,
    )
    budget = decoherence_budget(
        environment,
        modes,
        delta_x,
        flake_radius=config.crystal.flake_radius,
    )
    rows = budget.rows()
    overall = "pass"
    if any(r["status"] == "fail" for r in rows):
        overall = "fail"
    elif any(r["status"] == "marginal" for r in rows):
        overall = "marginal"
    payload = {
        "alpha_split": alpha_split,
        "branch_amplitude_m": delta_x,
        "superposition_separation_m": 2.0 * delta_x,
        "environment": {
            "pressure_Pa": environment.pressure,
            "gas_temperature_K": environment.gas_temperature,
            "gas_molecule_mass_kg": environment.gas_molecule_mass,
            "circuit_inductance_H": environment.circuit_inductance,
            "circuit_frequency_rad_s": environment.circuit_frequency,
            "circuit_temperature_K": environment.circuit_temperature,
            "endcap_distance_m": environment.endcap_distance,
            "induced_current_A": budget.induced_current,
        },
        "mechanisms": rows,
        "flake_peak_velocity_m_s": budget.flake_velocity,
        "overall_status": overall,
        "notes": list(budget.notes),
    }
    writer = OutputWriter(config.output_dir)
    writer.write_json("budget.json", payload)
    writer.write_manifest(
        command="budget",
        config_hash=config.config_hash(),
        config=config.to_canonical_dict(),
        master_seed=None,
        workers=None,
        derived={
            "mode_structure": _mode_snapshot(modes),
            "alpha_split": alpha_split,
            "branch_amplitude_m": delta_x,
        },
    )
    lines = [f"decoherence budget ({overall}):"]
    for row in rows:
        lines.append(
            f"  {row['mechanism']:<26} {row['value']:.4e} {row['unit']:<14} "
            f"{row['status']}"
        )
    lines.append(f"report written to {writer.directory}")
    print("\n".join(lines))
    return EXIT_OK


# ---------------------------------------------------------------------------
# oracle-check
# ---------------------------------------------------------------------------


def _random_disc(rng: np.random.Generator, radius: float) -> complex:
    r = radius * math.sqrt(rng.uniform())
    theta = rng.uniform(0.0, _TWO_PI)
    return complex(r * math.cos(theta), r * math.sin(theta))


def _random_bounded_drive(
    rng: np.random.Generator, omega: float
) -> tuple[DriveFunction, GaussianPropagator]:
    """A random resonant force + parametric drive with a bounded end state.

    Rejection-samples tone amplitudes/phases until the noiseless end state
    satisfies |alpha| <= 4, |zeta| <= 1.5 and |alpha|^2 exp(2 |zeta|) <= 30.
    The last condition keeps the anti-squeezed number-state support well
    inside a 120-state basis, so a truncated-basis cross-check of the end
    state is limited by integrator accuracy rather than basis size.  Returns
    the drive together with its noiseless end state.
    """
    while True:
        n_periods = int(rng.integers(2, 6))
        duration = _TWO_PI * n_periods / omega
        alpha_target = rng.uniform(0.5, 3.5)
        f_amp = 2.0 * alpha_target / duration
        zeta_target = rng.uniform(0.1, 1.2)
        g_amp = 2.0 * zeta_target / duration
        f_tones = (
            Tone(amplitude=f_amp, frequency=omega, phase=rng.uniform(0.0, _TWO_PI)),
            Tone(
                amplitude=0.2 * f_amp,
                frequency=2.0 * omega,
                phase=rng.uniform(0.0, _TWO_PI),
            ),
        )
        g_tones = (
            Tone(
                amplitude=g_amp, frequency=2.0 * omega, phase=rng.uniform(0.0, _TWO_PI)
            ),
        )
        drive = DriveFunction(
            omega=omega, t_start=0.0, t_end=duration, f_tones=f_tones, g_tones=g_tones
        )
        final = propagate(GaussianPropagator.identity(omega), drive)
        amp = abs(final.alpha)
        zeta_mag = final.squeeze_magnitude
        if amp <= 4.0 and zeta_mag <= 1.5 and amp * amp * math.exp(2.0 * zeta_mag) <= 30.0:
            return drive, final


def _fock_fidelity(
    drive: DriveFunction, final: GaussianPropagator, omega: float, dimension: int
) -> float:
    """End-state overlap between the exact ansatz and direct integration."""
    ansatz = ansatz_state(final.phi, final.alpha, final.tau, final.chi, dimension)
    numeric = propagate_numeric(
        vacuum_state(dimension), drive, omega, (drive.t_start, drive.t_end)
    )
    return numeric.fidelity(ansatz)


def run_oracle_suite(
    master_seed: int, *, corrupt_sign: bool = False, quick: bool = False
) -> dict[str, Any]:
    """Truncated-basis verification suite; returns a structured report.

    ``corrupt_sign`` deliberately flips the composition-phase sign in the
    displacement-merging check, to demonstrate that a wrong convention is
    detected and named.  ``quick`` reduces draw counts (test use).
    """
    rng = np.random.default_rng(master_seed)
    checks: list[dict[str, Any]] = []
    dim = 60
    n_alg = 20 if quick else 100
    low_block = 12

    # displacement merging: D(a) D(b) = e^{i Im(a conj b)} D(a + b)
    worst = 0.0
    for _ in range(n_alg):
        a = _random_disc(rng, 2.0)
        b = _random_disc(rng, 2.0)
        summed, phase = displace_compose(a, b)
        if corrupt_sign:
            phase = -phase
        lhs = matrix_displacement(a, dim).matrix @ matrix_displacement(b, dim).matrix
        rhs = np.exp(1j * phase) * matrix_displacement(summed, dim).matrix
        worst = max(worst, float(np.max(np.abs(lhs - rhs)[:low_block, :low_block])))
    checks.append(
        {
            "name": "displacement_composition",
            "description": "merging two displacements, including the scalar phase",
            "max_deviation": worst,
            "tolerance": 1e-8,
            "draws": n_alg,
            "passed": worst < 1e-8,
        }
    )

    # squeeze merging: S(z1) S(z2) = S(z3) exp(c (n + 1/2))
    # Draw radius 0.4 keeps the squeezed number-state support of the
    # low-occupation block well inside the basis; larger squeezes are covered
    # by the end-to-end propagation check at dimension 120.
    worst = 0.0
    for _ in range(n_alg):
        tau1 = _random_disc(rng, 0.4)
        tau2 = _random_disc(rng, 0.4)
        tau3, c = squeeze_compose(tau1, tau2)
        lhs = (
            matrix_squeeze(tau_to_zeta(tau1), dim).matrix
            @ matrix_squeeze(tau_to_zeta(tau2), dim).matrix
        )
        number_factor = np.exp(c * (np.arange(dim) + 0.5))
        rhs = matrix_squeeze(tau_to_zeta(tau3), dim).matrix * number_factor[None, :]
        worst = max(worst, float(np.max(np.abs(lhs - rhs)[:low_block, :low_block])))
    checks.append(
        {
            "name": "squeeze_composition",
            "description": "merging two squeezes, including the number-phase factor",
            "max_deviation": worst,
            "tolerance": 1e-8,
            "draws": n_alg,
            "passed": worst < 1e-8,
        }
    )

    # interchange: D(alpha) S = S D(gamma)
    worst = 0.0
    for _ in range(n_alg):
        gamma = _random_disc(rng, 2.0)
        tau = _random_disc(rng, 0.4)
        alpha = pull_displacement_through_squeeze(gamma, tau)
        smat = matrix_squeeze(tau_to_zeta(tau), dim).matrix
        lhs = matrix_displacement(alpha, dim).matrix @ smat
        rhs = smat @ matrix_displacement(gamma, dim).matrix
        worst = max(worst, float(np.max(np.abs(lhs - rhs)[:low_block, :low_block])))
    checks.append(
        {
            "name": "squeeze_displace_interchange",
            "description": "pulling a displacement through a squeeze",
            "max_deviation": worst,
            "tolerance": 1e-8,
            "draws": n_alg,
            "passed": worst < 1e-8,
        }
    )

    # end-to-end propagation fidelity against direct integration
    omega = _TWO_PI * 1.0e6
    n_drives = 2 if quick else 5
    worst_infidelity = 0.0
    for _ in range(n_drives):
        drive, final = _random_bounded_drive(rng, omega)
        fidelity = _fock_fidelity(drive, final, omega, 120)
        worst_infidelity = max(worst_infidelity, 1.0 - fidelity)
    checks.append(
        {
            "name": "propagation_fidelity",
            "description": "exact phase-space propagation vs direct integration",
            "max_deviation": worst_infidelity,
            "tolerance": 1e-6,
            "draws": n_drives,
            "passed": worst_infidelity < 1e-6,
        }
    )

    # visibility convention: the fringe contrast of a displaced thermal
    # state decays with the squared displacement magnitude
    alpha_rel = 1.5
    nbar = 0.3
    trace = abs(thermal_overlap(matrix_displacement(alpha_rel, 200), nbar))
    squared = math.exp(-(alpha_rel**2) * (2.0 * nbar + 1.0) / 2.0)
    linear = math.exp(-alpha_rel * (2.0 * nbar + 1.0) / 2.0)
    dev_squared = abs(trace - squared)
    dev_linear = abs(trace - linear)
    checks.append(
        {
            "name": "visibility_convention",
            "description": (
                "thermal fringe contrast follows exp(-|a|^2 (2 nbar + 1) / 2); "
                "the linear-|a| variant is rejected"
            ),
            "max_deviation": dev_squared,
            "tolerance": 1e-8,
            "rejected_variant_deviation": dev_linear,
            "passed": dev_squared < 1e-8 and dev_linear > 1e-3,
        }
    )

    # basis-doubling stability of the thermal trace
    doubling = [
        abs(thermal_overlap(matrix_displacement(alpha_rel, n), nbar))
        for n in (100, 200, 400)
    ]
    stable = truncation_stable(doubling, rtol=1e-7)
    checks.append(
        {
            "name": "basis_doubling_stability",
            "description": "thermal trace stable under doubling the basis size",
            "values": doubling,
            "max_deviation": float(max(abs(doubling[i + 1] - doubling[i]) for i in range(2))),
            "tolerance": 1e-7,
            "passed": bool(stable),
        }
    )

    return {
        "master_seed": master_seed,
        "corrupt_sign": corrupt_sign,
        "checks": checks,
        "all_passed": all(c["passed"] for c in checks),
    }


def cmd_oracle_check(config: RunConfig, args: argparse.Namespace) -> int:
    report = run_oracle_suite(
        config.ensemble.master_seed, corrupt_sign=bool(args.corrupt_sign)
    )
    writer = OutputWriter(config.output_dir)
    writer.write_json("oracle_report.json", report)
    writer.write_manifest(
        command="oracle-check",
        config_hash=config.config_hash(),
        config=config.to_canonical_dict(),
        master_seed=config.ensemble.master_seed,
        workers=None,
        derived={},
    )
    for check in report["checks"]:
        status = "pass" if check["passed"] else "FAIL"
        print(
            f"{status}  {check['name']}: max deviation {check['max_deviation']:.3e} "
            f"(tolerance {check['tolerance']:.0e})"
        )
    if not report["all_passed"]:
        failed = [c["name"] for c in report["checks"] if not c["passed"]]
        print(f"oracle failure in: {', '.join(failed)}", file=sys.stderr)
        return EXIT_ORACLE_ERROR
    print(f"all oracle checks passed; report written to {writer.directory}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing and dispatch
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cotrap",
        description=(
            "co-trapped ion/flake interferometry: normal modes, noiseless "
            "protocol runs, collapse-noise Monte Carlo, exclusion maps and "
            "decoherence budgets"
        ),
    )
    parser.add_argument("--version", action="version", version=f"cotrap {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", required=True, help="run configuration (JSON with comments)"
    )
    common.add_argument(
        "--seed", type=int, default=None, help="override the configured master seed"
    )
    common.add_argument(
        "--workers",
        type=int,
        default=None,
        help="Monte Carlo worker processes (results identical for any value)",
    )
    common.add_argument(
        "--out", default=None, help="override the configured output directory"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser(
        "modes", parents=[common], help="crystal normal-mode and feasibility report"
    ).set_defaults(func=cmd_modes)
    sub.add_parser(
        "split", parents=[common], help="noiseless splitting/recombination trajectory"
    ).set_defaults(func=cmd_split)
    sub.add_parser(
        "collapse-mc", parents=[common], help="collapse-noise Monte Carlo sweep"
    ).set_defaults(func=cmd_collapse_mc)
    sub.add_parser(
        "exclusion", parents=[common], help="collapse-parameter exclusion grid"
    ).set_defaults(func=cmd_exclusion)
    sub.add_parser(
        "budget", parents=[common], help="environmental decoherence budget"
    ).set_defaults(func=cmd_budget)
    oracle = sub.add_parser(
        "oracle-check", parents=[common], help="truncated-basis verification suite"
    )
    oracle.add_argument(
        "--corrupt-sign",
        action="store_true",
        help="deliberately flip a composition-phase sign (detection self-test)",
    )
    oracle.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config = config.with_seed(args.seed)
        if args.out is not None:
            config = config.with_output_dir(args.out)
        return args.func(config, args)
    except CotrapError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.exit_code


if __name__ == "__main__":
    sys.exit(main())
