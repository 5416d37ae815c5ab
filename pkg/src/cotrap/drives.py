"""Drive-program construction for the split / hold / recombine protocol.

Builds the concrete ``(f, g)`` waveforms seen by each spin branch and each
normal mode:

* the resonant spin-dependent force on the in-phase mode,
  ``f(t) = +/- Omega_R eta_i sin(delta t - phase)``;
* the parametric modulation ``g(t) = Omega_PA sin(2 w_i t - phi_PA)`` whose
  phase flips by pi at the midpoint of the splitting pulse (squeeze, then
  unsqueeze, amplifying the force-driven displacement by (G-1)/ln G);
* the residual drives on the out-of-phase mode: the off-resonant force
  ``Omega_R eta_o sin(delta t - phase)``, the parametric cross force at
  ``2 w_i`` produced by modulating the trap around a displaced equilibrium,
  and the quadratic term ``-Omega_R eta_o^2 cos(delta t - phase)``;
* recombination as the exact time-mirror of the splitting waveform.

Mirror-image recombination closes the interferometer *exactly* (not just to
rotating-wave order) provided the waveform segments are commensurate with
the mode period and the branch state is real (Im alpha = Im tau = 0) at the
mirror point.  Two small calibration tones enforce that reality condition:
a ``cos(2 w t)`` component on g (zeroing Im tau at the split midpoint, which
by the within-split mirror symmetry drives tau(t_s) to zero exactly) and a
spin-signed ``cos(w t)`` component on f (zeroing Im alpha at the end of the
split; exact by linearity of the displacement response in the force).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterable, Literal, Sequence

import numpy as np
from scipy.optimize import brentq

from .crystal import ModeStructure
from .errors import PhysicsValidityError
from .gaussian import (
    DriveFunction,
    GaussianPropagator,
    Tone,
    propagate,
    propagate_sampled,
)

__all__ = [
    "SDFDrive",
    "PADrive",
    "CalibrationTones",
    "ProtocolSchedule",
    "Spin",
    "Mode",
    "snapped_time",
    "sdf_inphase_drive",
    "pa_inphase_drive",
    "outofphase_drives",
    "build_schedule",
    "mirror_tones",
    "propagate_schedule",
    "sample_schedule",
    "branch_path",
    "BranchPath",
    "calibrate_pa_strength",
    "calibrate_closure",
    "real_space_amplitude",
    "superposition_separation",
]

Spin = Literal["up", "down"]
Mode = Literal["in_phase", "out_of_phase"]

SPINS: tuple[Spin, Spin] = ("up", "down")
MODES: tuple[Mode, Mode] = ("in_phase", "out_of_phase")


# ---------------------------------------------------------------------------
# Drive descriptions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SDFDrive:
    """Spin-dependent force parameters.

    ``rabi`` is the two-photon Rabi frequency (rad/s), ``detuning`` the
    beat-note frequency (rad/s, resonant with the in-phase mode unless
    overridden).  The two spin states see forces of opposite sign:
    ``phase_down = phase_up + pi``.
    """

    rabi: float
    detuning: float
    phase_up: float = 0.0

    def __post_init__(self):
        if self.rabi < 0:
            raise ValueError("Rabi frequency must be non-negative")
        if self.detuning <= 0:
            raise ValueError("detuning must be positive")

    @property
    def phase_down(self) -> float:
        return self.phase_up + math.pi

    def phase(self, spin: Spin) -> float:
        return self.phase_up if spin == "up" else self.phase_down

    def to_dict(self) -> dict[str, float]:
        return {
            "rabi": self.rabi,
            "detuning": self.detuning,
            "phase_up": self.phase_up,
        }


@dataclass(frozen=True)
class PADrive:
    """Parametric-amplification (trap modulation) parameters.

    ``strength`` is the modulation amplitude (rad/s), ``modulation_frequency``
    nominally twice the in-phase mode frequency, ``phase`` the modulation
    phase of the first half of the splitting pulse (it is flipped by pi for
    the second half).
    """

    strength: float
    modulation_frequency: float
    phase: float = 0.0

    def __post_init__(self):
        if self.strength < 0:
            raise ValueError("parametric drive strength must be non-negative")
        if self.modulation_frequency <= 0:
            raise ValueError("modulation frequency must be positive")

    def to_dict(self) -> dict[str, float]:
        return {
            "strength": self.strength,
            "modulation_frequency": self.modulation_frequency,
            "phase": self.phase,
        }


@dataclass(frozen=True)
class CalibrationTones:
    """Closure-calibration tone amplitudes (rad/s).

    ``squeeze_cos`` adds ``c cos(2 w_i t)`` to the parametric drive during
    the split (and, mirrored, during recombination), steering Im tau to zero
    at the split midpoint.  ``force_cos`` adds a spin-signed ``c cos(w_i t)``
    to the force, steering Im alpha to zero at the end of the split.
    """

    squeeze_cos: float = 0.0
    force_cos: float = 0.0

    def to_dict(self) -> dict[str, float]:
        return {"squeeze_cos": self.squeeze_cos, "force_cos": self.force_cos}


# ---------------------------------------------------------------------------
# Elementary drive builders
# ---------------------------------------------------------------------------


def snapped_time(omega: float, n_periods: int) -> float:
    """Duration of ``n_periods`` whole mode periods, 2 pi n / omega."""
    if n_periods < 0:
        raise ValueError("period count must be non-negative")
    return 2.0 * math.pi * n_periods / omega


def _spin_sign(spin: Spin) -> float:
    if spin == "up":
        return 1.0
    if spin == "down":
        return -1.0
    raise ValueError(f"unknown spin label {spin!r}")


def sdf_inphase_drive(
    sdf: SDFDrive,
    modes: ModeStructure,
    spin: Spin,
    tones: CalibrationTones | None = None,
) -> tuple[Tone, ...]:
    """Force tones on the in-phase mode for one spin branch.

    ``f(t) = Omega_R eta_i sin(delta t - phase_spin) [+ s c_f cos(delta t)]``.
    The two branches are exact negatives of each other.
    """
    amp = sdf.rabi * modes.eta_i
    out = [Tone(amplitude=amp, frequency=sdf.detuning, phase=sdf.phase(spin))]
    if tones is not None and tones.force_cos != 0.0:
        out.append(
            Tone.cosine(_spin_sign(spin) * tones.force_cos, sdf.detuning)
        )
    return tuple(out)


def pa_inphase_drive(
    pa: PADrive,
    half: int = 0,
    tones: CalibrationTones | None = None,
) -> tuple[Tone, ...]:
    """Parametric tones for one half of the splitting pulse.

    ``half = 0`` uses the nominal phase, ``half = 1`` the pi-flipped phase
    (unsqueezing).  The calibration tone spans both halves unchanged.
    """
    if half not in (0, 1):
        raise ValueError("half must be 0 or 1")
    out: list[Tone] = []
    if pa.strength != 0.0:
        out.append(
            Tone(
                amplitude=pa.strength,
                frequency=pa.modulation_frequency,
                phase=pa.phase + half * math.pi,
            )
        )
    if tones is not None and tones.squeeze_cos != 0.0:
        out.append(Tone.cosine(tones.squeeze_cos, pa.modulation_frequency))
    return tuple(out)


def outofphase_drives(
    sdf: SDFDrive,
    pa: PADrive,
    modes: ModeStructure,
    spin: Spin,
    half: int = 0,
    tones: CalibrationTones | None = None,
) -> tuple[tuple[Tone, ...], tuple[Tone, ...]]:
    """Residual ``(f, g)`` tones seen by the out-of-phase mode.

    The linear force has two parts: every in-phase force tone scaled by
    ``eta_o / eta_i`` (the same laser beat acts on both modes through their
    Lamb-Dicke parameters), and every parametric tone scaled by the
    displaced-equilibrium cross coupling
    ``K = b1o z1_eq sqrt(2 m w_i^2 / (hbar w_o))`` — modulating the trap
    curvature around a displaced equilibrium exerts a linear force on the
    other mode at the modulation frequency.  The quadratic term is
    ``g(t) = -Omega_R eta_o^2 cos(delta t - phase_spin)`` (second order of
    the same laser gradient, one quadrature ahead of the force).
    """
    force_scale = modes.eta_o / modes.eta_i
    f_tones = [
        replace(tn, amplitude=tn.amplitude * force_scale)
        for tn in sdf_inphase_drive(sdf, modes, spin, tones)
    ]
    cross = modes.pa_cross_coupling
    f_tones += [
        replace(tn, amplitude=tn.amplitude * cross)
        for tn in pa_inphase_drive(pa, half, tones)
    ]
    g_tones = (
        Tone(
            amplitude=-sdf.rabi * modes.eta_o**2,
            frequency=sdf.detuning,
            phase=sdf.phase(spin) - 0.5 * math.pi,  # cos(x) = sin(x + pi/2)
        ),
    )
    return tuple(f_tones), g_tones


def mirror_tones(tones: Sequence[Tone], t_sum: float) -> tuple[Tone, ...]:
    """Tones of the time-mirrored waveform ``w'(t) = w(t_sum - t)``.

    ``A sin(nu (t_sum - t) - phi) = -A sin(nu t - (nu t_sum - phi))``, so the
    mirror is again a tone with negated amplitude and a shifted phase (kept
    wrapped for numerical hygiene).
    """
    out = []
    for tn in tones:
        phase = math.remainder(tn.frequency * t_sum - tn.phase, 2.0 * math.pi)
        out.append(Tone(amplitude=-tn.amplitude, frequency=tn.frequency, phase=phase))
    return tuple(out)


# ---------------------------------------------------------------------------
# Protocol schedule
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProtocolSchedule:
    """Complete drive program, per spin branch and per mode.

    ``lanes`` maps ``(spin, mode)`` to an ordered tuple of contiguous
    :class:`~cotrap.gaussian.DriveFunction` segments covering
    ``[0, 2 t_split + t_hold]``: split (two halves with the parametric phase
    flipped), hold (drives off), recombine (exact time-mirror of the split).
    """

    t_split: float
    t_hold: float
    omega_in: float
    omega_out: float
    lanes: dict[tuple[Spin, Mode], tuple[DriveFunction, ...]]
    sdf: SDFDrive
    pa: PADrive
    tones: CalibrationTones

    @property
    def total_duration(self) -> float:
        return 2.0 * self.t_split + self.t_hold

    def lane(self, spin: Spin, mode: Mode) -> tuple[DriveFunction, ...]:
        return self.lanes[(spin, mode)]

    def omega(self, mode: Mode) -> float:
        return self.omega_in if mode == "in_phase" else self.omega_out

    def to_dict(self) -> dict[str, Any]:
        return {
            "t_split": self.t_split,
            "t_hold": self.t_hold,
            "omega_in": self.omega_in,
            "omega_out": self.omega_out,
            "sdf": self.sdf.to_dict(),
            "pa": self.pa.to_dict(),
            "tones": self.tones.to_dict(),
            "lanes": {
                f"{spin}:{mode}": [seg.to_dict() for seg in segs]
                for (spin, mode), segs in self.lanes.items()
            },
        }


def _lane_segments(
    f_half: Callable[[int], tuple[Tone, ...]],
    g_half: Callable[[int], tuple[Tone, ...]],
    t_split: float,
    t_hold: float,
    omega: float,
) -> tuple[DriveFunction, ...]:
    """Assemble split / hold / mirrored-recombination segments for one lane."""
    t_mid = 0.5 * t_split
    t_rec = t_split + t_hold
    t_end = t_rec + t_split
    t_sum = t_rec + t_split  # mirror map t -> t_sum - t sends rec. onto split
    segments = [
        DriveFunction(f_half(0), g_half(0), 0.0, t_mid, omega),
        DriveFunction(f_half(1), g_half(1), t_mid, t_split, omega),
    ]
    if t_hold > 0.0:
        segments.append(DriveFunction((), (), t_split, t_rec, omega))
    segments.append(
        DriveFunction(
            mirror_tones(f_half(1), t_sum),
            mirror_tones(g_half(1), t_sum),
            t_rec,
            t_rec + t_mid,
            omega,
        )
    )
    segments.append(
        DriveFunction(
            mirror_tones(f_half(0), t_sum),
            mirror_tones(g_half(0), t_sum),
            t_rec + t_mid,
            t_end,
            omega,
        )
    )
    return tuple(segments)


def build_schedule(
    sdf: SDFDrive,
    pa: PADrive,
    modes: ModeStructure,
    t_split: float,
    n_hold_periods: int = 0,
    tones: CalibrationTones | None = None,
    include_out_of_phase: bool = True,
) -> ProtocolSchedule:
    """Build the four-phase protocol schedule for both branches and modes.

    ``t_split`` must be a whole number of in-phase mode periods (the
    mirror-closure argument needs period-commensurate segment boundaries);
    the hold is specified directly as a period count.
    """
    if t_split <= 0:
        raise ValueError("t_split must be positive")
    period = 2.0 * math.pi / modes.omega_i
    n_split = t_split / period
    if abs(n_split - round(n_split)) > 1e-9 * max(1.0, n_split):
        raise ValueError(
            f"t_split = {t_split} is not a whole number of in-phase periods "
            f"({n_split:.6f} periods); use snapped_time()"
        )
    if n_hold_periods < 0 or n_hold_periods != int(n_hold_periods):
        raise ValueError("n_hold_periods must be a non-negative integer")
    tones = tones or CalibrationTones()
    t_hold = snapped_time(modes.omega_i, int(n_hold_periods))

    lanes: dict[tuple[Spin, Mode], tuple[DriveFunction, ...]] = {}
    for spin in SPINS:
        f_in = sdf_inphase_drive(sdf, modes, spin, tones)
        lanes[(spin, "in_phase")] = _lane_segments(
            lambda half, ft=f_in: ft,
            lambda half: pa_inphase_drive(pa, half, tones),
            t_split,
            t_hold,
            modes.omega_i,
        )
        if include_out_of_phase:
            lanes[(spin, "out_of_phase")] = _lane_segments(
                lambda half, s=spin: outofphase_drives(sdf, pa, modes, s, half, tones)[0],
                lambda half, s=spin: outofphase_drives(sdf, pa, modes, s, half, tones)[1],
                t_split,
                t_hold,
                modes.omega_o,
            )
    return ProtocolSchedule(
        t_split=t_split,
        t_hold=t_hold,
        omega_in=modes.omega_i,
        omega_out=modes.omega_o,
        lanes=lanes,
        sdf=sdf,
        pa=pa,
        tones=tones,
    )


# ---------------------------------------------------------------------------
# Schedule propagation
# ---------------------------------------------------------------------------


def propagate_schedule(
    schedule: ProtocolSchedule,
    spin: Spin,
    mode: Mode = "in_phase",
    until: float | None = None,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> GaussianPropagator:
    """Propagate one lane from the identity at t = 0.

    ``until`` stops mid-protocol (e.g. at ``t_split`` to inspect the opened
    superposition); it must lie within the schedule.
    """
    omega = schedule.omega(mode)
    state = GaussianPropagator.identity(omega)
    for seg in schedule.lane(spin, mode):
        if until is not None and until <= seg.t_start + 1e-15:
            break
        if until is not None and until < seg.t_end - 1e-15:
            seg = replace(seg, t_end=float(until))
        state = propagate(state, seg, rtol=rtol, atol=atol)
    return state


def sample_schedule(
    schedule: ProtocolSchedule,
    spin: Spin,
    mode: Mode = "in_phase",
    samples_per_period: int = 32,
    rtol: float = 1e-10,
    atol: float = 1e-12,
):
    """Dense sampling of one lane across the whole protocol.

    Returns ``(t, alpha, tau, phi, chi, final)`` arrays; sampling density is
    per period of the lane's mode frequency.
    """
    omega = schedule.omega(mode)
    period = 2.0 * math.pi / omega
    dt = period / samples_per_period
    state = GaussianPropagator.identity(omega)
    ts, als, tas, phs, chs = [], [], [], [], []
    for seg in schedule.lane(spin, mode):
        # round (not ceil) so period-commensurate segments get an exactly
        # uniform grid despite floating-point noise in duration / dt
        n = max(2, round(seg.duration / dt) + 1)
        grid = np.linspace(seg.t_start, seg.t_end, n)
        traj = propagate_sampled(state, seg, grid, rtol=rtol, atol=atol)
        ts.append(traj.t)
        als.append(traj.alpha)
        tas.append(traj.tau)
        phs.append(traj.phi)
        chs.append(traj.chi)
        state = traj.final
    return (
        np.concatenate(ts),
        np.concatenate(als),
        np.concatenate(tas),
        np.concatenate(phs),
        np.concatenate(chs),
        state,
    )


@dataclass(frozen=True)
class BranchPath:
    """Gridded branch displacement alpha(t), linearly interpolable.

    Stores the real and imaginary parts of alpha on a dense time grid; the
    envelopes vary slowly compared with the mode period, so linear
    interpolation at ``samples_per_period >= 64`` reproduces alpha(t) to a
    few times 1e-5 relative. Used by the collapse Monte Carlo to evaluate
    branch displacements at arbitrary jump times, vectorised.
    """

    t: np.ndarray
    re: np.ndarray
    im: np.ndarray
    omega: float
    t_end: float

    def alpha(self, times: np.ndarray) -> np.ndarray:
        return np.interp(times, self.t, self.re) + 1j * np.interp(
            times, self.t, self.im
        )


def branch_path(
    schedule: ProtocolSchedule,
    spin: Spin,
    mode: Mode = "in_phase",
    samples_per_period: int = 64,
) -> BranchPath:
    """Precompute alpha(t) for one lane on a dense grid (see BranchPath)."""
    t, alpha, _, _, _, final = sample_schedule(
        schedule, spin, mode, samples_per_period=samples_per_period
    )
    # Collapse duplicate segment-boundary samples so np.interp sees a
    # strictly increasing grid.
    keep = np.concatenate(([True], np.diff(t) > 0))
    return BranchPath(
        t=t[keep],
        re=np.real(alpha[keep]),
        im=np.imag(alpha[keep]),
        omega=schedule.omega(mode),
        t_end=schedule.total_duration,
    )


# ---------------------------------------------------------------------------
# Calibration
# ---------------------------------------------------------------------------


def _g_only_half_split(
    pa: PADrive, tones: CalibrationTones, t_split: float, omega: float
) -> GaussianPropagator:
    """Propagate the force-free first half of the split (tau dynamics only)."""
    seg = DriveFunction((), pa_inphase_drive(pa, 0, tones), 0.0, 0.5 * t_split, omega)
    return propagate(GaussianPropagator.identity(omega), seg)


def calibrate_pa_strength(
    modes: ModeStructure,
    t_split: float,
    gain_target: float,
    tones: CalibrationTones | None = None,
    tolerance: float = 1e-6,
) -> PADrive:
    """Find the parametric strength whose *measured* midpoint gain is G.

    The gain is ``G = e^r`` with ``r`` the squeeze magnitude reached at
    ``t_split/2``; to rotating-wave order ``r = Omega_PA t_split / 4``, and
    the root-find absorbs all corrections.  Scalar bracketed root-find to
    relative ``tolerance`` on G.
    """
    if gain_target <= 1.0:
        raise ValueError("gain target must exceed 1")
    tones = tones or CalibrationTones()
    omega = modes.omega_i
    freq = 2.0 * omega
    target_r = math.log(gain_target)
    guess = 4.0 * target_r / t_split

    def residual(strength: float) -> float:
        pa = PADrive(strength=strength, modulation_frequency=freq)
        state = _g_only_half_split(pa, tones, t_split, omega)
        return state.squeeze_magnitude - target_r

    lo, hi = 0.5 * guess, 1.5 * guess
    flo, fhi = residual(lo), residual(hi)
    while flo > 0.0:
        lo *= 0.5
        flo = residual(lo)
    while fhi < 0.0:
        hi *= 1.5
        fhi = residual(hi)
    strength = brentq(residual, lo, hi, xtol=guess * tolerance * 0.1)
    return PADrive(strength=float(strength), modulation_frequency=freq)


def calibrate_closure(
    sdf: SDFDrive,
    modes: ModeStructure,
    t_split: float,
    gain_target: float,
    tolerance: float = 1e-9,
    max_rounds: int = 12,
) -> tuple[PADrive, CalibrationTones, dict[str, float]]:
    """Calibrate (PA strength, both closure tones) jointly.

    Alternates two cheap scalar root-finds until self-consistent:

    1. parametric strength -> measured midpoint gain equals ``gain_target``;
    2. ``squeeze_cos`` -> Im tau = 0 at the split midpoint (which, by the
       within-split mirror symmetry of the parametric waveform, makes
       tau(t_split) vanish identically);

    then solves ``force_cos`` -> Im alpha(t_split) = 0 in closed form: the
    displacement response is affine in the force waveform, so two
    integrations determine the root exactly.

    Returns the calibrated drive, tones, and a diagnostics dict with the
    achieved residuals.
    """
    omega = modes.omega_i
    freq = 2.0 * omega
    target_r = math.log(gain_target)
    tones = CalibrationTones()
    pa = PADrive(strength=4.0 * target_r / t_split, modulation_frequency=freq)
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        pa = calibrate_pa_strength(modes, t_split, gain_target, tones, tolerance=1e-8)

        def im_tau_mid(c: float) -> float:
            probe = CalibrationTones(squeeze_cos=c, force_cos=tones.force_cos)
            return float(np.imag(_g_only_half_split(pa, probe, t_split, omega).tau))

        # Secant step from (0-ish) then bracketed refinement.
        c0 = tones.squeeze_cos
        f0 = im_tau_mid(c0)
        c1 = c0 + 0.01 * pa.strength if f0 != 0.0 else c0
        if f0 != 0.0:
            f1 = im_tau_mid(c1)
            slope = (f1 - f0) / (c1 - c0)
            root = c0 - f0 / slope
            width = max(abs(root - c0), 0.01 * pa.strength)
            lo, hi = root - width, root + width
            flo, fhi = im_tau_mid(lo), im_tau_mid(hi)
            grow = 0
            while flo * fhi > 0.0 and grow < 60:
                lo -= width
                hi += width
                flo, fhi = im_tau_mid(lo), im_tau_mid(hi)
                grow += 1
            root = brentq(im_tau_mid, lo, hi, xtol=1e-12 * max(1.0, pa.strength))
            tones = CalibrationTones(squeeze_cos=float(root), force_cos=tones.force_cos)
        # Convergence check on both targets.
        state_mid = _g_only_half_split(pa, tones, t_split, omega)
        gain_err = abs(state_mid.squeeze_magnitude - target_r)
        imtau_err = abs(float(np.imag(state_mid.tau)))
        if gain_err < tolerance and imtau_err < tolerance:
            break

    # Exact force_cos: Im alpha(t_split) is affine in the tone amplitude.
    def im_alpha_end(c_f: float) -> float:
        probe = CalibrationTones(squeeze_cos=tones.squeeze_cos, force_cos=c_f)
        f_tones = sdf_inphase_drive(sdf, modes, "up", probe)
        state = GaussianPropagator.identity(omega)
        for half in (0, 1):
            seg = DriveFunction(
                f_tones,
                pa_inphase_drive(pa, half, probe),
                0.5 * half * t_split,
                0.5 * (half + 1) * t_split,
                omega,
            )
            state = propagate(state, seg)
        return float(np.imag(state.alpha))

    a0 = im_alpha_end(0.0)
    scale = max(sdf.rabi * modes.eta_i, 1e-30)
    a1 = im_alpha_end(scale)
    c_f = -a0 / ((a1 - a0) / scale)
    tones = CalibrationTones(squeeze_cos=tones.squeeze_cos, force_cos=float(c_f))
    residual_alpha = abs(im_alpha_end(tones.force_cos))

    state_mid = _g_only_half_split(pa, tones, t_split, omega)
    diagnostics = {
        "rounds": float(rounds),
        "gain_measured": math.exp(state_mid.squeeze_magnitude),
        "im_tau_mid": float(np.imag(state_mid.tau)),
        "im_alpha_end": residual_alpha,
    }
    return pa, tones, diagnostics


# ---------------------------------------------------------------------------
# Real-space conversion
# ---------------------------------------------------------------------------


def real_space_amplitude(
    alpha: complex,
    modes: ModeStructure,
    which: Literal["ion", "flake"] = "flake",
    mode: Mode = "in_phase",
) -> float:
    """Peak real-space oscillation amplitude of one particle, metres.

    A coherent displacement alpha of a normal mode moves particle p by
    ``2 |alpha| b_p x0`` where ``b_p`` is the particle's mode-vector entry
    and ``x0`` the mode's ground-state length.
    """
    if mode == "in_phase":
        b = modes.b1i if which == "ion" else modes.b2i
        x0 = modes.x0_i
    else:
        b = modes.b1o if which == "ion" else modes.b2o
        x0 = modes.x0_o
    return 2.0 * abs(alpha) * abs(b) * x0


def superposition_separation(
    alpha_up: complex,
    alpha_down: complex,
    modes: ModeStructure,
    which: Literal["ion", "flake"] = "flake",
    mode: Mode = "in_phase",
) -> float:
    """Peak real-space separation between the two branch wavepackets."""
    if mode == "in_phase":
        b = modes.b1i if which == "ion" else modes.b2i
        x0 = modes.x0_i
    else:
        b = modes.b1o if which == "ion" else modes.b2o
        x0 = modes.x0_o
    return 2.0 * abs(alpha_up - alpha_down) * abs(b) * x0
