"""Monte Carlo simulation of unitary-jump collapse noise on the interferometer.

Model
-----
The composite trapped object undergoes Poissonian localisation events at a
rate ``gamma = (M / m_e)^2 / tau_e`` set by its total mass.  Each event
applies a momentum-axis displacement kick ``D(k)`` with ``k = i n
sigma_alpha`` (n standard normal) to *both* spin branches of the
superposition; expressed in the rotating frame of the in-phase mode the
kick at time ``t_j`` is ``k e^{-i omega t_j}``.  Left-composing the kick
into a branch's accumulated unitary contributes the phase ``Im(k_rot
conj(alpha_branch))``; because the spin-dependent force gives the branches
opposite displacement histories, those phases differ and the ensemble
fringe contrast decays as ``exp(-sigma0^2 gamma t)`` with ``sigma0 =
|alpha_final| sigma_alpha``.

Accounting modes
----------------
``phase_only`` (default, the normative model): each jump contributes only
its composition phase; the kick displacements are common-mode across the
branches, cancel in every branch-difference observable, and are not
tracked in the branch states, so the recorded final states keep the
noiseless recombination (``|alpha| -> 0``).

``full_displacement`` (diagnostic): kicks are additionally propagated
through the remaining drive with the homogeneous (parametric) flow.  This
keeps the exact per-branch states and adds the branch-antisymmetric
drive-work phase — the work the spin-dependent force does on the kicked
displacement, ``Im(conj(k) rho(s))`` with ``rho(s)`` the remaining drive
response pulled back to the jump time.  For a protocol that recombines
exactly, that work phase equals the composition phase, so the
branch-difference phase per kick is exactly twice the ``phase_only``
value.  The mode exists to expose that sensitivity; ensemble statistics
quoted against the ``sigma0^2 gamma`` diffusion law use ``phase_only``.

The jump list of a trajectory is reproducible from its integer seed alone
(counter-based generator), which makes ensembles deterministic for any
worker count.
"""

from __future__ import annotations

import math
import warnings as _warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Literal, NamedTuple, Sequence

import numpy as np

from .analysis import VisibilityResult
from .constants import ELECTRON_MASS, HBAR
from .crystal import ModeStructure
from .drives import BranchPath, Mode, ProtocolSchedule, Spin, sample_schedule
from .errors import PhysicsValidityError
from .gaussian import (
    GaussianPropagator,
    displace_compose,
    propagate,
    propagate_sampled,
)

__all__ = [
    "AnalyticDecay",
    "CollapseModel",
    "EnsembleResult",
    "KickStatistics",
    "PreparedProtocol",
    "TrajectoryRecord",
    "analytic_decay",
    "ensemble_visibility",
    "kick_statistics",
    "prepare_protocol",
    "propagate_with_jumps",
    "run_ensemble",
    "sample_jump",
    "sample_jump_times",
    "simulate_trajectory",
]

Sampler = Literal["exponential", "uniform", "bernoulli"]
JumpMode = Literal["phase_only", "full_displacement"]

_UINT64 = (1 << 64) - 1
# Trajectories at GRW-scale rates carry ~1e6 jumps; this bounds the size of
# the temporary arrays in the per-trajectory reduction.
_JUMP_CHUNK = 1 << 18
# Fixed task granularity for the worker pool; constant so that results are
# independent of the worker count.
_BATCH_SIZE = 64
# Acceptance probability per step of the literal per-step Bernoulli sampler.
_BERNOULLI_P = 0.02
# Resource guard: refuse trajectories whose expected jump count would exhaust
# memory (1e8 jumps is ~1 GB of transient arrays).
_MAX_EXPECTED_JUMPS = 1e8


# ---------------------------------------------------------------------------
# Model parameters and kick statistics


@dataclass(frozen=True)
class CollapseModel:
    """Localisation-model parameters.

    Attributes
    ----------
    tau_e:
        Coherence time of a single electron-mass constituent (s).  May be
        ``inf`` to switch collapses off.
    sigma:
        Critical localisation length (m).  May be ``inf`` (kicks vanish).
    """

    tau_e: float
    sigma: float

    def __post_init__(self) -> None:
        if math.isnan(self.tau_e) or self.tau_e <= 0:
            raise ValueError(f"tau_e must be positive, got {self.tau_e}")
        if math.isnan(self.sigma) or self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def sigma_p(self) -> float:
        """Momentum-localisation scale hbar / sigma (kg m/s)."""
        return HBAR / self.sigma


@dataclass(frozen=True)
class KickStatistics:
    """Derived jump statistics of the composite object.

    Attributes
    ----------
    gamma:
        Integrated collapse event rate of the composite object (1/s),
        ``(M / m_e)^2 / tau_e``.
    sigma_alpha:
        Standard deviation of the imaginary-axis (momentum) kick in the
        in-phase normal-mode phase space: the flake positional width of
        that mode over the localisation length, ``x0_i |b2_i| / sigma``.
    sigma_alpha_out:
        Same scale for the out-of-phase mode.  Suppressed by the flake's
        tiny out-of-phase amplitude (|b2_o| ~ 1/mu); kicks on that mode are
        not applied.
    mass_ratio:
        Flake mass over the electron mass.
    sigma, tau_e:
        The model parameters the statistics were derived from.
    """

    gamma: float
    sigma_alpha: float
    sigma_alpha_out: float
    mass_ratio: float
    sigma: float
    tau_e: float

    def __post_init__(self) -> None:
        if math.isnan(self.gamma) or self.gamma < 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if math.isnan(self.sigma_alpha) or self.sigma_alpha < 0:
            raise ValueError(f"sigma_alpha must be non-negative, got {self.sigma_alpha}")

    def dephasing_rate(self, alpha_final: complex) -> float:
        """Predicted visibility decay rate sigma0^2 gamma (1/s)."""
        sigma0 = abs(complex(alpha_final)) * self.sigma_alpha
        return sigma0 * sigma0 * self.gamma


def kick_statistics(
    model: CollapseModel,
    modes: ModeStructure,
    flake_mass: float | None = None,
    *,
    flake_radius: float | None = None,
) -> KickStatistics:
    """Derive jump rate and kick scales from the model parameters.

    The event rate uses the total flake mass (the ion adds one part in
    ~5e6).  The kick scale is the in-phase-mode ground-state length times
    the flake's modal amplitude ``b2_i ~ sqrt(m/M)`` over the localisation
    length.  When ``flake_radius`` is given and is not small compared with
    ``sigma``, a warning is emitted: the coherent ``(M/m_e)^2`` rate
    amplification assumes the object fits well inside one localisation
    volume.
    """
    mass = modes.flake.mass if flake_mass is None else flake_mass
    if mass <= 0:
        raise ValueError("flake mass must be positive")
    ratio = mass / ELECTRON_MASS
    gamma = ratio**2 / model.tau_e
    sigma_alpha = modes.x0_i * abs(modes.b2i) / model.sigma
    sigma_alpha_out = modes.x0_o * abs(modes.b2o) / model.sigma
    if (
        flake_radius is not None
        and math.isfinite(model.sigma)
        and flake_radius > 0.1 * model.sigma
    ):
        _warnings.warn(
            f"flake radius {flake_radius:.3e} m is not small compared with the "
            f"localisation length {model.sigma:.3e} m; the coherent (M/m_e)^2 "
            "rate amplification assumes the object fits inside one localisation "
            "volume",
            stacklevel=2,
        )
    return KickStatistics(
        gamma=gamma,
        sigma_alpha=sigma_alpha,
        sigma_alpha_out=sigma_alpha_out,
        mass_ratio=ratio,
        sigma=model.sigma,
        tau_e=model.tau_e,
    )


class AnalyticDecay(NamedTuple):
    """Diffusion-law prediction for collapse-induced dephasing."""

    sigma_phi: float  # rad, single-branch phase spread sigma0 sqrt(gamma t)
    visibility: float  # exp(-sigma0^2 gamma t)
    rate: float  # 1/s, visibility decay rate sigma0^2 gamma


def analytic_decay(
    stats: KickStatistics, alpha_final: complex, t: float
) -> AnalyticDecay:
    """Closed-form dephasing prediction at hold time ``t``.

    With ``sigma0 = |alpha_final| sigma_alpha``: phase spread ``sigma0
    sqrt(gamma t)``, visibility ``exp(-sigma0^2 gamma t)``, decay rate
    ``sigma0^2 gamma``.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    sigma0 = abs(complex(alpha_final)) * stats.sigma_alpha
    rate = sigma0 * sigma0 * stats.gamma
    return AnalyticDecay(
        sigma_phi=sigma0 * math.sqrt(stats.gamma * t),
        visibility=math.exp(-rate * t),
        rate=rate,
    )


# ---------------------------------------------------------------------------
# Jump sampling


def sample_jump(stats: KickStatistics, rng: np.random.Generator) -> complex:
    """One momentum-axis kick: ``i n sigma_alpha`` with n standard normal.

    The real part is exactly zero (position-axis kicks are suppressed and
    set to zero by construction).
    """
    return 1j * (stats.sigma_alpha * float(rng.standard_normal()))


def sample_jump_times(
    rate: float,
    duration: float,
    rng: np.random.Generator,
    method: Sampler = "exponential",
) -> np.ndarray:
    """Sample the ordered jump times of one trajectory over ``[0, duration)``.

    ``exponential`` draws exponential(rate) waiting times (the default).
    ``uniform`` draws a Poisson(rate * duration) count and orders uniform
    times — the same point process by the order-statistics property, used
    as a cross-validation route.  ``bernoulli`` performs a literal
    per-step acceptance trial with step probability 0.02, retained for
    fidelity to step-based formulations; it carries an O(p) discretisation
    bias and is the slowest.
    """
    if rate < 0:
        raise ValueError("rate must be non-negative")
    if duration < 0:
        raise ValueError("duration must be non-negative")
    if rate == 0.0 or duration == 0.0:
        return np.empty(0, dtype=float)

    expected = rate * duration
    if expected > _MAX_EXPECTED_JUMPS:
        raise ValueError(
            f"expected jump count {expected:.3e} exceeds {_MAX_EXPECTED_JUMPS:.0e}; "
            "reduce the event rate or the duration"
        )

    if method == "exponential":
        pieces: list[np.ndarray] = []
        last = 0.0
        scale = 1.0 / rate
        remaining = expected
        while True:
            # overdraw by 4.5 sigma so a second block is needed only ~3e-6
            # of the time, and trim with a binary search
            block = min(1 << 22, max(16, int(remaining + 4.5 * math.sqrt(remaining) + 16)))
            cum = last + np.cumsum(rng.exponential(scale, size=block))
            if cum[-1] >= duration:
                cut = int(np.searchsorted(cum, duration, side="left"))
                pieces.append(cum[:cut])
                break
            pieces.append(cum)
            last = float(cum[-1])
            remaining = (duration - last) * rate
        if len(pieces) == 1:
            return pieces[0]
        return np.concatenate(pieces)

    if method == "uniform":
        count = int(rng.poisson(rate * duration))
        return np.sort(rng.uniform(0.0, duration, size=count))

    if method == "bernoulli":
        steps = max(1, math.ceil(duration * rate / _BERNOULLI_P))
        dt = duration / steps
        p = rate * dt
        pieces = []
        start = 0
        block = 1 << 20
        while start < steps:
            n = min(block, steps - start)
            hits = np.nonzero(rng.random(n) < p)[0]
            if hits.size:
                pieces.append((start + hits + 0.5) * dt)
            start += n
        if not pieces:
            return np.empty(0, dtype=float)
        return np.concatenate(pieces)

    raise ValueError(f"unknown sampling method {method!r}")


def _seed_key(seed: int) -> np.ndarray:
    if not 0 <= seed < (1 << 128):
        raise ValueError("seed must be a non-negative integer below 2**128")
    return np.array([seed & _UINT64, (seed >> 64) & _UINT64], dtype=np.uint64)


def _rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=_seed_key(seed)))


# ---------------------------------------------------------------------------
# Prepared protocol (shared per-ensemble state)


@dataclass(frozen=True)
class _HomogeneousFlow:
    """Fundamental solutions of the drive-free displacement dynamics.

    ``u`` and ``v`` are the trajectories of unit initial displacements 1
    and i under the parametric part of the drive alone (the spin-dependent
    force enters the displacement equation only inhomogeneously, so this
    flow is branch-independent).  Together they give the real-linear map
    taking a displacement inserted at time s to any later time.
    """

    t: np.ndarray
    u: np.ndarray
    v: np.ndarray
    u_end: complex
    v_end: complex

    def matrices(self, times: np.ndarray) -> np.ndarray:
        """Interpolated 2x2 real transfer matrices P(t) (columns: 1, i)."""
        out = np.empty((times.size, 2, 2))
        out[:, 0, 0] = np.interp(times, self.t, np.real(self.u))
        out[:, 1, 0] = np.interp(times, self.t, np.imag(self.u))
        out[:, 0, 1] = np.interp(times, self.t, np.real(self.v))
        out[:, 1, 1] = np.interp(times, self.t, np.imag(self.v))
        return out

    @property
    def end_matrix(self) -> np.ndarray:
        return np.array(
            [
                [self.u_end.real, self.v_end.real],
                [self.u_end.imag, self.v_end.imag],
            ]
        )


def _invert_2x2(mats: np.ndarray) -> np.ndarray:
    det = mats[..., 0, 0] * mats[..., 1, 1] - mats[..., 0, 1] * mats[..., 1, 0]
    inv = np.empty_like(mats)
    inv[..., 0, 0] = mats[..., 1, 1]
    inv[..., 1, 1] = mats[..., 0, 0]
    inv[..., 0, 1] = -mats[..., 0, 1]
    inv[..., 1, 0] = -mats[..., 1, 0]
    return inv / det[..., None, None]


# Refinement factor of the phase-kernel table relative to the path grid.
# The table linearises Re(e^{i omega t} alpha(t)); its curvature error is
# (omega h / refine)^2 / 8 ~ 2e-5 relative at 64 path samples per period.
_PHASE_REFINE = 8


@dataclass(frozen=True)
class _FastGrid:
    """Uniform-grid kernel table for the jump-phase reduction.

    The per-jump phase weight is ``Re(e^{i omega t} alpha(t))`` — only the
    real part of the pre-rotated branch displacement enters.  On a uniform
    path grid that scalar kernel is tabulated on a ``_PHASE_REFINE``-times
    finer grid (linear in alpha between path samples, exact rotation at
    the table points), and jump-time evaluation reduces to one indexed
    linear blend.  Agrees with interpolate-then-rotate to ~(omega h /
    refine)^2 / 8 relative.
    """

    inv_step: float
    size: int
    table: np.ndarray


def _make_fast_grid(path: BranchPath, omega: float) -> _FastGrid | None:
    t = path.t
    n = t.size
    if n < 2 or t[0] != 0.0:
        return None
    h = float(t[-1]) / (n - 1)
    if h <= 0 or np.max(np.abs(t - h * np.arange(n))) > 1e-6 * h:
        return None
    size = (n - 1) * _PHASE_REFINE + 1
    step = h / _PHASE_REFINE
    ts = step * np.arange(size)
    alpha = np.interp(ts, t, path.re) + 1j * np.interp(ts, t, path.im)
    table = np.ascontiguousarray((np.exp(1j * omega * ts) * alpha).real)
    return _FastGrid(inv_step=1.0 / step, size=size, table=table)


@dataclass(frozen=True)
class PreparedProtocol:
    """Noiseless branch solutions shared by all trajectories of an ensemble.

    Holds the dense displacement paths and final propagators of both spin
    branches (in-phase mode), plus — for the ``full_displacement`` mode —
    the homogeneous transfer flow used to evolve kick displacements.
    """

    schedule: ProtocolSchedule
    omega: float
    duration: float
    path_up: BranchPath
    path_down: BranchPath
    final_up: GaussianPropagator
    final_down: GaussianPropagator
    flow: _HomogeneousFlow | None = None
    # True when the branch displacements are exact negatives of each other
    # (the usual spin-dependent-force situation); enables a halved-work fast
    # path in the jump-phase reduction.
    paths_antisymmetric: bool = False
    fast_grid: _FastGrid | None = None

    @property
    def noiseless_phase_difference(self) -> float:
        return self.final_up.state_phase - self.final_down.state_phase


def _branch_path_and_final(
    schedule: ProtocolSchedule,
    spin: Spin,
    samples_per_period: int,
    rtol: float,
    atol: float,
) -> tuple[BranchPath, GaussianPropagator]:
    t, alpha, _, _, _, final = sample_schedule(
        schedule, spin, "in_phase", samples_per_period=samples_per_period,
        rtol=rtol, atol=atol,
    )
    keep = np.concatenate(([True], np.diff(t) > 0))
    path = BranchPath(
        t=t[keep],
        re=np.real(alpha[keep]),
        im=np.imag(alpha[keep]),
        omega=schedule.omega_in,
        t_end=schedule.total_duration,
    )
    return path, final


def _homogeneous_flow(
    schedule: ProtocolSchedule,
    samples_per_period: int,
    rtol: float,
    atol: float,
) -> _HomogeneousFlow:
    omega = schedule.omega_in
    dt = 2.0 * math.pi / omega / samples_per_period
    state_u = GaussianPropagator(
        alpha=1.0 + 0.0j, tau=0.0j, phi=0.0, chi=0.0, t=0.0, omega=omega
    )
    state_v = GaussianPropagator(
        alpha=1.0j, tau=0.0j, phi=0.0, chi=0.0, t=0.0, omega=omega
    )
    ts: list[np.ndarray] = []
    us: list[np.ndarray] = []
    vs: list[np.ndarray] = []
    for seg in schedule.lane("up", "in_phase"):
        seg_free = replace(seg, f_tones=())
        n = max(2, round(seg.duration / dt) + 1)
        grid = np.linspace(seg.t_start, seg.t_end, n)
        tu = propagate_sampled(state_u, seg_free, grid, rtol=rtol, atol=atol)
        tv = propagate_sampled(state_v, seg_free, grid, rtol=rtol, atol=atol)
        ts.append(tu.t)
        us.append(tu.alpha)
        vs.append(tv.alpha)
        state_u = tu.final
        state_v = tv.final
    t = np.concatenate(ts)
    keep = np.concatenate(([True], np.diff(t) > 0))
    return _HomogeneousFlow(
        t=t[keep],
        u=np.concatenate(us)[keep],
        v=np.concatenate(vs)[keep],
        u_end=complex(state_u.alpha),
        v_end=complex(state_v.alpha),
    )


def prepare_protocol(
    schedule: ProtocolSchedule,
    *,
    mode: JumpMode = "phase_only",
    samples_per_period: int = 64,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> PreparedProtocol:
    """Integrate the noiseless branches once for reuse across trajectories."""
    path_up, final_up = _branch_path_and_final(
        schedule, "up", samples_per_period, rtol, atol
    )
    path_down, final_down = _branch_path_and_final(
        schedule, "down", samples_per_period, rtol, atol
    )
    flow = None
    if mode == "full_displacement":
        flow = _homogeneous_flow(schedule, samples_per_period, rtol, atol)
    scale = max(1.0, float(np.max(np.hypot(path_up.re, path_up.im))))
    antisym = (
        np.array_equal(path_up.t, path_down.t)
        and float(np.max(np.abs(path_up.re + path_down.re))) < 1e-8 * scale
        and float(np.max(np.abs(path_up.im + path_down.im))) < 1e-8 * scale
    )
    fast_grid = _make_fast_grid(path_up, schedule.omega_in) if antisym else None
    return PreparedProtocol(
        schedule=schedule,
        omega=schedule.omega_in,
        duration=schedule.total_duration,
        path_up=path_up,
        path_down=path_down,
        final_up=final_up,
        final_down=final_down,
        flow=flow,
        paths_antisymmetric=antisym,
        fast_grid=fast_grid,
    )


# ---------------------------------------------------------------------------
# Trajectories


@dataclass(frozen=True)
class TrajectoryRecord:
    """Outcome of one Monte Carlo trajectory (both spin branches).

    ``jump_amplitudes`` stores the sampled momentum-axis kicks ``i n
    sigma_alpha`` (purely imaginary); the rotating-frame factor
    ``e^{-i omega t_j}`` is applied when composing, not stored.  For
    trajectories whose jump count exceeds the recording limit the lists
    are elided (``jumps_recorded`` False) and only the count is kept.
    """

    seed: int
    jump_count: int
    jump_times: tuple[float, ...]
    jump_amplitudes: tuple[complex, ...]
    final_up: GaussianPropagator
    final_down: GaussianPropagator
    phase_difference: float
    jumps_recorded: bool

    def to_dict(self) -> dict[str, object]:
        """JSON-serialisable form (one line per trajectory in stream logs)."""

        def prop(p: GaussianPropagator) -> dict[str, object]:
            return {
                "alpha": [p.alpha.real, p.alpha.imag],
                "tau": [p.tau.real, p.tau.imag],
                "phi": p.phi,
                "chi": p.chi,
                "t": p.t,
                "omega": p.omega,
            }

        return {
            "seed": self.seed,
            "jump_count": self.jump_count,
            "phase_difference": self.phase_difference,
            "jumps_recorded": self.jumps_recorded,
            "jump_times": list(self.jump_times),
            "jump_amplitudes": [[k.real, k.imag] for k in self.jump_amplitudes],
            "final_up": prop(self.final_up),
            "final_down": prop(self.final_down),
        }


def _interp_weights(
    grid: np.ndarray, times: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Shared linear-interpolation stencil (lower index, upper index, weight)."""
    hi = np.clip(np.searchsorted(grid, times, side="right"), 1, grid.size - 1)
    lo = hi - 1
    w = (times - grid[lo]) / (grid[hi] - grid[lo])
    return lo, hi, w


def _fast_grid_phase(fg: _FastGrid, times: np.ndarray, kicks_imag: np.ndarray) -> float:
    """Jump-phase sum over one branch on a uniform grid (see _FastGrid)."""
    total = 0.0
    table = fg.table
    for start in range(0, times.size, _JUMP_CHUNK):
        sl = slice(start, start + _JUMP_CHUNK)
        pos = times[sl] * fg.inv_step
        idx = pos.astype(np.intp)  # truncation == floor for pos >= 0
        np.minimum(idx, fg.size - 2, out=idx)
        w = pos - idx
        val = np.take(table, idx + 1)
        lo = np.take(table, idx)
        val -= lo
        val *= w
        val += lo
        total += float(kicks_imag[sl] @ val)
    return total


def _composition_phases(
    prep: PreparedProtocol, times: np.ndarray, kicks_imag: np.ndarray
) -> tuple[float, float]:
    """Summed composition phases Im(k_rot conj(alpha_branch)) per branch.

    ``k_rot = i kappa e^{-i omega t}`` gives ``Im(k_rot conj(alpha)) =
    kappa (cos(omega t) Re(alpha) - sin(omega t) Im(alpha))``, which equals
    ``kappa Re(e^{i omega t} alpha)``.  On a uniform path grid with exact
    branch antisymmetry the pre-rotated fast kernel is used; otherwise the
    generic interpolation route.
    """
    if prep.fast_grid is not None and prep.paths_antisymmetric:
        phi_up = _fast_grid_phase(prep.fast_grid, times, kicks_imag)
        return phi_up, -phi_up
    phi_up = 0.0
    phi_down = 0.0
    omega = prep.omega
    up, down = prep.path_up, prep.path_down
    for start in range(0, times.size, _JUMP_CHUNK):
        sl = slice(start, start + _JUMP_CHUNK)
        t = times[sl]
        kim = kicks_imag[sl]
        weight = kim * np.cos(omega * t)
        weight_s = kim * np.sin(omega * t)
        lo, hi, w = _interp_weights(up.t, t)
        re = up.re[lo] + w * (up.re[hi] - up.re[lo])
        im = up.im[lo] + w * (up.im[hi] - up.im[lo])
        contrib_up = float(weight @ re - weight_s @ im)
        phi_up += contrib_up
        if prep.paths_antisymmetric:
            phi_down -= contrib_up
        else:
            if not np.array_equal(down.t, up.t):
                lo, hi, w = _interp_weights(down.t, t)
            re = down.re[lo] + w * (down.re[hi] - down.re[lo])
            im = down.im[lo] + w * (down.im[hi] - down.im[lo])
            phi_down += float(weight @ re - weight_s @ im)
    return phi_up, phi_down


def _full_displacement_update(
    prep: PreparedProtocol, times: np.ndarray, kicks_imag: np.ndarray
) -> tuple[float, float, complex]:
    """Exact per-branch jump phases and the common final extra displacement.

    Processes jumps in time order: each kick is evolved with the
    homogeneous flow; composition phases are evaluated against the running
    branch displacement (noiseless path plus previously evolved kicks);
    the drive-work phase of each kick is ``Im(conj(k) rho_b(s))`` with
    ``rho_b(s) = M(s, T) alpha_b(T) - alpha_b(s)`` the remaining drive
    response pulled back to the jump time.
    """
    flow = prep.flow
    if flow is None:
        raise ValueError("prepared protocol lacks the homogeneous flow")
    omega = prep.omega
    p_mats = flow.matrices(times)
    p_inv = _invert_2x2(p_mats)
    p_end = flow.end_matrix
    p_end_inv = _invert_2x2(p_end[None, :, :])[0]

    k_rot = 1j * kicks_imag * np.exp(-1j * omega * times)
    k_vec = np.stack([k_rot.real, k_rot.imag], axis=1)

    # Prefix sums of back-propagated kicks; d_j = P(s_j) @ prefix_{j-1} is
    # the displacement accumulated from earlier kicks, present at jump j.
    back = np.einsum("nij,nj->ni", p_inv, k_vec)
    prefix = np.cumsum(back, axis=0)
    prev = np.vstack([np.zeros((1, 2)), prefix[:-1]])
    d = np.einsum("nij,nj->ni", p_mats, prev)
    d_c = d[:, 0] + 1j * d[:, 1]

    phases = {}
    for label, path, final in (
        ("up", prep.path_up, prep.final_up),
        ("down", prep.path_down, prep.final_down),
    ):
        alpha_s = path.alpha(times)
        alpha_end = complex(final.alpha)
        w = p_end_inv @ np.array([alpha_end.real, alpha_end.imag])
        pulled = np.einsum("nij,j->ni", p_mats, w)
        rho = (pulled[:, 0] + 1j * pulled[:, 1]) - alpha_s
        running = alpha_s + d_c
        comp = np.imag(k_rot * np.conj(running))
        work = np.imag(np.conj(k_rot) * rho)
        phases[label] = float(np.sum(comp + work))

    extra_vec = p_end @ prefix[-1] if times.size else np.zeros(2)
    extra = complex(extra_vec[0], extra_vec[1])
    return phases["up"], phases["down"], extra


def simulate_trajectory(
    schedule: ProtocolSchedule,
    stats: KickStatistics,
    seed: int,
    *,
    sampler: Sampler = "exponential",
    mode: JumpMode = "phase_only",
    max_recorded_jumps: int | None = 1024,
    prepared: PreparedProtocol | None = None,
    samples_per_period: int = 64,
) -> TrajectoryRecord:
    """Run one collapse-noise trajectory over the full protocol.

    The jump sequence is fully determined by ``seed``.  ``prepared`` (from
    :func:`prepare_protocol`) amortises the noiseless branch integration
    across an ensemble; when omitted it is computed here.
    """
    prep = prepared
    if prep is None:
        prep = prepare_protocol(
            schedule, mode=mode, samples_per_period=samples_per_period
        )
    if mode == "full_displacement" and prep.flow is None:
        raise ValueError(
            "prepared protocol was built without mode='full_displacement'"
        )
    try:
        rng = _rng_for(seed)
        times = sample_jump_times(stats.gamma, prep.duration, rng, sampler)
        # Unit normals drawn in single precision (6e-8 relative on each kick,
        # orders of magnitude below every observable's tolerance); the kick
        # scale sigma_alpha is folded in afterwards.
        normals = rng.standard_normal(times.size, dtype=np.float32)

        final_up = prep.final_up
        final_down = prep.final_down
        if mode == "phase_only":
            raw_up, raw_down = _composition_phases(prep, times, normals)
            dphi_up = stats.sigma_alpha * raw_up
            dphi_down = stats.sigma_alpha * raw_down
        else:
            kicks_imag = stats.sigma_alpha * normals.astype(np.float64)
            dphi_up, dphi_down, extra = _full_displacement_update(
                prep, times, kicks_imag
            )
            final_up = replace(final_up, alpha=complex(final_up.alpha) + extra)
            final_down = replace(final_down, alpha=complex(final_down.alpha) + extra)
        final_up = replace(final_up, phi=final_up.phi + dphi_up)
        final_down = replace(final_down, phi=final_down.phi + dphi_down)
    except PhysicsValidityError as exc:
        raise PhysicsValidityError(
            f"trajectory with seed {seed} failed: {exc}", time=exc.time
        ) from exc

    record_full = max_recorded_jumps is None or times.size <= max_recorded_jumps
    return TrajectoryRecord(
        seed=seed,
        jump_count=int(times.size),
        jump_times=tuple(float(t) for t in times) if record_full else (),
        jump_amplitudes=(
            tuple(complex(0.0, stats.sigma_alpha * float(k)) for k in normals)
            if record_full
            else ()
        ),
        final_up=final_up,
        final_down=final_down,
        phase_difference=final_up.state_phase - final_down.state_phase,
        jumps_recorded=record_full,
    )


def propagate_with_jumps(
    schedule: ProtocolSchedule,
    spin: Spin,
    jumps: Sequence[tuple[float, complex]],
    mode: Mode = "in_phase",
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> GaussianPropagator:
    """Reference piecewise propagation with jumps composed mid-evolution.

    ``jumps`` holds ``(time, sampled_amplitude)`` pairs; the sampled
    amplitude is the momentum-axis kick (as from :func:`sample_jump`), and
    the rotating-frame factor ``e^{-i omega t}`` is applied here.  Exact
    (integrator-precision) but one ODE solve per segment piece — used to
    validate the vectorised trajectory fast paths.
    """
    omega = schedule.omega(mode)
    ordered = sorted((float(t), complex(k)) for t, k in jumps)
    for t, _ in ordered:
        if not 0.0 <= t <= schedule.total_duration:
            raise ValueError(f"jump time {t} outside the protocol")
    state = GaussianPropagator.identity(omega)
    queue = list(ordered)

    def apply_jumps_at(state: GaussianPropagator, upto: float) -> GaussianPropagator:
        while queue and queue[0][0] <= upto + 1e-15:
            t_j, k = queue.pop(0)
            k_rot = k * np.exp(-1j * omega * t_j)
            alpha, phase = displace_compose(k_rot, state.alpha)
            state = replace(state, alpha=alpha, phi=state.phi + phase)
        return state

    for seg in schedule.lane(spin, mode):
        state = apply_jumps_at(state, seg.t_start)
        cursor = seg.t_start
        while queue and queue[0][0] < seg.t_end - 1e-15:
            t_j = queue[0][0]
            if t_j > cursor + 1e-15:
                state = propagate(
                    state, replace(seg, t_start=cursor, t_end=t_j), rtol=rtol, atol=atol
                )
                cursor = t_j
            state = apply_jumps_at(state, cursor)
        if seg.t_end > cursor + 1e-15:
            state = propagate(
                state, replace(seg, t_start=cursor, t_end=seg.t_end), rtol=rtol, atol=atol
            )
    state = apply_jumps_at(state, schedule.total_duration)
    return state


# ---------------------------------------------------------------------------
# Ensembles


@dataclass(frozen=True)
class EnsembleResult:
    """Reduced Monte Carlo ensemble.

    ``phases`` and ``jump_counts`` are ordered by trajectory index, so the
    result is identical for any worker count.
    """

    master_seed: int
    n_trajectories: int
    sampler: str
    mode: str
    phases: np.ndarray
    jump_counts: np.ndarray
    records: tuple[TrajectoryRecord, ...]
    visibility: VisibilityResult

    @property
    def mean_jump_count(self) -> float:
        return float(np.mean(self.jump_counts)) if self.jump_counts.size else 0.0

    @property
    def phase_std(self) -> float:
        if self.phases.size < 2:
            return 0.0
        return float(np.std(self.phases, ddof=1))


def ensemble_visibility(
    records: Sequence[TrajectoryRecord] | np.ndarray,
    *,
    bootstrap: int = 200,
    seed: int = 0,
) -> VisibilityResult:
    """Fringe contrast ``|mean e^{i delta phi}|`` over an ensemble.

    Accepts trajectory records or a plain array of final phase
    differences.  The standard error is estimated by a seeded bootstrap
    over trajectories (``bootstrap`` resamples; 0 disables).
    """
    if isinstance(records, np.ndarray):
        phases = np.asarray(records, dtype=float)
    else:
        phases = np.array([r.phase_difference for r in records], dtype=float)
    if phases.size == 0:
        raise ValueError("need at least one trajectory")
    z = np.exp(1j * phases)
    value = float(abs(z.mean()))
    stderr = None
    if bootstrap > 0 and phases.size > 1:
        rng = np.random.default_rng(seed)
        idx = rng.integers(0, phases.size, size=(bootstrap, phases.size))
        resampled = np.abs(z[idx].mean(axis=1))
        stderr = float(np.std(resampled, ddof=1))
    return VisibilityResult(value=value, stderr=stderr)


def _seed_for(master_seed: int, index: int) -> int:
    return (master_seed << 64) | index


def _simulate_batch(
    prep: PreparedProtocol,
    stats: KickStatistics,
    master_seed: int,
    indices: Sequence[int],
    sampler: Sampler,
    mode: JumpMode,
    max_recorded_jumps: int | None,
) -> list[TrajectoryRecord]:
    return [
        simulate_trajectory(
            prep.schedule,
            stats,
            _seed_for(master_seed, i),
            sampler=sampler,
            mode=mode,
            max_recorded_jumps=max_recorded_jumps,
            prepared=prep,
        )
        for i in indices
    ]


def run_ensemble(
    schedule: ProtocolSchedule,
    stats: KickStatistics,
    n_trajectories: int,
    master_seed: int,
    *,
    workers: int | None = None,
    sampler: Sampler = "exponential",
    mode: JumpMode = "phase_only",
    max_recorded_jumps: int | None = 0,
    bootstrap: int = 200,
    samples_per_period: int = 64,
    prepared: PreparedProtocol | None = None,
) -> EnsembleResult:
    """Run ``n_trajectories`` independent trajectories and reduce them.

    Per-trajectory seeds are ``(master_seed, index)`` pairs fed to a
    counter-based generator, and the reduction is keyed by index, so the
    result — including the bootstrap error — is identical for any
    ``workers`` value.  By default individual jump lists are not recorded
    (``max_recorded_jumps=0``); pass ``None`` to record all.
    """
    if n_trajectories <= 0:
        raise ValueError("n_trajectories must be positive")
    if not 0 <= master_seed < (1 << 64):
        raise ValueError("master_seed must fit in 64 bits")
    prep = prepared
    if prep is None:
        prep = prepare_protocol(
            schedule, mode=mode, samples_per_period=samples_per_period
        )
    if mode == "full_displacement" and prep.flow is None:
        raise ValueError("prepared protocol was built without mode='full_displacement'")

    indices = list(range(n_trajectories))
    batches = [
        indices[i : i + _BATCH_SIZE] for i in range(0, n_trajectories, _BATCH_SIZE)
    ]
    records: list[TrajectoryRecord | None] = [None] * n_trajectories
    if workers is None or workers <= 1:
        for batch in batches:
            for idx, rec in zip(
                batch,
                _simulate_batch(
                    prep, stats, master_seed, batch, sampler, mode, max_recorded_jumps
                ),
            ):
                records[idx] = rec
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(
                    _simulate_batch,
                    prep,
                    stats,
                    master_seed,
                    batch,
                    sampler,
                    mode,
                    max_recorded_jumps,
                )
                for batch in batches
            ]
            for batch, future in zip(batches, futures):
                for idx, rec in zip(batch, future.result()):
                    records[idx] = rec

    done = tuple(r for r in records if r is not None)
    if len(done) != n_trajectories:
        raise RuntimeError("ensemble reduction lost trajectories")
    phases = np.array([r.phase_difference for r in done], dtype=float)
    jump_counts = np.array([r.jump_count for r in done], dtype=np.int64)
    visibility = ensemble_visibility(phases, bootstrap=bootstrap, seed=master_seed)
    return EnsembleResult(
        master_seed=master_seed,
        n_trajectories=n_trajectories,
        sampler=sampler,
        mode=mode,
        phases=phases,
        jump_counts=jump_counts,
        records=done,
        visibility=visibility,
    )
