"""cotrap: interferometry of an ion co-trapped with a charged flake.

The package simulates a two-particle trapped crystal whose in-phase
motional mode is split into a spin-dependent superposition by a
spin-dependent force, amplified parametrically, optionally held, and
recombined.  It provides

- :mod:`cotrap.crystal` — closed-form normal-mode structure and
  feasibility estimates,
- :mod:`cotrap.gaussian` — exact propagation of displaced-squeezed states
  under force + parametric drives, plus the phase-space operator algebra,
- :mod:`cotrap.drives` — protocol schedules and closure calibration,
- :mod:`cotrap.collapse` — unitary-jump collapse noise as seeded Monte
  Carlo over trajectories,
- :mod:`cotrap.analysis` — visibility, decay fits, macroscopicity,
  exclusion regions and the environmental decoherence budget,
- :mod:`cotrap.fock` — a truncated number-basis oracle used for
  verification,
- :mod:`cotrap.config` / :mod:`cotrap.output` / :mod:`cotrap.cli` — the
  configuration-driven command line with manifest-tracked outputs.
"""

from ._version import __version__
from .analysis import (
    ADLER_POINT,
    GAMMA_TARGET_RANGE,
    GRW_POINT,
    DecayFit,
    DecoherenceBudget,
    Environment,
    ExclusionRegion,
    ThermalState,
    VisibilityResult,
    decoherence_budget,
    displaced_thermal_visibility,
    exclusion_region,
    fit_decay,
    fringe_pattern,
    gaussian_thermal_trace,
    general_gaussian_visibility,
    macroscopicity,
)
from .collapse import (
    AnalyticDecay,
    CollapseModel,
    EnsembleResult,
    KickStatistics,
    PreparedProtocol,
    TrajectoryRecord,
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
from .config import RunConfig, load_config, parse_config_text
from .constants import (
    ATOMIC_MASS,
    BOLTZMANN,
    ELECTRON_MASS,
    ELEMENTARY_CHARGE,
    EPSILON_0,
    HBAR,
    SPEED_OF_LIGHT,
)
from .crystal import (
    FeasibilityReport,
    FlakeGeometry,
    LaserSpec,
    ModeStructure,
    ParticleSpec,
    TrapSpec,
    feasibility,
    mode_structure,
    yb174_ion,
)
from .drives import (
    BranchPath,
    CalibrationTones,
    PADrive,
    ProtocolSchedule,
    SDFDrive,
    build_schedule,
    calibrate_closure,
    propagate_schedule,
    real_space_amplitude,
    sample_schedule,
    snapped_time,
    superposition_separation,
)
from .errors import (
    ConfigError,
    CotrapError,
    OracleError,
    PhysicsValidityError,
)
from .gaussian import (
    DriveFunction,
    GaussianPropagator,
    Tone,
    Trajectory,
    compose,
    dagger,
    displace_compose,
    propagate,
    propagate_sampled,
    pull_displacement_through_squeeze,
    push_displacement_through_squeeze,
    rotate_displacement,
    squeeze_compose,
    tau_to_zeta,
    zeta_to_tau,
)

__all__ = [
    "__version__",
    # constants
    "ATOMIC_MASS",
    "BOLTZMANN",
    "ELECTRON_MASS",
    "ELEMENTARY_CHARGE",
    "EPSILON_0",
    "HBAR",
    "SPEED_OF_LIGHT",
    # errors
    "ConfigError",
    "CotrapError",
    "OracleError",
    "PhysicsValidityError",
    # crystal
    "FeasibilityReport",
    "FlakeGeometry",
    "LaserSpec",
    "ModeStructure",
    "ParticleSpec",
    "TrapSpec",
    "feasibility",
    "mode_structure",
    "yb174_ion",
    # gaussian
    "DriveFunction",
    "GaussianPropagator",
    "Tone",
    "Trajectory",
    "compose",
    "dagger",
    "displace_compose",
    "propagate",
    "propagate_sampled",
    "pull_displacement_through_squeeze",
    "push_displacement_through_squeeze",
    "rotate_displacement",
    "squeeze_compose",
    "tau_to_zeta",
    "zeta_to_tau",
    # drives
    "BranchPath",
    "CalibrationTones",
    "PADrive",
    "ProtocolSchedule",
    "SDFDrive",
    "build_schedule",
    "calibrate_closure",
    "propagate_schedule",
    "real_space_amplitude",
    "sample_schedule",
    "snapped_time",
    "superposition_separation",
    # collapse
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
    # analysis
    "ADLER_POINT",
    "GAMMA_TARGET_RANGE",
    "GRW_POINT",
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
    # config
    "RunConfig",
    "load_config",
    "parse_config_text",
]
