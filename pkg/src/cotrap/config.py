"""Run configuration: commented JSON with explicit unit suffixes.

A run is described by a single JSON document.  Line (``//``) and block
(``/* */``) comments are stripped before parsing.  Every physical quantity
is written as a string of the form ``"<number> <unit>"`` (``"174 u"``,
``"1 MHz"``, ``"0.8 um"``); plain JSON numbers are reserved for genuinely
dimensionless values (counts, seeds, gain targets).  Unknown keys anywhere
in the document are rejected, as are missing required keys, so a config
that parses is fully specified.

Frequencies in hertz units (Hz, kHz, MHz, GHz, THz) denote ordinary
frequencies and are converted to angular frequencies (multiplied by
``2 pi``); values in ``rad/s`` are taken verbatim.  All parsed quantities
are stored in strict SI (kg, C, m, s, rad/s, Pa, K, H, A).

:meth:`RunConfig.to_json` writes the canonical form — every quantity
re-expressed in its SI unit with a shortest round-trip float — so
parse -> serialize -> parse is the identity and the SHA-256 of the
canonical form (:meth:`RunConfig.config_hash`) identifies the
configuration in run manifests.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

from .constants import ATOMIC_MASS, ELEMENTARY_CHARGE
from .crystal import (
    FlakeGeometry,
    LaserSpec,
    ModeStructure,
    ParticleSpec,
    TrapSpec,
    mode_structure,
)
from .errors import ConfigError

__all__ = [
    "CollapseConfig",
    "CrystalConfig",
    "DriveConfig",
    "EnsembleConfig",
    "EnvironmentConfig",
    "ExclusionConfig",
    "ProtocolConfig",
    "RunConfig",
    "load_config",
    "parse_config_text",
    "parse_quantity",
    "strip_json_comments",
]

_TWO_PI = 2.0 * math.pi

# Accepted units per physical dimension, with conversion factors to the
# canonical SI unit (the first entry of each _SI_UNIT value).  Hertz-family
# entries convert ordinary frequency to angular frequency.
_UNIT_TABLES: dict[str, dict[str, float]] = {
    "mass": {"kg": 1.0, "g": 1e-3, "u": ATOMIC_MASS},
    "charge": {"C": 1.0, "e": ELEMENTARY_CHARGE},
    "length": {
        "m": 1.0,
        "cm": 1e-2,
        "mm": 1e-3,
        "um": 1e-6,
        "nm": 1e-9,
        "pm": 1e-12,
    },
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9},
    "angular_frequency": {
        "rad/s": 1.0,
        "Hz": _TWO_PI,
        "kHz": _TWO_PI * 1e3,
        "MHz": _TWO_PI * 1e6,
        "GHz": _TWO_PI * 1e9,
        "THz": _TWO_PI * 1e12,
    },
    "pressure": {"Pa": 1.0, "mbar": 1e2},
    "temperature": {"K": 1.0, "mK": 1e-3},
    "inductance": {"H": 1.0, "mH": 1e-3, "uH": 1e-6, "nH": 1e-9},
    "current": {"A": 1.0, "mA": 1e-3, "uA": 1e-6, "nA": 1e-9, "pA": 1e-12},
    "wavenumber": {"1/m": 1.0, "rad/m": 1.0, "1/cm": 1e2},
    "rate": {"1/s": 1.0, "1/ms": 1e3},
    "angle": {"rad": 1.0, "deg": math.pi / 180.0},
}

_SI_UNIT: dict[str, str] = {
    "mass": "kg",
    "charge": "C",
    "length": "m",
    "time": "s",
    "angular_frequency": "rad/s",
    "pressure": "Pa",
    "temperature": "K",
    "inductance": "H",
    "current": "A",
    "wavenumber": "1/m",
    "rate": "1/s",
    "angle": "rad",
}

SAMPLERS = ("exponential", "uniform", "bernoulli")
KICK_MODES = ("phase_only", "full_displacement")


# ---------------------------------------------------------------------------
# Lexical helpers
# ---------------------------------------------------------------------------


def strip_json_comments(text: str) -> str:
    """Blank out ``//`` line and ``/* */`` block comments outside strings.

    Comment characters are replaced by spaces (newlines are kept) so that
    the line/column positions reported by the JSON parser still refer to
    the original document.
    """
    out = list(text)
    i, n = 0, len(text)
    in_string = False
    while i < n:
        c = text[i]
        if in_string:
            if c == "\\":
                i += 2
                continue
            if c == '"':
                in_string = False
            i += 1
            continue
        if c == '"':
            in_string = True
            i += 1
            continue
        if c == "/" and i + 1 < n and text[i + 1] == "/":
            while i < n and text[i] != "\n":
                out[i] = " "
                i += 1
            continue
        if c == "/" and i + 1 < n and text[i + 1] == "*":
            out[i] = " "
            out[i + 1] = " "
            i += 2
            closed = False
            while i < n:
                if text[i] == "*" and i + 1 < n and text[i + 1] == "/":
                    out[i] = " "
                    out[i + 1] = " "
                    i += 2
                    closed = True
                    break
                if text[i] != "\n":
                    out[i] = " "
                i += 1
            if not closed:
                raise ConfigError("unterminated /* block comment */ in config")
            continue
        i += 1
    return "".join(out)


def parse_quantity(value: Any, dimension: str, key: str) -> float:
    """Parse a ``"<number> <unit>"`` string into its SI magnitude."""
    table = _UNIT_TABLES[dimension]
    if isinstance(value, bool) or not isinstance(value, str):
        raise ConfigError(
            f'{key}: physical quantities must be unit-suffixed strings like '
            f'"1 {_SI_UNIT[dimension]}", got {value!r}'
        )
    parts = value.split()
    if len(parts) != 2:
        raise ConfigError(
            f'{key}: malformed quantity {value!r}; expected "<number> <unit>"'
        )
    num, unit = parts
    try:
        magnitude = float(num)
    except ValueError:
        raise ConfigError(f"{key}: {num!r} is not a number") from None
    if unit not in table:
        raise ConfigError(
            f"{key}: unknown {dimension} unit {unit!r} "
            f"(accepted: {', '.join(sorted(table))})"
        )
    if not math.isfinite(magnitude):
        raise ConfigError(f"{key}: magnitude must be finite, got {num!r}")
    return magnitude * table[unit]


def _si(value: float, dimension: str) -> str:
    """Canonical serialisation of an SI magnitude: shortest round-trip float."""
    return f"{value!r} {_SI_UNIT[dimension]}"


class _Block:
    """One mapping in the config tree; tracks key consumption."""

    def __init__(self, data: Any, path: str):
        if not isinstance(data, dict):
            raise ConfigError(f"{path or 'config'}: expected a JSON object")
        self.data: dict[str, Any] = data
        self.path = path
        self.seen: set[str] = set()

    def _key(self, name: str) -> str:
        return f"{self.path}.{name}" if self.path else name

    def take(self, name: str, *, required: bool = True, default: Any = None) -> Any:
        self.seen.add(name)
        if name not in self.data or self.data[name] is None:
            if required and name not in self.data:
                raise ConfigError(f"{self._key(name)}: missing required key")
            if name not in self.data:
                return default
            if required:
                raise ConfigError(f"{self._key(name)}: must not be null")
            return default
        return self.data[name]

    def quantity(
        self,
        name: str,
        dimension: str,
        *,
        required: bool = True,
        default: float | None = None,
        minimum: float | None = None,
        exclusive: bool = True,
    ) -> float | None:
        raw = self.take(name, required=required, default=None)
        if raw is None:
            return default
        value = parse_quantity(raw, dimension, self._key(name))
        if minimum is not None:
            bad = value <= minimum if exclusive else value < minimum
            if bad:
                op = ">" if exclusive else ">="
                raise ConfigError(
                    f"{self._key(name)}: must be {op} {minimum:g} "
                    f"{_SI_UNIT[dimension]}, got {value:g}"
                )
        return value

    def integer(
        self,
        name: str,
        *,
        required: bool = True,
        default: int | None = None,
        minimum: int | None = None,
        maximum: int | None = None,
    ) -> int | None:
        raw = self.take(name, required=required, default=None)
        if raw is None:
            return default
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise ConfigError(f"{self._key(name)}: expected an integer, got {raw!r}")
        if minimum is not None and raw < minimum:
            raise ConfigError(f"{self._key(name)}: must be >= {minimum}, got {raw}")
        if maximum is not None and raw > maximum:
            raise ConfigError(f"{self._key(name)}: must be <= {maximum}, got {raw}")
        return raw

    def number(
        self,
        name: str,
        *,
        required: bool = True,
        default: float | None = None,
        minimum: float | None = None,
        exclusive: bool = False,
    ) -> float | None:
        raw = self.take(name, required=required, default=None)
        if raw is None:
            return default
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ConfigError(f"{self._key(name)}: expected a number, got {raw!r}")
        value = float(raw)
        if not math.isfinite(value):
            raise ConfigError(f"{self._key(name)}: must be finite")
        if minimum is not None:
            bad = value <= minimum if exclusive else value < minimum
            if bad:
                op = ">" if exclusive else ">="
                raise ConfigError(
                    f"{self._key(name)}: must be {op} {minimum:g}, got {value:g}"
                )
        return value

    def choice(
        self,
        name: str,
        options: tuple[str, ...],
        *,
        required: bool = True,
        default: str | None = None,
    ) -> str | None:
        raw = self.take(name, required=required, default=None)
        if raw is None:
            return default
        if not isinstance(raw, str) or raw not in options:
            raise ConfigError(
                f"{self._key(name)}: expected one of {', '.join(options)}, got {raw!r}"
            )
        return raw

    def string(
        self, name: str, *, required: bool = True, default: str | None = None
    ) -> str | None:
        raw = self.take(name, required=required, default=None)
        if raw is None:
            return default
        if not isinstance(raw, str):
            raise ConfigError(f"{self._key(name)}: expected a string, got {raw!r}")
        return raw

    def int_list(self, name: str, *, minimum: int = 0) -> tuple[int, ...]:
        raw = self.take(name)
        if not isinstance(raw, list) or not raw:
            raise ConfigError(f"{self._key(name)}: expected a non-empty array")
        values: list[int] = []
        for pos, item in enumerate(raw):
            if isinstance(item, bool) or not isinstance(item, int):
                raise ConfigError(
                    f"{self._key(name)}[{pos}]: expected an integer, got {item!r}"
                )
            if item < minimum:
                raise ConfigError(
                    f"{self._key(name)}[{pos}]: must be >= {minimum}, got {item}"
                )
            values.append(item)
        return tuple(values)

    def block(self, name: str, *, required: bool = True) -> "_Block | None":
        raw = self.take(name, required=required, default=None)
        if raw is None:
            return None
        return _Block(raw, self._key(name))

    def finish(self) -> None:
        unknown = sorted(set(self.data) - self.seen)
        if unknown:
            keys = ", ".join(repr(k) for k in unknown)
            raise ConfigError(f"{self.path or 'config'}: unknown key(s) {keys}")


# ---------------------------------------------------------------------------
# Configuration blocks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CrystalConfig:
    """Trap and particle parameters (strict SI)."""

    ion_mass: float  # kg
    ion_charge: float  # C
    flake_mass: float  # kg
    flake_charge: float  # C
    flake_radius: float  # m
    trap_frequency: float  # rad/s, bare ion secular frequency
    raman_wavenumber: float  # 1/m, effective beam-pair wavenumber
    endcap_distance: float  # m

    @staticmethod
    def _parse(b: _Block) -> "CrystalConfig":
        cfg = CrystalConfig(
            ion_mass=b.quantity("ion_mass", "mass", minimum=0.0),
            ion_charge=b.quantity("ion_charge", "charge", minimum=0.0),
            flake_mass=b.quantity("flake_mass", "mass", minimum=0.0),
            flake_charge=b.quantity("flake_charge", "charge", minimum=0.0),
            flake_radius=b.quantity("flake_radius", "length", minimum=0.0),
            trap_frequency=b.quantity("trap_frequency", "angular_frequency", minimum=0.0),
            raman_wavenumber=b.quantity(
                "raman_wavenumber", "wavenumber", minimum=0.0, exclusive=False
            ),
            endcap_distance=b.quantity("endcap_distance", "length", minimum=0.0),
        )
        b.finish()
        return cfg

    def _canonical(self) -> dict[str, Any]:
        return {
            "ion_mass": _si(self.ion_mass, "mass"),
            "ion_charge": _si(self.ion_charge, "charge"),
            "flake_mass": _si(self.flake_mass, "mass"),
            "flake_charge": _si(self.flake_charge, "charge"),
            "flake_radius": _si(self.flake_radius, "length"),
            "trap_frequency": _si(self.trap_frequency, "angular_frequency"),
            "raman_wavenumber": _si(self.raman_wavenumber, "wavenumber"),
            "endcap_distance": _si(self.endcap_distance, "length"),
        }

    def ion(self) -> ParticleSpec:
        return ParticleSpec(mass=self.ion_mass, charge=self.ion_charge, label="ion")

    def flake(self) -> ParticleSpec:
        return ParticleSpec(
            mass=self.flake_mass, charge=self.flake_charge, label="flake"
        )

    def trap(self) -> TrapSpec:
        return TrapSpec(
            omega1=self.trap_frequency,
            raman_wavenumber=self.raman_wavenumber,
            endcap_distance=self.endcap_distance,
        )

    def geometry(self) -> FlakeGeometry:
        # the configured mass is authoritative; express it as an areal density
        area = math.pi * self.flake_radius**2
        return FlakeGeometry(
            radius=self.flake_radius, areal_density=self.flake_mass / area
        )

    def modes(self) -> ModeStructure:
        return mode_structure(self.ion(), self.flake(), self.trap())


@dataclass(frozen=True)
class DriveConfig:
    """Spin-dependent-force and Raman-laser parameters (rad/s)."""

    rabi_frequency: float  # two-photon Rabi frequency
    sdf_phase: float  # drive phase seen by spin-up
    sdf_detuning: float | None  # beat note; None = resonant with the mode
    laser_coupling: float  # single-beam coupling g
    laser_detuning: float  # detuning from the auxiliary level
    spin_splitting: float  # qubit splitting

    @staticmethod
    def _parse(b: _Block) -> "DriveConfig":
        cfg = DriveConfig(
            rabi_frequency=b.quantity("rabi_frequency", "angular_frequency", minimum=0.0),
            sdf_phase=b.quantity("sdf_phase", "angle", required=False, default=0.0),
            sdf_detuning=b.quantity(
                "sdf_detuning", "angular_frequency", required=False, minimum=0.0
            ),
            laser_coupling=b.quantity("laser_coupling", "angular_frequency", minimum=0.0),
            laser_detuning=b.quantity("laser_detuning", "angular_frequency", minimum=0.0),
            spin_splitting=b.quantity("spin_splitting", "angular_frequency", minimum=0.0),
        )
        b.finish()
        return cfg

    def _canonical(self) -> dict[str, Any]:
        return {
            "rabi_frequency": _si(self.rabi_frequency, "angular_frequency"),
            "sdf_phase": _si(self.sdf_phase, "angle"),
            "sdf_detuning": (
                None
                if self.sdf_detuning is None
                else _si(self.sdf_detuning, "angular_frequency")
            ),
            "laser_coupling": _si(self.laser_coupling, "angular_frequency"),
            "laser_detuning": _si(self.laser_detuning, "angular_frequency"),
            "spin_splitting": _si(self.spin_splitting, "angular_frequency"),
        }

    def laser(self) -> LaserSpec:
        return LaserSpec(
            g=self.laser_coupling,
            delta=self.laser_detuning,
            omega_s=self.spin_splitting,
        )


@dataclass(frozen=True)
class ProtocolConfig:
    """Split/hold/recombine timing and amplification target."""

    split_periods: int  # splitting time, whole in-phase mode periods
    hold_periods: tuple[int, ...]  # intermediary free-flight sweep, periods
    gain_target: float  # parametric amplification gain G (>= 1)
    samples_per_period: int  # output sampling density

    @staticmethod
    def _parse(b: _Block) -> "ProtocolConfig":
        cfg = ProtocolConfig(
            split_periods=b.integer("split_periods", minimum=1),
            hold_periods=b.int_list("hold_periods", minimum=0),
            gain_target=b.number("gain_target", minimum=1.0),
            samples_per_period=b.integer(
                "samples_per_period", required=False, default=64, minimum=4
            ),
        )
        b.finish()
        return cfg

    def _canonical(self) -> dict[str, Any]:
        return {
            "split_periods": self.split_periods,
            "hold_periods": list(self.hold_periods),
            "gain_target": self.gain_target,
            "samples_per_period": self.samples_per_period,
        }


@dataclass(frozen=True)
class CollapseConfig:
    """Unitary-jump collapse-model parameters."""

    tau_e: float  # s, electron coherence time
    sigma: float  # m, localisation length

    @staticmethod
    def _parse(b: _Block) -> "CollapseConfig":
        cfg = CollapseConfig(
            tau_e=b.quantity("tau_e", "time", minimum=0.0),
            sigma=b.quantity("sigma", "length", minimum=0.0),
        )
        b.finish()
        return cfg

    def _canonical(self) -> dict[str, Any]:
        return {"tau_e": _si(self.tau_e, "time"), "sigma": _si(self.sigma, "length")}


@dataclass(frozen=True)
class EnsembleConfig:
    """Monte Carlo ensemble size, seeding and estimator options."""

    size: int
    master_seed: int
    sampler: str  # jump-time sampler: exponential | uniform | bernoulli
    kick_mode: str  # phase_only | full_displacement
    bootstrap: int  # bootstrap resamples for the visibility error
    max_recorded_jumps: int  # per-trajectory cap on logged jump times

    @staticmethod
    def _parse(b: _Block) -> "EnsembleConfig":
        cfg = EnsembleConfig(
            size=b.integer("size", minimum=1),
            master_seed=b.integer("master_seed", minimum=0, maximum=(1 << 64) - 1),
            sampler=b.choice("sampler", SAMPLERS, required=False, default="exponential"),
            kick_mode=b.choice(
                "kick_mode", KICK_MODES, required=False, default="phase_only"
            ),
            bootstrap=b.integer("bootstrap", required=False, default=200, minimum=0),
            max_recorded_jumps=b.integer(
                "max_recorded_jumps", required=False, default=0, minimum=0
            ),
        )
        b.finish()
        return cfg

    def _canonical(self) -> dict[str, Any]:
        return {
            "size": self.size,
            "master_seed": self.master_seed,
            "sampler": self.sampler,
            "kick_mode": self.kick_mode,
            "bootstrap": self.bootstrap,
            "max_recorded_jumps": self.max_recorded_jumps,
        }


@dataclass(frozen=True)
class EnvironmentConfig:
    """Residual gas and readout-circuit conditions for the budget."""

    pressure: float  # Pa
    gas_temperature: float  # K
    gas_molecule_mass: float  # kg
    circuit_inductance: float  # H
    circuit_frequency: float  # rad/s
    circuit_temperature: float  # K
    induced_current: float | None  # A; None = compute as Q v / D

    @staticmethod
    def _parse(b: _Block) -> "EnvironmentConfig":
        cfg = EnvironmentConfig(
            pressure=b.quantity("pressure", "pressure", minimum=0.0, exclusive=False),
            gas_temperature=b.quantity("gas_temperature", "temperature", minimum=0.0),
            gas_molecule_mass=b.quantity(
                "gas_molecule_mass",
                "mass",
                required=False,
                default=28.97 * ATOMIC_MASS,
                minimum=0.0,
            ),
            circuit_inductance=b.quantity(
                "circuit_inductance", "inductance", minimum=0.0
            ),
            circuit_frequency=b.quantity(
                "circuit_frequency", "angular_frequency", minimum=0.0
            ),
            circuit_temperature=b.quantity(
                "circuit_temperature", "temperature", minimum=0.0
            ),
            induced_current=b.quantity(
                "induced_current", "current", required=False, minimum=0.0, exclusive=False
            ),
        )
        b.finish()
        return cfg

    def _canonical(self) -> dict[str, Any]:
        return {
            "pressure": _si(self.pressure, "pressure"),
            "gas_temperature": _si(self.gas_temperature, "temperature"),
            "gas_molecule_mass": _si(self.gas_molecule_mass, "mass"),
            "circuit_inductance": _si(self.circuit_inductance, "inductance"),
            "circuit_frequency": _si(self.circuit_frequency, "angular_frequency"),
            "circuit_temperature": _si(self.circuit_temperature, "temperature"),
            "induced_current": (
                None
                if self.induced_current is None
                else _si(self.induced_current, "current")
            ),
        }


@dataclass(frozen=True)
class ExclusionConfig:
    """Collapse-parameter grid and dephasing bound for the exclusion sweep."""

    gamma_bound: float | None  # 1/s, resolvable dephasing rate; None = no bound
    sigma_min: float  # m
    sigma_max: float  # m
    sigma_points: int
    tau_e_min: float  # s
    tau_e_max: float  # s
    tau_e_points: int

    @staticmethod
    def _parse(b: _Block) -> "ExclusionConfig":
        cfg = ExclusionConfig(
            gamma_bound=b.quantity("gamma_bound", "rate", minimum=0.0, required=False),
            sigma_min=b.quantity("sigma_min", "length", minimum=0.0),
            sigma_max=b.quantity("sigma_max", "length", minimum=0.0),
            sigma_points=b.integer("sigma_points", minimum=2),
            tau_e_min=b.quantity("tau_e_min", "time", minimum=0.0),
            tau_e_max=b.quantity("tau_e_max", "time", minimum=0.0),
            tau_e_points=b.integer("tau_e_points", minimum=2),
        )
        b.finish()
        if cfg.sigma_min >= cfg.sigma_max:
            raise ConfigError("exclusion.sigma_min must be < exclusion.sigma_max")
        if cfg.tau_e_min >= cfg.tau_e_max:
            raise ConfigError("exclusion.tau_e_min must be < exclusion.tau_e_max")
        return cfg

    def _canonical(self) -> dict[str, Any]:
        return {
            "gamma_bound": (
                None if self.gamma_bound is None else _si(self.gamma_bound, "rate")
            ),
            "sigma_min": _si(self.sigma_min, "length"),
            "sigma_max": _si(self.sigma_max, "length"),
            "sigma_points": self.sigma_points,
            "tau_e_min": _si(self.tau_e_min, "time"),
            "tau_e_max": _si(self.tau_e_max, "time"),
            "tau_e_points": self.tau_e_points,
        }


@dataclass(frozen=True)
class RunConfig:
    """Complete, validated run description."""

    crystal: CrystalConfig
    drive: DriveConfig
    protocol: ProtocolConfig
    collapse: CollapseConfig | None  # None = collapse noise off
    ensemble: EnsembleConfig
    environment: EnvironmentConfig
    exclusion: ExclusionConfig
    output_dir: str

    def to_canonical_dict(self) -> dict[str, Any]:
        return {
            "crystal": self.crystal._canonical(),
            "drive": self.drive._canonical(),
            "protocol": self.protocol._canonical(),
            "collapse": "off" if self.collapse is None else self.collapse._canonical(),
            "ensemble": self.ensemble._canonical(),
            "environment": self.environment._canonical(),
            "exclusion": self.exclusion._canonical(),
            "output_dir": self.output_dir,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_canonical_dict(), indent=2, sort_keys=True) + "\n"

    def config_hash(self) -> str:
        compact = json.dumps(
            self.to_canonical_dict(), sort_keys=True, separators=(",", ":")
        )
        return hashlib.sha256(compact.encode("utf-8")).hexdigest()

    def with_seed(self, master_seed: int) -> "RunConfig":
        if not 0 <= master_seed < (1 << 64):
            raise ConfigError(f"master seed must fit in 64 bits, got {master_seed}")
        return replace(self, ensemble=replace(self.ensemble, master_seed=master_seed))

    def with_output_dir(self, output_dir: str) -> "RunConfig":
        return replace(self, output_dir=output_dir)


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    """Parse and validate one commented-JSON run description."""
    stripped = strip_json_comments(text)
    try:
        data = json.loads(stripped)
    except json.JSONDecodeError as err:
        raise ConfigError(
            f"{source}: invalid JSON at line {err.lineno}, column {err.colno}: "
            f"{err.msg}"
        ) from None

    root = _Block(data, "")
    crystal = CrystalConfig._parse(root.block("crystal"))
    drive = DriveConfig._parse(root.block("drive"))
    protocol = ProtocolConfig._parse(root.block("protocol"))

    collapse_raw = root.take("collapse")
    collapse: CollapseConfig | None
    if isinstance(collapse_raw, str):
        if collapse_raw != "off":
            raise ConfigError(
                f'collapse: expected an object or the string "off", got {collapse_raw!r}'
            )
        collapse = None
    else:
        collapse = CollapseConfig._parse(_Block(collapse_raw, "collapse"))

    ensemble = EnsembleConfig._parse(root.block("ensemble"))
    environment = EnvironmentConfig._parse(root.block("environment"))
    exclusion = ExclusionConfig._parse(root.block("exclusion"))
    output_dir = root.string("output_dir", required=False, default="results")
    root.finish()

    return RunConfig(
        crystal=crystal,
        drive=drive,
        protocol=protocol,
        collapse=collapse,
        ensemble=ensemble,
        environment=environment,
        exclusion=exclusion,
        output_dir=output_dir,
    )


def load_config(path: str | Path) -> RunConfig:
    """Read, parse and validate a run configuration file."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config file {p}: {err}") from None
    return parse_config_text(text, source=str(p))
