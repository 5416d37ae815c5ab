"""Package exception hierarchy and the CLI exit-code contract.

Exit codes
----------
0   success
2   configuration error (schema violation, bad units, missing file)
3   physics-validity error (e.g. the squeezing parameter reaches the
    |tau| -> 1 boundary, or a calibration fails to converge)
4   numerical-oracle failure (truncated-basis cross-checks disagree)
"""

from __future__ import annotations

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_PHYSICS_ERROR = 3
EXIT_ORACLE_ERROR = 4


class CotrapError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(CotrapError):
    """Invalid run configuration: unknown keys, bad units, wrong types."""

    exit_code = EXIT_CONFIG_ERROR


class PhysicsValidityError(CotrapError):
    """The requested evolution left the model's domain of validity.

    The canonical example is the squeezing magnitude |tau| approaching 1,
    where the squeezed-state parametrisation diverges.  The failure time,
    when known, is attached as the ``time`` attribute.
    """

    exit_code = EXIT_PHYSICS_ERROR

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time


class OracleError(CotrapError):
    """A truncated-basis numerical cross-check failed."""

    exit_code = EXIT_ORACLE_ERROR
