"""Shared fixtures: parsed default configs and the calibrated protocol.

The protocol calibration costs a few seconds, so it is done once per
session through the CLI's memoised helper and shared by every test that
needs the default drive program.
"""

from __future__ import annotations

import io
import json
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

import pytest

from cotrap.cli import _calibrated_protocol, main as cli_main
from cotrap.config import RunConfig, load_config

REPO_ROOT = Path(__file__).resolve().parents[1]
DEFAULTS_PATH = REPO_ROOT / "configs" / "paper_defaults.json"
EXACT_RATIO_PATH = REPO_ROOT / "configs" / "exact_frequency_ratio.json"


@pytest.fixture(scope="session")
def default_config() -> RunConfig:
    return load_config(DEFAULTS_PATH)


@pytest.fixture(scope="session")
def exact_ratio_config() -> RunConfig:
    return load_config(EXACT_RATIO_PATH)


@pytest.fixture(scope="session")
def default_modes(default_config):
    return default_config.crystal.modes()


@pytest.fixture(scope="session")
def calibrated(default_config):
    """(modes, sdf, pa, tones, diagnostics, t_split) for the default config."""
    proto = default_config.protocol
    return _calibrated_protocol(
        default_config.crystal,
        default_config.drive,
        proto.split_periods,
        proto.gain_target,
    )


def run_cli(argv: list[str]) -> tuple[int, str, str]:
    """Run the CLI in-process, capturing stdout/stderr."""
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = cli_main(argv)
    return code, out.getvalue(), err.getvalue()


def write_config(path: Path, config_dict: dict) -> Path:
    path.write_text(json.dumps(config_dict, indent=1))
    return path


@pytest.fixture()
def default_config_dict() -> dict:
    """Mutable canonical dict of the default config for building variants."""
    return load_config(DEFAULTS_PATH).to_canonical_dict()
