"""Deterministic result files: RFC-4180 CSV, JSON reports, run manifests.

Every command writes its outputs through one :class:`OutputWriter`, which
records the name, size and SHA-256 of each file and finishes by writing a
schema-versioned ``manifest.json`` next to them.  The manifest carries the
canonical configuration (and its hash), the seed, and a snapshot of derived
quantities, so a run can be reproduced bit-identically from the manifest
alone; the manifest itself is the only file containing a timestamp.

CSV conventions: ``#``-prefixed comment lines first (free-form metadata
plus one ``# columns:`` line giving the SI unit of every column), then the
RFC-4180 header row and data rows, CRLF line endings, minimal quoting.
Floats are rendered with ``repr`` (shortest round-trip), so files are
byte-stable across runs and platforms.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from ._version import __version__

__all__ = [
    "Column",
    "OutputWriter",
    "MANIFEST_SCHEMA_VERSION",
    "format_value",
    "jsonable",
    "sha256_file",
]

MANIFEST_SCHEMA_VERSION = 1
_TOOL_NAME = "cotrap"


@dataclass(frozen=True)
class Column:
    """One CSV column: name, SI unit ("1" for dimensionless), values."""

    name: str
    unit: str
    values: Sequence[Any]


def format_value(value: Any) -> str:
    """Render one CSV cell deterministically (shortest round-trip floats)."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, str):
        return value
    raise TypeError(f"unsupported CSV cell type {type(value).__name__}")


def jsonable(obj: Any) -> Any:
    """Recursively convert numpy scalars/arrays and complex values for JSON."""
    if isinstance(obj, Mapping):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    if isinstance(obj, (complex, np.complexfloating)):
        c = complex(obj)
        return {"re": jsonable(c.real), "im": jsonable(c.imag)}
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialise {type(obj).__name__} to JSON")


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class OutputWriter:
    """Collects one command's output files and writes the manifest."""

    directory: Path
    _files: list[dict[str, Any]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.directory = Path(self.directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _register(self, name: str) -> None:
        path = self.directory / name
        self._files.append(
            {
                "name": name,
                "sha256": sha256_file(path),
                "bytes": path.stat().st_size,
            }
        )

    def write_csv(
        self,
        name: str,
        columns: Sequence[Column],
        *,
        comments: Sequence[str] = (),
    ) -> Path:
        """Write one RFC-4180 CSV with a ``#`` metadata preamble."""
        if not columns:
            raise ValueError("need at least one column")
        length = len(columns[0].values)
        for col in columns:
            if len(col.values) != length:
                raise ValueError(
                    f"column {col.name!r} has {len(col.values)} values, "
                    f"expected {length}"
                )
        path = self.directory / name
        units_line = ", ".join(f"{c.name} [{c.unit}]" for c in columns)
        with open(path, "w", encoding="utf-8", newline="") as handle:
            for comment in comments:
                handle.write(f"# {comment}\r\n")
            handle.write(f"# columns: {units_line}\r\n")
            writer = csv.writer(handle, lineterminator="\r\n")
            writer.writerow([c.name for c in columns])
            for i in range(length):
                writer.writerow([format_value(c.values[i]) for c in columns])
        self._register(name)
        return path

    def write_json(self, name: str, payload: Any) -> Path:
        path = self.directory / name
        text = json.dumps(jsonable(payload), indent=2, sort_keys=True) + "\n"
        path.write_text(text, encoding="utf-8")
        self._register(name)
        return path

    def write_jsonl(self, name: str, records: Iterable[Mapping[str, Any]]) -> Path:
        """Write one JSON document per line (streaming-friendly log)."""
        path = self.directory / name
        with open(path, "w", encoding="utf-8") as handle:
            for record in records:
                handle.write(
                    json.dumps(jsonable(record), sort_keys=True, separators=(",", ":"))
                )
                handle.write("\n")
        self._register(name)
        return path

    def write_text(self, name: str, text: str) -> Path:
        path = self.directory / name
        path.write_text(text, encoding="utf-8")
        self._register(name)
        return path

    def write_manifest(
        self,
        *,
        command: str,
        config_hash: str,
        config: Mapping[str, Any],
        master_seed: int | None,
        workers: int | None,
        derived: Mapping[str, Any],
    ) -> Path:
        """Write ``manifest.json`` describing this run and its outputs."""
        manifest = {
            "schema_version": MANIFEST_SCHEMA_VERSION,
            "tool": _TOOL_NAME,
            "version": __version__,
            "command": command,
            "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "master_seed": master_seed,
            "workers": workers,
            "config_hash": config_hash,
            "config": jsonable(config),
            "derived": jsonable(derived),
            "outputs": sorted(self._files, key=lambda f: f["name"]),
        }
        path = self.directory / "manifest.json"
        path.write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        return path
