"""CSV/JSON writers and the run manifest: format, checksums, inventory."""

from __future__ import annotations

import csv
import hashlib
import json
import math

import numpy as np
import pytest

from cotrap.output import (
    MANIFEST_SCHEMA_VERSION,
    Column,
    OutputWriter,
    format_value,
    jsonable,
    sha256_file,
)


def read_csv(path):
    comments, rows = [], []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                comments.append(line.rstrip("\r\n"))
            else:
                rows.append(line)
    parsed = list(csv.reader(rows))
    return comments, parsed[0], parsed[1:]


def test_format_value_round_trips_floats():
    for x in (0.1, 1 / 3, 6.173252510868222e-10, -math.pi, 1e300):
        assert float(format_value(x)) == x
    assert format_value(True) == "true"
    assert format_value(7) == "7"
    assert format_value("abc") == "abc"
    with pytest.raises(TypeError):
        format_value(object())


def test_jsonable_handles_special_values():
    out = jsonable(
        {
            "nan": float("nan"),
            "inf": float("inf"),
            "ninf": -float("inf"),
            "z": 1 + 2j,
            "arr": np.array([1.5, 2.5]),
            "nested": [{"b": np.float64(3.25)}],
            "flag": np.bool_(True),
        }
    )
    assert out["nan"] == "nan" and out["inf"] == "inf" and out["ninf"] == "-inf"
    assert out["z"] == {"re": 1.0, "im": 2.0}
    assert out["arr"] == [1.5, 2.5]
    assert out["nested"] == [{"b": 3.25}]
    assert out["flag"] is True
    json.dumps(out)  # must be serialisable as-is


def test_csv_format_rfc4180_with_unit_comments(tmp_path):
    w = OutputWriter(tmp_path)
    w.write_csv(
        "data.csv",
        [Column("t", "s", [0.0, 0.5]), Column("v", "1", [1.0, 1 / 3])],
        comments=["demo"],
    )
    raw = (tmp_path / "data.csv").read_bytes()
    assert b"\r\n" in raw and not raw.replace(b"\r\n", b"").count(b"\r")
    comments, header, rows = read_csv(tmp_path / "data.csv")
    assert comments[0] == "# demo"
    assert any("columns: t [s], v [1]" in c for c in comments)
    assert header == ["t", "v"]
    assert [float(x) for x in rows[1]] == [0.5, 1 / 3]


def test_csv_rejects_ragged_columns(tmp_path):
    w = OutputWriter(tmp_path)
    with pytest.raises(ValueError, match="values, expected"):
        w.write_csv("bad.csv", [Column("a", "1", [1]), Column("b", "1", [1, 2])])


def test_manifest_inventory_checksums_and_schema(tmp_path):
    w = OutputWriter(tmp_path)
    w.write_csv("a.csv", [Column("x", "1", [1.0])])
    w.write_json("b.json", {"k": 1})
    w.write_jsonl("c.jsonl", [{"i": 0}, {"i": 1}])
    w.write_manifest(
        command="demo",
        config_hash="deadbeef",
        config={"output_dir": str(tmp_path)},
        master_seed=42,
        workers=2,
        derived={"snapshot": 1.0},
    )
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["schema_version"] == MANIFEST_SCHEMA_VERSION
    assert manifest["command"] == "demo"
    assert manifest["master_seed"] == 42 and manifest["workers"] == 2

    names = [o["name"] for o in manifest["outputs"]]
    assert names == sorted(names)
    # every non-manifest file in the directory is inventoried (no orphans),
    # and every checksum verifies
    on_disk = {p.name for p in tmp_path.iterdir()} - {"manifest.json"}
    assert set(names) == on_disk
    for entry in manifest["outputs"]:
        path = tmp_path / entry["name"]
        assert entry["bytes"] == path.stat().st_size
        assert entry["sha256"] == hashlib.sha256(path.read_bytes()).hexdigest()
        assert entry["sha256"] == sha256_file(path)


def test_jsonl_one_compact_object_per_line(tmp_path):
    w = OutputWriter(tmp_path)
    w.write_jsonl("log.jsonl", [{"a": 1, "b": [1, 2]}, {"a": 2, "b": []}])
    lines = (tmp_path / "log.jsonl").read_text().splitlines()
    assert len(lines) == 2
    assert json.loads(lines[0]) == {"a": 1, "b": [1, 2]}
    assert ": " not in lines[0]  # compact separators
