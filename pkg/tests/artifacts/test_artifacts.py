"""
Tests for CSV/JSON writers and the run manifest.
"""

import json
import math

import numpy as np
import pytest

from src.artifacts import RunManifest, code_version, read_csv, write_csv, write_json
from src.constants import MANIFEST_NAME


class TestWriters:
    def test_csv_round_trip(self, tmp_path):
        path = write_csv(tmp_path / "table.csv", ["x", "value"], [[0.0, 0.1], [1.0, float("nan")]])
        frame = read_csv(path)
        assert list(frame.columns) == ["x", "value"]
        assert frame["value"][0] == 0.1
        assert math.isnan(frame["value"][1])

    def test_csv_uses_full_precision(self, tmp_path):
        path = write_csv(tmp_path / "pi.csv", ["pi"], [[math.pi]])
        assert repr(math.pi) in path.read_text()

    def test_csv_creates_parent_directories(self, tmp_path):
        path = write_csv(tmp_path / "a" / "b" / "t.csv", ["k"], [[1]])
        assert path.is_file()

    def test_csv_row_length_mismatch(self, tmp_path):
        with pytest.raises(ValueError, match="bad.csv"):
            write_csv(tmp_path / "bad.csv", ["a", "b"], [[1.0]])

    def test_json_sorted_keys_and_nan(self, tmp_path):
        path = write_json(
            tmp_path / "metrics.json",
            {"b": float("nan"), "a": np.float64(1.5), "c": np.arange(2), "d": float("inf")},
        )
        text = path.read_text()
        assert text.index('"a"') < text.index('"b"') < text.index('"c"')
        record = json.loads(text)
        assert record == {"a": 1.5, "b": None, "c": [0, 1], "d": "inf"}

    def test_json_numpy_nan_scalar(self, tmp_path):
        record = json.loads(write_json(tmp_path / "m.json", {"v": np.float64("nan")}).read_text())
        assert record["v"] is None


class TestRunManifest:
    def test_add_records_relative_names(self, tmp_path):
        manifest = RunManifest(config={})
        write_csv(tmp_path / "sub" / "t.csv", ["a"], [[1]])
        assert manifest.add(tmp_path, tmp_path / "sub" / "t.csv") == "sub/t.csv"
        manifest.add(tmp_path, tmp_path / "sub" / "t.csv")
        assert manifest.files == ["sub/t.csv"]

    def test_finalize_writes_sorted_file_list(self, tmp_path):
        manifest = RunManifest(config={"seed": 1}, version="1.0")
        for name in ("z.csv", "a.csv"):
            manifest.add(tmp_path, write_csv(tmp_path / name, ["k"], [[0]]))
        path = manifest.finalize(tmp_path)
        assert path.name == MANIFEST_NAME
        record = json.loads(path.read_text())
        assert record["files"] == ["a.csv", "z.csv"]
        assert record["status"] == "ok"
        assert record["error"] is None
        assert record["config"] == {"seed": 1}

    def test_finalize_rejects_missing_files(self, tmp_path):
        manifest = RunManifest(config={}, files=["gone.csv"])
        with pytest.raises(FileNotFoundError, match="gone.csv"):
            manifest.finalize(tmp_path)
        assert not (tmp_path / MANIFEST_NAME).exists()

    def test_code_version_is_a_string(self):
        assert isinstance(code_version(), str)
        assert code_version()
