import json
from unittest.mock import patch

import pytest

from src.cli import build_parser, main
from src.constants import MANIFEST_NAME
from src.controllers.validation.validation_controller import (
    CheckResult,
    ValidationController,
    ValidationReport,
)


def _tiny_document(tmp_path):
    path = tmp_path / "tiny.json"
    path.write_text(
        json.dumps(
            {
                "svgd": {"iterations": 2, "step_size": 0.05},
                "svgd_gauss": {"particles": 3, "methods": ["svgd"]},
            }
        )
    )
    return path


class TestParser:
    def test_commands(self):
        parser = build_parser()
        for command in ("toy1d", "svgd-gauss", "svgd-bnn", "gan2d", "validate"):
            assert parser.parse_args([command]).command == command

    def test_dataset_only_for_bnn(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["toy1d", "--dataset", "x.csv"])


class TestValidate:
    def test_passing_oracles_exit_zero(self, capsys):
        with patch.object(ValidationController, "_invariant_checks", lambda self, report: None):
            assert main(["validate"]) == 0
        assert "checks passed" in capsys.readouterr().out

    def test_failing_check_exits_one(self, capsys):
        report = ValidationReport([CheckResult("line", "symmetry", 1.0, 1e-15, False)])
        with patch.object(ValidationController, "run_validate", return_value=report):
            assert main(["validate"]) == 1
        assert "0/1 checks passed" in capsys.readouterr().out


class TestRunCommands:
    def test_missing_config_file(self, tmp_path, capsys):
        code = main(["toy1d", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)])
        assert code == 2
        assert "nope.json" in capsys.readouterr().err

    def test_missing_dataset(self, tmp_path, capsys):
        missing = tmp_path / "boston.csv"
        code = main(["svgd-bnn", "--dataset", str(missing), "--out", str(tmp_path / "run")])
        assert code == 2
        assert str(missing) in capsys.readouterr().err

    def test_invalid_seed(self, tmp_path):
        assert main(["toy1d", "--seed", "-1", "--out", str(tmp_path)]) == 2

    def test_invalid_jobs(self, tmp_path):
        assert main(["toy1d", "--jobs", "0", "--out", str(tmp_path)]) == 2

    def test_sweep_writes_one_directory_per_seed(self, tmp_path, capsys):
        out = tmp_path / "gauss"
        code = main(
            ["svgd-gauss", "--config", str(_tiny_document(tmp_path)), "--sweep", "2", "--out", str(out)]
        )
        assert code == 0
        for seed in (0, 1):
            manifest = json.loads((out / f"seed-{seed}" / MANIFEST_NAME).read_text())
            assert manifest["config"]["seed"] == seed
            assert manifest["status"] == "ok"
        stdout = capsys.readouterr().out
        assert "seed 0: ok" in stdout and "seed 1: ok" in stdout

    def test_single_seed_uses_out_directly(self, tmp_path):
        out = tmp_path / "single"
        code = main(
            ["svgd-gauss", "--config", str(_tiny_document(tmp_path)), "--seed", "7", "--out", str(out)]
        )
        assert code == 0
        assert json.loads((out / MANIFEST_NAME).read_text())["config"]["seed"] == 7
