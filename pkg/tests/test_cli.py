"""Tests for the command-line interface."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from expanderlab.cli import build_parser, config_from_args, execute, main, run
from expanderlab.config import THREADS_ENV_VAR, CommandName, ExperimentConfig
from expanderlab.exceptions import ConfigError


def _run_main(argv: list[str]) -> int:
    with pytest.raises(SystemExit) as excinfo:
        main(argv)
    return excinfo.value.code


class TestParser:
    """Tests for argument parsing."""

    def test_parameter_flags(self) -> None:
        args = build_parser().parse_args(["density-table", "--k-max", "12", "--quick"])
        config = config_from_args(args)
        assert config.command is CommandName.DENSITY_TABLE
        assert config.parameters["k_max"] == 12
        assert config.quick

    def test_formats_flag(self, tmp_path: Path) -> None:
        args = build_parser().parse_args(
            ["spectral", "--formats", "csv,svg", "-o", str(tmp_path)]
        )
        config = config_from_args(args)
        assert config.formats == frozenset({"csv", "svg"})
        assert config.output_dir == tmp_path

    def test_list_parameter(self) -> None:
        args = build_parser().parse_args(["translator", "--lambdas", "5", "50", "500"])
        assert config_from_args(args).parameters["lambdas"] == [5.0, 50.0, 500.0]

    def test_rejects_unknown_format(self) -> None:
        with pytest.raises(SystemExit):
            build_parser().parse_args(["spectral", "--formats", "png"])

    def test_flags_override_config_file(self, tmp_path: Path) -> None:
        path = tmp_path / "config.json"
        path.write_text(
            json.dumps({"command": "spectral", "parameters": {"n": 5, "lambda1": -2.25}}),
            encoding="utf-8",
        )
        args = build_parser().parse_args(["spectral", "--config", str(path), "--n", "7"])
        config = config_from_args(args)
        assert config.parameters["n"] == 7
        assert config.parameters["lambda1"] == -2.25

    def test_config_file_for_other_command(self, tmp_path: Path) -> None:
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"command": "spectral"}), encoding="utf-8")
        args = build_parser().parse_args(["density-table", "--config", str(path)])
        with pytest.raises(ConfigError, match="spectral"):
            config_from_args(args)


class TestExecute:
    """Tests for running commands."""

    def test_density_table_writes_artifacts(self, output_dir: Path) -> None:
        config = ExperimentConfig(
            command="density-table",
            output_dir=output_dir,
            formats=frozenset({"csv", "json", "svg"}),
        )
        code, manifest = execute(config)
        assert code == 0
        assert manifest is not None and manifest.passed
        lines = (output_dir / "density_table.csv").read_text(encoding="utf-8").splitlines()
        assert len(lines) == 11
        assert {f.path for f in manifest.files} == {
            "density_table.csv",
            "density_table.svg",
            "density_table.json",
        }
        written = json.loads((output_dir / "manifest.json").read_text(encoding="utf-8"))
        assert written["passed"] is True
        assert written["config"]["parameters"] == {"k_max": 10}

    def test_csv_is_reproducible(self, tmp_path: Path) -> None:
        """Verify two runs write byte-identical CSV files."""
        first = ExperimentConfig(command="density-table", output_dir=tmp_path / "a")
        second = ExperimentConfig(command="density-table", output_dir=tmp_path / "b")
        assert run(first) == 0
        assert run(second) == 0
        name = "density_table.csv"
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_domain_error_is_numerical_failure(self, output_dir: Path) -> None:
        """Verify a DomainError from a solver exits 1 and is recorded in the manifest."""
        config = ExperimentConfig(
            command="density-table", parameters={"k_max": 2}, output_dir=output_dir
        )
        code, manifest = execute(config)
        assert code == 1
        assert manifest is not None and not manifest.passed
        assert "DomainError" in manifest.certificates[-1].failures[0]
        assert (output_dir / "manifest.json").exists()

    def test_argument_validation_is_usage_error(self, output_dir: Path) -> None:
        config = ExperimentConfig(
            command="solve-rotational", parameters={"nodes": 2}, output_dir=output_dir
        )
        code, manifest = execute(config)
        assert code == 2
        assert manifest is None

    def test_spectral(self, output_dir: Path) -> None:
        config = ExperimentConfig(command="spectral", output_dir=output_dir)
        assert run(config) == 0
        lines = (output_dir / "spectral.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "n,lambda1,eps,closed_form,quadrature,classification"
        assert lines[1].endswith(",unstable")


class TestMain:
    """Tests for the main entry point and exit statuses."""

    def test_density_table(self, output_dir: Path) -> None:
        code = _run_main(["density-table", "--k-max", "6", "-o", str(output_dir)])
        assert code == 0
        assert (output_dir / "manifest.json").exists()
        lines = (output_dir / "density_table.csv").read_text(encoding="utf-8").splitlines()
        assert len(lines) == 7

    def test_json_output(self, output_dir: Path, capsys: pytest.CaptureFixture[str]) -> None:
        code = _run_main(["density-table", "--json", "-o", str(output_dir), "--formats", "csv"])
        assert code == 0
        manifest = json.loads(capsys.readouterr().out)
        assert manifest["command"] == "density-table"
        assert manifest["passed"] is True

    def test_unknown_command(self) -> None:
        assert _run_main(["solve-everything"]) == 2

    def test_missing_command(self) -> None:
        assert _run_main([]) == 2

    def test_bad_parameter_value(self, output_dir: Path) -> None:
        assert _run_main(["density-table", "--k-max", "two", "-o", str(output_dir)]) == 2

    def test_bad_thread_count(self, output_dir: Path, monkeypatch: pytest.MonkeyPatch) -> None:
        """Verify an invalid worker cap is rejected before any suite runs."""
        monkeypatch.setenv(THREADS_ENV_VAR, "lots")
        assert _run_main(["verify-all", "--quick", "-o", str(output_dir)]) == 2

    def test_missing_config_file(self, tmp_path: Path) -> None:
        missing = tmp_path / "missing.json"
        assert _run_main(["spectral", "--config", str(missing)]) == 2
