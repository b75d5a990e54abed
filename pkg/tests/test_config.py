"""Tests for tolerances, thread resolution and experiment configuration."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from expanderlab.config import (
    DEFAULT_PARAMETERS,
    THREADS_ENV_VAR,
    CommandName,
    ExperimentConfig,
    Tolerances,
    resolve_thread_count,
)
from expanderlab.exceptions import ConfigError


class TestTolerances:
    """Tests for the Tolerances dataclass."""

    def test_defaults(self) -> None:
        tolerances = Tolerances()
        assert tolerances.residual == 1e-8
        assert tolerances.density == 1e-8
        assert tolerances.refinement_ratio == 3.0

    def test_full_preset_is_default(self) -> None:
        assert Tolerances.full() == Tolerances()
        assert ExperimentConfig(command="spectral").tolerances == Tolerances.full()

    def test_quick_relaxes_truncation_checks_only(self) -> None:
        """Verify the quick preset keeps residual thresholds unchanged."""
        quick = Tolerances.quick()
        assert quick.asymptotic_relative == 0.08
        assert quick.flow_refinement_ratio == 2.2
        assert quick.residual == Tolerances().residual

    def test_rejects_nonpositive(self) -> None:
        with pytest.raises(ValueError, match="residual"):
            Tolerances(residual=0.0)

    def test_to_dict(self) -> None:
        data = Tolerances().to_dict()
        assert data["l0_order"] == 1.9
        assert len(data) == 20


class TestResolveThreadCount:
    """Tests for the worker cap environment variable."""

    def test_unset_means_one(self) -> None:
        assert resolve_thread_count({}) == 1

    def test_blank_means_one(self) -> None:
        assert resolve_thread_count({THREADS_ENV_VAR: "  "}) == 1

    def test_reads_value(self) -> None:
        assert resolve_thread_count({THREADS_ENV_VAR: "4"}) == 4

    @pytest.mark.parametrize("raw", ["zero", "0", "-2", "1.5"])
    def test_rejects_invalid(self, raw: str) -> None:
        with pytest.raises(ConfigError, match=THREADS_ENV_VAR):
            resolve_thread_count({THREADS_ENV_VAR: raw})

    def test_reads_process_environment(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv(THREADS_ENV_VAR, "3")
        assert resolve_thread_count() == 3


class TestExperimentConfig:
    """Tests for ExperimentConfig validation and coercion."""

    def test_defaults_filled_in(self) -> None:
        config = ExperimentConfig(command="spectral")
        assert config.command is CommandName.SPECTRAL
        assert config.parameters == DEFAULT_PARAMETERS[CommandName.SPECTRAL]
        assert config.output_dir == Path("output")

    def test_parameters_coerced_to_default_types(self) -> None:
        """Verify CLI strings become ints, floats and float lists."""
        config = ExperimentConfig(
            command="translator", parameters={"n": "4", "epsilon": "0.5", "lambdas": "20"}
        )
        assert config.parameters["n"] == 4
        assert isinstance(config.parameters["n"], int)
        assert config.parameters["epsilon"] == 0.5
        assert config.parameters["lambdas"] == [20.0]

    def test_integral_float_accepted_for_int(self) -> None:
        config = ExperimentConfig(command="density-table", parameters={"k_max": 12.0})
        assert config.parameters["k_max"] == 12

    @pytest.mark.parametrize("value", [2.5, True, "many"])
    def test_rejects_bad_int(self, value: object) -> None:
        with pytest.raises(ConfigError, match="k_max"):
            ExperimentConfig(command="density-table", parameters={"k_max": value})

    def test_rejects_unknown_command(self) -> None:
        with pytest.raises(ConfigError, match="unknown command"):
            ExperimentConfig(command="solve-everything")

    def test_rejects_unknown_parameter(self) -> None:
        with pytest.raises(ConfigError, match="kappa"):
            ExperimentConfig(command="density-table", parameters={"kappa": 1.0})

    def test_rejects_unknown_format(self) -> None:
        with pytest.raises(ConfigError, match="png"):
            ExperimentConfig(command="density-table", formats=frozenset({"csv", "png"}))

    def test_quick_selects_relaxed_tolerances(self) -> None:
        config = ExperimentConfig(command="verify-all", quick=True)
        assert config.tolerances == Tolerances.quick()

    def test_with_overrides(self) -> None:
        config = ExperimentConfig(command="solve-rotational").with_overrides(kappa=2)
        assert config.parameters["kappa"] == 2.0
        assert config.parameters["n"] == 3

    def test_to_dict(self) -> None:
        data = ExperimentConfig(command="density-table", output_dir=Path("out")).to_dict()
        assert data == {
            "command": "density-table",
            "parameters": {"k_max": 10},
            "output_dir": "out",
            "formats": ["csv", "json"],
            "quick": False,
        }


class TestFromJson:
    """Tests for configuration files."""

    def test_round_trip(self, tmp_path: Path) -> None:
        path = tmp_path / "config.json"
        path.write_text(
            json.dumps({"command": "spectral", "parameters": {"n": 5}, "quick": True}),
            encoding="utf-8",
        )
        config = ExperimentConfig.from_json(path)
        assert config.command is CommandName.SPECTRAL
        assert config.parameters["n"] == 5
        assert config.quick

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(ConfigError, match="cannot read"):
            ExperimentConfig.from_json(tmp_path / "missing.json")

    def test_malformed_json(self, tmp_path: Path) -> None:
        path = tmp_path / "bad.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError):
            ExperimentConfig.from_json(path)

    def test_requires_command(self, tmp_path: Path) -> None:
        path = tmp_path / "config.json"
        path.write_text("[]", encoding="utf-8")
        with pytest.raises(ConfigError, match="command"):
            ExperimentConfig.from_json(path)

    def test_rejects_extra_keys(self, tmp_path: Path) -> None:
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"command": "spectral", "seed": 1}), encoding="utf-8")
        with pytest.raises(ConfigError, match="seed"):
            ExperimentConfig.from_json(path)
