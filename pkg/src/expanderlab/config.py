"""Configuration for expanderlab experiments.

Holds the tolerance presets, the per-command parameter defaults and the
ExperimentConfig frozen dataclass consumed by the CLI.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from enum import Enum
import json
import os
from pathlib import Path
from typing import Any

from .exceptions import ConfigError

# Environment variable capping the verify-all worker pool
THREADS_ENV_VAR = "EXPANDERLAB_THREADS"

# Newton iteration defaults shared by every nonlinear solve
NEWTON_MAX_ITER = 60
NEWTON_MAX_HALVINGS = 30
NEWTON_TOL = 1e-10

# Tridiagonal multiply-back residual, relative to (||rhs||_inf + 1)
TRIDIAGONAL_RESIDUAL = 1e-12

# Values or gradients beyond this abort a flow
BLOW_UP_THRESHOLD = 1e8

# CSV numbers are written with this many significant digits
CSV_SIGNIFICANT_DIGITS = 17

SUPPORTED_FORMATS = frozenset({"csv", "json", "svg"})


class CommandName(str, Enum):
    """Experiments the CLI can run."""

    SOLVE_ROTATIONAL = "solve-rotational"
    SOLVE_1D = "solve-1d"
    DIRICHLET = "dirichlet"
    LATITUDE = "latitude"
    FLOW = "flow"
    REPARAM = "reparam"
    TRANSLATOR = "translator"
    SPECTRAL = "spectral"
    DENSITY_TABLE = "density-table"
    VERIFY_ALL = "verify-all"


# Every parameter a command accepts, with its default. Keys double as CLI flags.
DEFAULT_PARAMETERS: dict[CommandName, dict[str, Any]] = {
    CommandName.SOLVE_ROTATIONAL: {"n": 3, "kappa": 1.0, "R": 20.0, "nodes": 4001},
    CommandName.SOLVE_1D: {"kappa": 1.0, "R": 10.0, "nodes": 2001},
    CommandName.DIRICHLET: {
        "kappa": 1.0,
        "R": 20.0,
        "radial_nodes": 201,
        "angular_nodes": 32,
        "data": "cone",
    },
    CommandName.LATITUDE: {
        "n": 3,
        "epsilon": 0.5,
        "theta1": 0.5,
        "theta2": 2.0,
        "nodes": 801,
    },
    CommandName.FLOW: {"n": 2, "kappa": 1.0, "R": 40.0, "nodes": 801, "T": 25.0},
    CommandName.REPARAM: {"n": 2, "s": 0.5, "T": 0.5, "R": 12.0, "nodes": 241, "dt": 0.01},
    CommandName.TRANSLATOR: {
        "n": 3,
        "epsilon": 1.0,
        "lambda": 10.0,
        "rho0": 1.0,
        "nodes": 1001,
        "lambdas": [10.0, 100.0, 1000.0],
    },
    CommandName.SPECTRAL: {
        "n": 3,
        "lambda1": -0.25,
        "eps": 0.05,
        "delta": 1e-3,
        "R": 30.0,
    },
    CommandName.DENSITY_TABLE: {"k_max": 10},
    CommandName.VERIFY_ALL: {},
}


@dataclass(frozen=True)
class Tolerances:
    """Pass/fail thresholds for every certified property.

    Attributes:
        residual: Radial ODE discrete residual.
        barrier_slack: Absolute slack on barrier sandwiches.
        monotone_slack: Allowed decrease between consecutive profile nodes.
        disk_residual: Disk Dirichlet solver residual.
        latitude_residual: Latitude band solver residual.
        translator_residual: Translator radial residual (λ-normalized form).
        hs_identity: Pointwise s-mean-curvature identity on translators.
        rotational_crosscheck: Disk solver against the radial solver.
        linear_exactness: Disk solver on affine boundary data.
        uniqueness_slack: Relative slack on the far-field estimate.
        ordering_slack: Comparison-principle slack.
        e_minimality: Relative slack on weighted-area comparisons.
        refinement_ratio: Error reduction required under halving (static checks).
        flow_refinement_ratio: Error reduction required under (dt, h) halving.
        convergence_error: Bound on the final normalized-convergence error.
        asymptotic_relative: Relative tolerance for the asymptotic constant.
        monotonicity_mismatch: Mismatch allowed in the monotonicity identity.
        gamma_identity: Relative tolerance for stability-functional checks.
        density: Absolute tolerance for density identities.
        l0_order: Minimum observed convergence order for operator identities.
    """

    residual: float = 1e-8
    barrier_slack: float = 1e-9
    monotone_slack: float = 1e-10
    disk_residual: float = 1e-7
    latitude_residual: float = 1e-7
    translator_residual: float = 1e-8
    hs_identity: float = 1e-7
    rotational_crosscheck: float = 1e-5
    linear_exactness: float = 1e-10
    uniqueness_slack: float = 0.10
    ordering_slack: float = 1e-9
    e_minimality: float = 1e-9
    refinement_ratio: float = 3.0
    flow_refinement_ratio: float = 2.5
    convergence_error: float = 1e-2
    asymptotic_relative: float = 0.05
    monotonicity_mismatch: float = 1e-4
    gamma_identity: float = 1e-3
    density: float = 1e-8
    l0_order: float = 1.9

    def __post_init__(self) -> None:
        """Validate that every tolerance is positive."""
        for name, value in asdict(self).items():
            if not value > 0:
                msg = f"tolerance {name} must be positive, got {value}"
                raise ValueError(msg)

    @classmethod
    def full(cls) -> Tolerances:
        """Create the full-resolution preset used by every command by default.

        Returns:
            Tolerances with the default thresholds.
        """
        return cls()

    @classmethod
    def quick(cls) -> Tolerances:
        """Create the relaxed preset used by ``verify-all --quick``.

        Reduced resolutions leave the truncation-limited checks with larger
        errors; residual-type checks keep their full thresholds.

        Returns:
            Tolerances for quick verification runs.
        """
        return cls(
            asymptotic_relative=0.08,
            monotonicity_mismatch=1e-3,
            convergence_error=3e-2,
            refinement_ratio=2.5,
            flow_refinement_ratio=2.2,
        )

    def to_dict(self) -> dict[str, float]:
        """Convert to dictionary for the manifest.

        Returns:
            Tolerance names mapped to values.
        """
        return asdict(self)


def resolve_thread_count(environ: dict[str, str] | None = None) -> int:
    """Read the worker cap from ``EXPANDERLAB_THREADS``.

    Args:
        environ: Environment mapping (defaults to ``os.environ``).

    Returns:
        Positive worker count; 1 when the variable is unset.

    Raises:
        ConfigError: If the variable is set but not a positive integer.
    """
    env = os.environ if environ is None else environ
    raw = env.get(THREADS_ENV_VAR, "").strip()
    if not raw:
        return 1
    try:
        count = int(raw)
    except ValueError:
        msg = f"{THREADS_ENV_VAR} must be a positive integer, got {raw!r}"
        raise ConfigError(msg) from None
    if count < 1:
        msg = f"{THREADS_ENV_VAR} must be a positive integer, got {raw!r}"
        raise ConfigError(msg)
    return count


def _coerce_parameter(name: str, value: Any, default: Any) -> Any:
    """Convert a parameter to the type of its default.

    Raises:
        ConfigError: If the value cannot be converted.
    """
    try:
        if isinstance(default, list):
            items = value if isinstance(value, (list, tuple)) else [value]
            return [float(item) for item in items]
        if isinstance(value, bool):
            raise TypeError(name)
        if isinstance(default, int):
            if float(value) != int(float(value)):
                raise ValueError(name)
            return int(float(value))
        if isinstance(default, float):
            return float(value)
        return str(value)
    except (TypeError, ValueError, OverflowError):
        msg = f"parameter {name} expects {type(default).__name__}, got {value!r}"
        raise ConfigError(msg) from None


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully resolved experiment request.

    Attributes:
        command: Experiment to run.
        parameters: Command parameters; unspecified keys take their defaults.
        output_dir: Directory receiving every artifact.
        formats: Artifact formats to emit.
        quick: Reduced resolution with relaxed tolerances.
    """

    command: CommandName
    parameters: dict[str, Any] = field(default_factory=dict)
    output_dir: Path = Path("output")
    formats: frozenset[str] = frozenset({"csv", "json"})
    quick: bool = False

    def __post_init__(self) -> None:
        """Validate the command, parameter names and formats.

        Raises:
            ConfigError: On unknown commands, parameters or formats.
        """
        try:
            command = CommandName(self.command)
        except ValueError:
            msg = f"unknown command {self.command!r}"
            raise ConfigError(msg) from None
        object.__setattr__(self, "command", command)

        defaults = DEFAULT_PARAMETERS[command]
        unknown = sorted(set(self.parameters) - set(defaults))
        if unknown:
            msg = f"unknown parameters for {command.value}: {', '.join(unknown)}"
            raise ConfigError(msg)
        merged = {
            key: _coerce_parameter(key, value, defaults[key])
            for key, value in {**defaults, **self.parameters}.items()
        }
        object.__setattr__(self, "parameters", merged)

        bad_formats = sorted(set(self.formats) - SUPPORTED_FORMATS)
        if bad_formats:
            msg = f"unsupported formats: {', '.join(bad_formats)}"
            raise ConfigError(msg)
        object.__setattr__(self, "formats", frozenset(self.formats))
        object.__setattr__(self, "output_dir", Path(self.output_dir))

    @property
    def tolerances(self) -> Tolerances:
        """Tolerance preset matching the quick flag."""
        return Tolerances.quick() if self.quick else Tolerances.full()

    @classmethod
    def from_json(cls, path: Path) -> ExperimentConfig:
        """Load a configuration file mirroring this dataclass.

        Args:
            path: JSON file with keys command, parameters, output_dir, formats, quick.

        Returns:
            The parsed configuration.

        Raises:
            ConfigError: If the file is unreadable or malformed.
        """
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            msg = f"cannot read config file {path}: {e}"
            raise ConfigError(msg) from None
        if not isinstance(raw, dict) or "command" not in raw:
            msg = f"config file {path} must be a JSON object with a 'command' key"
            raise ConfigError(msg)
        extra = sorted(set(raw) - {"command", "parameters", "output_dir", "formats", "quick"})
        if extra:
            msg = f"unknown config keys: {', '.join(extra)}"
            raise ConfigError(msg)
        return cls(
            command=raw["command"],
            parameters=dict(raw.get("parameters", {})),
            output_dir=Path(raw.get("output_dir", "output")),
            formats=frozenset(raw.get("formats", ["csv", "json"])),
            quick=bool(raw.get("quick", False)),
        )

    def with_overrides(self, **parameters: Any) -> ExperimentConfig:
        """Return a copy with some parameters replaced.

        Args:
            **parameters: Parameter values taking precedence.

        Returns:
            New configuration.
        """
        return replace(self, parameters={**self.parameters, **parameters})

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for the manifest config echo.

        Returns:
            JSON-compatible dictionary.
        """
        return {
            "command": self.command.value,
            "parameters": dict(sorted(self.parameters.items())),
            "output_dir": str(self.output_dir),
            "formats": sorted(self.formats),
            "quick": self.quick,
        }
