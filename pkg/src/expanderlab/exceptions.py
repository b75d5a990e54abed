"""Custom exceptions for expanderlab.

Provides a hierarchy of exceptions for the numerical failure modes:
- ExpanderLabError: Base exception for all laboratory errors
- DomainError: Argument outside the domain of an operation
- ConvergenceError: Nonlinear iteration did not reach its tolerance
- PivotError: Banded or sparse linear solve hit a (near-)singular pivot
- QuadratureError: Adaptive quadrature did not converge
- BarrierViolationError: A converged solution left its barrier sandwich
- BlowUpError: A flow exceeded the blow-up threshold
- StencilError: A centered stencil was requested at a boundary node
- FitError: An asymptotic least-squares fit is too noisy to report
- ConfigError: Invalid experiment configuration (usage error)
"""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    import numpy as np


class ExpanderLabError(Exception):
    """Base exception for expanderlab errors."""


class DomainError(ExpanderLabError, ValueError):
    """Argument outside the domain of an operation.

    Attributes:
        argument: Name of the offending argument.
        value: The rejected value.
    """

    def __init__(self, argument: str, value: object, message: str) -> None:
        """Initialize DomainError.

        Args:
            argument: Name of the offending argument.
            value: The rejected value.
            message: Description of the admissible domain.
        """
        self.argument = argument
        self.value = value
        super().__init__(f"{argument}={value!r}: {message}")


class ConvergenceError(ExpanderLabError):
    """Nonlinear iteration failed to converge.

    Attributes:
        iterations: Iterations performed before giving up.
        residual_norm: Infinity norm of the last residual.
        last_iterate: The last iterate, for diagnostics.
    """

    def __init__(
        self,
        message: str,
        *,
        iterations: int,
        residual_norm: float,
        last_iterate: np.ndarray | None = None,
    ) -> None:
        """Initialize ConvergenceError.

        Args:
            message: What failed to converge.
            iterations: Iterations performed.
            residual_norm: Infinity norm of the last residual.
            last_iterate: The last iterate.
        """
        self.iterations = iterations
        self.residual_norm = residual_norm
        self.last_iterate = last_iterate
        super().__init__(f"{message} (iterations={iterations}, residual={residual_norm:.3e})")


class PivotError(ExpanderLabError):
    """Linear solve encountered a zero or near-zero pivot."""

    def __init__(self, message: str) -> None:
        """Initialize PivotError.

        Args:
            message: Description of the failing system.
        """
        super().__init__(f"Singular linear system: {message}")


class QuadratureError(ExpanderLabError):
    """Adaptive quadrature did not converge.

    Attributes:
        best_estimate: The best value available when refinement stopped.
        error_estimate: The accompanying error estimate.
    """

    def __init__(self, message: str, *, best_estimate: float, error_estimate: float) -> None:
        """Initialize QuadratureError.

        Args:
            message: Diagnostic from the integrator.
            best_estimate: Best value available.
            error_estimate: Error estimate for best_estimate.
        """
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate
        super().__init__(
            f"Quadrature failed: {message} "
            f"(best={best_estimate:.12g}, error={error_estimate:.3e})"
        )


class BarrierViolationError(ExpanderLabError):
    """A converged profile left its barrier sandwich.

    Attributes:
        node: Abscissa of the first violating node.
        value: Solution value at that node.
        lower: Lower barrier at that node.
        upper: Upper barrier at that node.
    """

    def __init__(self, node: float, value: float, lower: float, upper: float) -> None:
        """Initialize BarrierViolationError.

        Args:
            node: Abscissa of the first violating node.
            value: Solution value there.
            lower: Lower barrier value.
            upper: Upper barrier value.
        """
        self.node = node
        self.value = value
        self.lower = lower
        self.upper = upper
        super().__init__(
            f"Barrier violated at r={node:.6g}: {lower:.12g} <= {value:.12g} <= {upper:.12g} fails"
        )


class BlowUpError(ExpanderLabError):
    """A flow exceeded the blow-up threshold.

    Attributes:
        time: Time at which the threshold was exceeded.
        magnitude: Largest value or gradient magnitude observed.
    """

    def __init__(self, time: float, magnitude: float) -> None:
        """Initialize BlowUpError.

        Args:
            time: Time of blow-up detection.
            magnitude: Offending magnitude.
        """
        self.time = time
        self.magnitude = magnitude
        super().__init__(f"Flow blew up at t={time:.6g} (magnitude {magnitude:.3e})")


class StencilError(ExpanderLabError):
    """A centered stencil was requested where it does not fit."""

    def __init__(self, position: float) -> None:
        """Initialize StencilError.

        Args:
            position: The requested abscissa.
        """
        self.position = position
        super().__init__(f"No interior centered stencil at r={position:.6g}")


class FitError(ExpanderLabError):
    """Asymptotic fit too noisy for the requested window.

    Attributes:
        value: Fitted value.
        standard_error: Standard error of the fitted value.
    """

    def __init__(self, value: float, standard_error: float) -> None:
        """Initialize FitError.

        Args:
            value: Fitted value.
            standard_error: Its standard error.
        """
        self.value = value
        self.standard_error = standard_error
        super().__init__(
            f"Asymptotic fit unreliable: value={value:.6g}, standard error={standard_error:.3e}"
        )


class ConfigError(ExpanderLabError, ValueError):
    """Experiment configuration is invalid.

    Raised for unknown commands, missing parameters, bad formats and
    unusable environment settings. The CLI maps it to exit status 2.
    """
