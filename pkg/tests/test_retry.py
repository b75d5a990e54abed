"""Tests for continuation retries.

Verifies that:
- ConvergenceError triggers a retry with a doubled stage count
- Domain and pivot errors propagate on the first attempt
- The last ConvergenceError is re-raised once attempts run out
"""

from __future__ import annotations

import pytest

from expanderlab.exceptions import ConvergenceError, DomainError, PivotError
from expanderlab.utils.retry import continuation_retrying, solve_with_continuation


def _stall() -> ConvergenceError:
    return ConvergenceError("stalled", iterations=5, residual_norm=1.0)


class TestSolveWithContinuation:
    """Tests for solve_with_continuation."""

    def test_first_attempt_is_direct(self) -> None:
        calls: list[int] = []

        def solve(steps: int) -> str:
            calls.append(steps)
            return "ok"

        assert solve_with_continuation(solve) == "ok"
        assert calls == [1]

    def test_stage_count_doubles(self) -> None:
        """Verify failed attempts retry with 2 then 4 times the stages."""
        calls: list[int] = []

        def solve(steps: int) -> int:
            calls.append(steps)
            if steps < 8:
                raise _stall()
            return steps

        assert solve_with_continuation(solve, attempts=4, initial_steps=2) == 8
        assert calls == [2, 4, 8]

    def test_reraises_last_convergence_error(self) -> None:
        calls: list[int] = []

        def solve(steps: int) -> None:
            calls.append(steps)
            raise _stall()

        with pytest.raises(ConvergenceError, match="stalled"):
            solve_with_continuation(solve, attempts=3)
        assert calls == [1, 2, 4]

    @pytest.mark.parametrize(
        "error", [DomainError("kappa", -1.0, "must be positive"), PivotError("zero row")]
    )
    def test_deterministic_errors_not_retried(self, error: Exception) -> None:
        calls: list[int] = []

        def solve(steps: int) -> None:
            calls.append(steps)
            raise error

        with pytest.raises(type(error)):
            solve_with_continuation(solve)
        assert calls == [1]


class TestContinuationRetrying:
    """Tests for the tenacity controller."""

    def test_stops_after_attempts(self) -> None:
        retrying = continuation_retrying(2)
        attempts = 0

        def fail() -> None:
            nonlocal attempts
            attempts += 1
            raise _stall()

        with pytest.raises(ConvergenceError):
            retrying(fail)
        assert attempts == 2
