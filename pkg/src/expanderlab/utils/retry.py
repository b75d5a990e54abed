"""Continuation retries for nonlinear solves.

A direct Newton solve from the barrier guess occasionally stalls for steep
data (large κ, small ε, large λ). The solvers then retry through parameter
continuation: the data is ramped from a trivial problem to the target in
``steps`` stages, and the stage count doubles on every attempt.

Only ``ConvergenceError`` triggers a retry; pivot and domain errors are
deterministic and propagate immediately.
"""

from __future__ import annotations

from collections.abc import Callable
import logging
from typing import TypeVar

from tenacity import (
    RetryCallState,
    Retrying,
    before_sleep_log,
    retry_if_exception_type,
    stop_after_attempt,
    wait_none,
)

from ..exceptions import ConvergenceError

T = TypeVar("T")

# tenacity's before_sleep_log requires a stdlib logger, NOT structlog.
_tenacity_logger = logging.getLogger("expanderlab.retry")

CONTINUATION_ATTEMPTS = 3


def continuation_retrying(attempts: int = CONTINUATION_ATTEMPTS) -> Retrying:
    """Build the tenacity controller shared by every continuation solve.

    Args:
        attempts: Total attempts including the first.

    Returns:
        A ``Retrying`` that retries on ``ConvergenceError`` without waiting
        and re-raises the last error.
    """
    return Retrying(
        retry=retry_if_exception_type(ConvergenceError),
        stop=stop_after_attempt(attempts),
        wait=wait_none(),
        before_sleep=before_sleep_log(_tenacity_logger, logging.WARNING),
        reraise=True,
    )


def _steps_for(state: RetryCallState, initial_steps: int) -> int:
    return initial_steps * 2 ** (state.attempt_number - 1)


def solve_with_continuation(
    solve: Callable[[int], T],
    *,
    attempts: int = CONTINUATION_ATTEMPTS,
    initial_steps: int = 1,
) -> T:
    """Run ``solve(steps)`` with a doubling continuation stage count.

    ``solve(1)`` is expected to be the direct solve; larger counts ramp the
    data in that many stages.

    Args:
        solve: Callable taking the number of continuation stages.
        attempts: Maximum number of attempts.
        initial_steps: Stage count of the first attempt.

    Returns:
        The first successful result.

    Raises:
        ConvergenceError: If every attempt fails.
    """
    for attempt in continuation_retrying(attempts):
        with attempt:
            return solve(_steps_for(attempt.retry_state, initial_steps))
    msg = "continuation retry loop exited without a result"
    raise RuntimeError(msg)  # pragma: no cover
