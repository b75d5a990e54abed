"""Utility modules for expanderlab."""

from .retry import continuation_retrying, solve_with_continuation

__all__ = ["continuation_retrying", "solve_with_continuation"]
