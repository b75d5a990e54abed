"""Certificate reports.

Verification operations never raise on a failed property; they return a
CertificateReport whose ``passed`` flag, failure list and details feed the
CLI manifest and the markdown summary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Any

import numpy as np


def _jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats for JSON output."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


@dataclass
class CertificateReport:
    """Outcome of one certified property.

    Attributes:
        name: Short identifier (e.g. ``"barrier_sandwich"``).
        passed: Whether every check in the certificate held.
        details: Measured quantities and thresholds.
        failures: Human-readable descriptions of the failing checks.
    """

    name: str
    passed: bool = True
    details: dict[str, Any] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    def check(self, condition: bool, failure: str) -> bool:
        """Record one check, marking the report failed when it does not hold.

        Args:
            condition: Result of the check.
            failure: Description stored when the check fails.

        Returns:
            The condition, for chaining.
        """
        ok = bool(condition)
        if not ok:
            self.passed = False
            self.failures.append(failure)
        return ok

    def merge(self, other: CertificateReport) -> None:
        """Fold a sub-report into this one under its name."""
        self.details[other.name] = other.to_dict()
        if not other.passed:
            self.passed = False
            self.failures.extend(f"{other.name}: {f}" for f in other.failures)

    def to_dict(self) -> dict[str, Any]:
        """Convert to a JSON-compatible dictionary.

        Returns:
            Dictionary with name, passed, details and failures.
        """
        return {
            "name": self.name,
            "passed": self.passed,
            "details": _jsonable(self.details),
            "failures": list(self.failures),
        }

    def to_markdown(self) -> str:
        """Generate a markdown summary.

        Returns:
            Markdown-formatted report string.
        """
        lines = [
            f"## {self.name}",
            "",
            f"**Status:** {'PASSED' if self.passed else 'FAILED'}",
            "",
        ]
        scalars = {k: v for k, v in self.details.items() if not isinstance(v, (dict, list))}
        if scalars:
            lines.append("| Quantity | Value |")
            lines.append("|----------|-------|")
            for key, value in scalars.items():
                shown = f"{value:.6g}" if isinstance(value, (float, np.floating)) else value
                lines.append(f"| {key} | {shown} |")
            lines.append("")
        if self.failures:
            lines.append("### Failures")
            lines.append("")
            lines.extend(f"- {failure}" for failure in self.failures)
            lines.append("")
        return "\n".join(lines)
