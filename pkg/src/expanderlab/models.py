"""Pydantic models for serialized experiment output.

Covers the run manifest and the table rows emitted as CSV and JSON.
"""

from __future__ import annotations

from typing import Any

from pydantic import BaseModel, Field, computed_field


class ArtifactFile(BaseModel):
    """A file written by an experiment."""

    path: str = Field(description="Path relative to the output directory")
    format: str = Field(description="File format (csv, json or svg)")
    description: str = Field(default="", description="What the file contains")


class CertificateRecord(BaseModel):
    """Pass/fail entry for one certified property."""

    name: str = Field(description="Certificate identifier")
    passed: bool = Field(description="Whether every check held")
    failures: list[str] = Field(default_factory=list, description="Failing checks")
    details: dict[str, Any] = Field(default_factory=dict, description="Measured quantities")


class Manifest(BaseModel):
    """Record of one CLI run: files, configuration echo and certificates."""

    version: str = Field(description="expanderlab version that produced the run")
    command: str = Field(description="Executed command")
    config: dict[str, Any] = Field(description="Resolved configuration echo")
    tolerances: dict[str, float] = Field(description="Tolerances in force for the run")
    files: list[ArtifactFile] = Field(default_factory=list, description="Files produced")
    certificates: list[CertificateRecord] = Field(
        default_factory=list, description="Certified properties"
    )

    @computed_field
    @property
    def passed(self) -> bool:
        """True when every certificate passed."""
        return all(c.passed for c in self.certificates)


class DensityRow(BaseModel):
    """One row of the √2 comparison table."""

    k: int = Field(description="Sphere dimension k")
    theta_simons: float = Field(description="Density of the Simons cone C_{k,k}")
    d_k: float = Field(description="Entropy of the round shrinking S^k")
    d_k_minus_sqrt2: float = Field(description="d_k − √2")
    theta_minus_sqrt2: float = Field(description="Θ(C_{k,k}) − √2")


class SpectralRow(BaseModel):
    """One row of the stability-functional table."""

    n: int = Field(description="Cone dimension")
    lambda1: float = Field(description="First eigenvalue λ₁ of the cross-section operator")
    eps: float = Field(description="Exponent ε of the test family")
    closed_form: float = Field(description="Gamma-function closed form of I₀")
    quadrature: float = Field(description="I₀ of the limit profile by quadrature")
    classification: str = Field(description="stable or unstable")
