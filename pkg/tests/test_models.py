"""Tests for the manifest and table row models."""

from __future__ import annotations

import pytest
from pydantic import ValidationError

from expanderlab.models import ArtifactFile, CertificateRecord, DensityRow, Manifest, SpectralRow


def _manifest(*passed: bool) -> Manifest:
    return Manifest(
        version="0.1.0",
        command="density-table",
        config={"command": "density-table"},
        tolerances={"density": 1e-8},
        files=[ArtifactFile(path="density_table.csv", format="csv")],
        certificates=[CertificateRecord(name=f"c{i}", passed=p) for i, p in enumerate(passed)],
    )


class TestManifest:
    """Tests for the run manifest."""

    def test_passed_when_all_certificates_pass(self) -> None:
        assert _manifest(True, True).passed

    def test_failed_when_any_certificate_fails(self) -> None:
        assert not _manifest(True, False).passed

    def test_empty_certificate_list_passes(self) -> None:
        assert _manifest().passed

    def test_passed_is_serialized(self) -> None:
        """Verify the computed flag appears in model_dump output."""
        data = _manifest(False).model_dump()
        assert data["passed"] is False
        assert data["files"][0]["description"] == ""


class TestRows:
    """Tests for table rows."""

    def test_density_row_field_order(self) -> None:
        assert list(DensityRow.model_fields) == [
            "k",
            "theta_simons",
            "d_k",
            "d_k_minus_sqrt2",
            "theta_minus_sqrt2",
        ]

    def test_spectral_row_requires_classification(self) -> None:
        with pytest.raises(ValidationError):
            SpectralRow(n=3, lambda1=-0.25, eps=0.05, closed_form=1.0, quadrature=1.0)
