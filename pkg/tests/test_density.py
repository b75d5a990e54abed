"""Tests for cone densities and shrinker entropies."""

from __future__ import annotations

import math

import pytest

from expanderlab.density import (
    ConeSpec,
    cone_density,
    entropy_chain_check,
    entropy_dk,
    gaussian_density_identity,
    rotational_cone_density,
    simons_density_check,
    sqrt2_table,
    write_density_csv,
)
from expanderlab.exceptions import DomainError


class TestConeSpec:
    """Tests for cone specifications."""

    def test_product_dimensions(self) -> None:
        spec = ConeSpec.product_spheres(2, 3)
        assert spec.cone_dimension == 6
        assert spec.ambient_dimension == 7
        assert spec.label == "C_{2,3}"

    def test_rejects_negative_slope(self) -> None:
        with pytest.raises(ValueError, match="kappa"):
            ConeSpec.rotational(3, -1.0)

    def test_rejects_inconsistent_product(self) -> None:
        from expanderlab.density import ConeKind

        with pytest.raises(ValueError, match="product cone"):
            ConeSpec(kind=ConeKind.PRODUCT_SPHERES, n=5, p=1, q=1)


class TestDensities:
    """Tests for cone densities."""

    @pytest.mark.parametrize("n", [1, 2, 3, 7])
    def test_hyperplane_has_unit_density(self, n: int) -> None:
        assert cone_density(ConeSpec.hyperplane(n)) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize(
        ("k", "expected"),
        [(1, math.pi / 2.0), (2, 1.5), (3, 15.0 * math.pi / 32.0)],
    )
    def test_simons_densities(self, k: int, expected: float, tolerances) -> None:
        theta = cone_density(ConeSpec.product_spheres(k, k))
        assert theta == pytest.approx(expected, abs=tolerances.density)
        assert theta > math.sqrt(2.0)

    def test_simons_density_certificate(self) -> None:
        report = simons_density_check()
        assert report.passed, report.failures

    def test_rotational_density_matches_closed_form(self, tolerances) -> None:
        """Verify quadrature and (1+κ²)^{−(n−1)/2} agree."""
        density = rotational_cone_density(3, 0.5)
        assert density.closed_form == pytest.approx(1.0 / 1.25)
        assert abs(density.quadrature - density.closed_form) <= tolerances.density

    def test_rotational_density_agrees_with_cone_density(self) -> None:
        spec = ConeSpec.rotational(4, 2.0)
        assert cone_density(spec) == pytest.approx(rotational_cone_density(4, 2.0).closed_form)

    def test_rotational_density_needs_n2(self) -> None:
        with pytest.raises(DomainError):
            rotational_cone_density(1, 1.0)

    def test_gaussian_density_identity(self, tolerances) -> None:
        report = gaussian_density_identity(ConeSpec.product_spheres(1, 2), tolerances.density)
        assert report.passed, report.failures

    def test_unequal_product_cone(self, tolerances) -> None:
        """Verify C_{1,5} through the Gaussian quadrature chain."""
        from expanderlab.density import product_cone_spec

        spec = product_cone_spec(1, 5)
        assert spec.cone_dimension == 7
        assert cone_density(spec) > 1.0
        assert gaussian_density_identity(spec, tolerances.density).passed


class TestEntropy:
    """Tests for the shrinking-sphere entropies d_k."""

    def test_circle_entropy(self) -> None:
        """Verify d₁ = √(2π/e) ≈ 1.5203."""
        assert entropy_dk(1) == pytest.approx(math.sqrt(2.0 * math.pi / math.e), rel=1e-12)
        assert entropy_dk(1) == pytest.approx(1.5203, abs=1e-4)

    def test_large_k_approaches_sqrt2(self) -> None:
        assert abs(entropy_dk(200) - math.sqrt(2.0)) < 0.01
        assert entropy_dk(200) > math.sqrt(2.0)

    def test_rejects_k0(self) -> None:
        with pytest.raises(DomainError):
            entropy_dk(0)

    def test_chain_certificate(self) -> None:
        report = entropy_chain_check()
        assert report.passed, report.failures


class TestSqrt2Table:
    """Tests for the √2 comparison table."""

    def test_table_rows_and_certificate(self) -> None:
        rows, report = sqrt2_table(10)
        assert report.passed, report.failures
        assert [row.k for row in rows] == list(range(1, 11))
        assert rows[1].theta_simons == pytest.approx(1.5)

    def test_rejects_short_table(self) -> None:
        with pytest.raises(DomainError):
            sqrt2_table(2)

    def test_csv(self, tmp_path) -> None:
        rows, _ = sqrt2_table(5)
        path = write_density_csv(rows, tmp_path / "density.csv")
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "k,theta_simons,d_k,d_k_minus_sqrt2,theta_minus_sqrt2"
        assert len(lines) == 6
        assert lines[2].startswith("2,1.")
