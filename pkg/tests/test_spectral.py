"""Tests for the stability functional and its classification."""

from __future__ import annotations

import math

import numpy as np
import pytest

from expanderlab.exceptions import DomainError
from expanderlab.spectral import (
    ConeEigendata,
    I0_closed_form,
    I0_quadrature,
    L0_bracket_roots,
    L0_identity_residual,
    L_C_separated_residual,
    LimitEta,
    SampledEta,
    SpectralParams,
    StabilityClass,
    eta_limit_profile,
    gamma_identity_check,
    instability_scan,
    l0_order_check,
    observed_order,
    simons_flip,
    spectral_row,
    stability_classify,
    stability_margin,
    write_spectral_csv,
)


class TestSpectralParams:
    """Tests for parameter validation."""

    def test_exponent(self) -> None:
        """Verify c = ε + 1 − n/2."""
        assert SpectralParams(n=5, lambda1=-1.0, eps=0.1).exponent == pytest.approx(-1.4)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n": 2, "lambda1": -1.0, "eps": 0.1},
            {"n": 3, "lambda1": math.nan, "eps": 0.1},
            {"n": 3, "lambda1": -1.0, "eps": 0.0},
            {"n": 3, "lambda1": -1.0, "eps": 0.1, "delta": 1.5},
            {"n": 3, "lambda1": -1.0, "eps": 0.1, "R": 0.5},
        ],
    )
    def test_invalid(self, kwargs: dict) -> None:
        with pytest.raises(ValueError):
            SpectralParams(**kwargs)


class TestClosedForm:
    """Tests for the Gamma-function closed form."""

    def test_rejects_nonpositive_eps(self) -> None:
        with pytest.raises(DomainError):
            I0_closed_form(3, -1.0, 0.0)

    def test_strictly_unstable_is_negative(self) -> None:
        """Verify I₀ < 0 at small ε when λ₁ is well below −(n−2)²/4."""
        assert I0_closed_form(3, -1.25, 1e-3) < 0
        assert I0_closed_form(6, -10.0, 1e-3) < 0

    def test_boundary_pair_stays_positive(self) -> None:
        """Verify the pole of Γ(ε) cancels on λ₁ = −(n−2)²/4."""
        assert I0_closed_form(3, -0.25, 0.01) > 0

    def test_stable_is_positive(self) -> None:
        assert I0_closed_form(7, 0.0, 0.05) > 0

    @pytest.mark.parametrize(
        ("n", "lambda1", "eps"), [(3, -0.25, 0.05), (5, -2.25, 0.1), (7, -6.0, 0.2)]
    )
    def test_gamma_identity(self, n: int, lambda1: float, eps: float, tolerances) -> None:
        """Verify quadrature of the limit profile plus head matches the closed form."""
        report = gamma_identity_check(
            SpectralParams(n=n, lambda1=lambda1, eps=eps), tol=tolerances.gamma_identity
        )
        assert report.passed, report.failures
        assert report.details["relative_error"] <= tolerances.gamma_identity

    def test_gamma_identity_reports_family_gap(self, tolerances) -> None:
        """Verify the ramp family's relative deviation is recorded and within its allowance."""
        params = SpectralParams(n=3, lambda1=-0.25, eps=0.05)
        report = gamma_identity_check(params, tol=tolerances.gamma_identity)
        details = report.details
        closed = details["closed_form"]
        expected = abs(details["family_quadrature"] - closed) / abs(closed)
        assert details["family_relative_gap"] == pytest.approx(expected, rel=1e-12)
        assert details["family_relative_gap"] <= details["family_allowance"]
        assert details["family_allowance"] > tolerances.gamma_identity

    def test_sampled_test_function(self) -> None:
        """Verify a spline through samples of the limit profile gives the same I₀."""
        params = SpectralParams(n=5, lambda1=-2.25, eps=0.1)
        t = np.geomspace(0.5, 6.0, 201)
        sampled = SampledEta(t, eta_limit_profile(t, params))
        exact = I0_quadrature(params, LimitEta(params, 0.5, 6.0), tol=1e-9).value
        approx = I0_quadrature(params, sampled, tol=1e-7).value
        assert approx == pytest.approx(exact, rel=1e-4)

    def test_sampled_test_function_needs_sorted_samples(self) -> None:
        with pytest.raises(DomainError):
            SampledEta(np.array([1.0, 0.5, 2.0, 3.0]), np.ones(4))


class TestClassification:
    """Tests for stability classification."""

    def test_product_eigendata(self) -> None:
        data = ConeEigendata.for_product_spheres(2, 3)
        assert data.n == 6
        assert data.lambda1 == -5.0
        assert data.A_sq == 5.0

    def test_simons_cones(self) -> None:
        """Verify C_{k,k} is unstable for k < 3 and stable for k ≥ 3."""
        assert stability_classify(ConeEigendata.simons(1)) is StabilityClass.UNSTABLE
        assert stability_classify(ConeEigendata.simons(2)) is StabilityClass.UNSTABLE
        assert stability_classify(ConeEigendata.simons(3)) is StabilityClass.STABLE
        assert simons_flip().passed

    def test_boundary_is_unstable(self) -> None:
        data = ConeEigendata(n=4, lambda1=-1.0)
        assert stability_margin(data) == 0.0
        assert stability_classify(data) is StabilityClass.UNSTABLE

    def test_rejects_bad_sphere_dimensions(self) -> None:
        with pytest.raises(DomainError):
            ConeEigendata.for_product_spheres(0, 2)

    def test_instability_scan(self) -> None:
        """Verify strictly unstable samples are negative and boundary samples skipped."""
        samples = [(n, -((n - 2) ** 2) / 4.0 - depth) for n in (3, 5, 7) for depth in (0.05, 1.0)]
        samples.append((4, -1.0))
        report = instability_scan(samples)
        assert report.passed, report.failures
        assert len(report.details["samples"]) == 7


class TestOperatorIdentities:
    """Tests for the drift-Laplacian identities."""

    def test_bracket_roots(self) -> None:
        assert L0_bracket_roots(5) == (3.0, 6.0)

    def test_power_identity_residual_small(self) -> None:
        assert L0_identity_residual(4, 2.0, 1.5) < 1e-3

    def test_separated_identity_residual_small(self) -> None:
        assert L_C_separated_residual(5, -2.0, 1.0, 2.0) < 1e-3

    def test_observed_order_of_quadratic(self) -> None:
        assert observed_order(lambda h: 3.0 * h**2, 1e-2) == pytest.approx(2.0)

    def test_observed_order_of_exact_residual(self) -> None:
        assert math.isinf(observed_order(lambda h: 0.0, 1e-2))

    def test_second_order_convergence(self, tolerances) -> None:
        samples = [(3, 0.5, 0.0, 1.0), (4, 3.0, 1.0, 3.0), (6, 2.5, 2.0, 1.2)]
        report = l0_order_check(samples, min_order=tolerances.l0_order)
        assert report.passed, report.failures


class TestSpectralExport:
    """Tests for spectral rows and CSV export."""

    def test_row_and_csv(self, tmp_path) -> None:
        row = spectral_row(SpectralParams(n=3, lambda1=-0.25, eps=0.05))
        assert row.classification == "unstable"
        assert row.quadrature == pytest.approx(row.closed_form, rel=1e-3)
        path = write_spectral_csv([row], tmp_path / "spectral.csv")
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "n,lambda1,eps,closed_form,quadrature,classification"
        assert lines[1].startswith("3,-0.25,0.050000000000000003,")
