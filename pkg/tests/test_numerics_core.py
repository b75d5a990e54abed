"""Tests for the shared numerical primitives.

Covers grids, special functions, quadrature, tridiagonal and Newton solves,
finite-difference stencils and the quasilinear two-point solver.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from expanderlab.exceptions import ConvergenceError, DomainError, PivotError, QuadratureError
from expanderlab.numerics_core import (
    Grid1D,
    QuasilinearBVP,
    centered_derivatives,
    gamma,
    integrate,
    newton_damped,
    rounding_tolerance,
    solve_tridiagonal,
    sphere_volume,
    tridiagonal_matvec,
    unit_ball_volume,
)


class TestGrid1D:
    """Tests for Grid1D validation and helpers."""

    def test_uniform_step(self) -> None:
        """Verify a uniform grid reports its common step."""
        grid = Grid1D.uniform(0.0, 1.0, 11)
        assert len(grid) == 11
        assert grid.step == pytest.approx(0.1)

    def test_rejects_too_few_nodes(self) -> None:
        """Verify fewer than three nodes are rejected."""
        with pytest.raises(ValueError, match="at least 3"):
            Grid1D(np.array([0.0, 1.0]))

    def test_rejects_unsorted_nodes(self) -> None:
        """Verify nodes must strictly increase."""
        with pytest.raises(ValueError, match="strictly increasing"):
            Grid1D(np.array([0.0, 2.0, 1.0]))

    def test_nodes_are_read_only(self) -> None:
        grid = Grid1D.uniform(0.0, 1.0, 5)
        with pytest.raises(ValueError):
            grid.nodes[0] = 3.0

    def test_non_uniform_step_raises(self) -> None:
        grid = Grid1D(np.array([0.0, 1.0, 3.0]))
        with pytest.raises(ValueError, match="not uniform"):
            _ = grid.step

    def test_index_of(self) -> None:
        """Verify nodes are located and off-grid values rejected."""
        grid = Grid1D.uniform(0.0, 2.0, 21)
        assert grid.index_of(1.0) == 10
        with pytest.raises(DomainError):
            grid.index_of(1.05)


class TestSpecialFunctions:
    """Tests for gamma and sphere volumes."""

    def test_gamma_half(self) -> None:
        assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)

    def test_gamma_values(self) -> None:
        """Verify Γ(1) = 1 and Γ(4.5) = 3.5·2.5·1.5·0.5·√π."""
        assert gamma(1.0) == pytest.approx(1.0, rel=1e-14)
        assert gamma(4.5) == pytest.approx(3.5 * 2.5 * 1.5 * 0.5 * math.sqrt(math.pi), rel=1e-12)
        assert gamma(4.5) == pytest.approx(11.6317283966, abs=1e-9)

    def test_gamma_recursion(self) -> None:
        """Verify Γ(x+1) = x·Γ(x) at random points of (0.1, 20)."""
        rng = np.random.default_rng(20)
        for x in rng.uniform(0.1, 20.0, 100):
            assert gamma(x + 1.0) == pytest.approx(x * gamma(x), rel=1e-12)

    def test_gamma_rejects_nonpositive(self) -> None:
        """Verify the pole region is a domain error."""
        with pytest.raises(DomainError):
            gamma(0.0)
        with pytest.raises(DomainError):
            gamma(-1.5)

    def test_unit_ball_volume(self) -> None:
        assert unit_ball_volume(2) == pytest.approx(math.pi, rel=1e-14)
        assert unit_ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0, rel=1e-14)

    def test_unit_ball_volume_seven(self) -> None:
        assert unit_ball_volume(7) == pytest.approx(16.0 * math.pi**3 / 105.0, rel=1e-14)
        assert unit_ball_volume(7) == pytest.approx(4.72477, abs=1e-5)

    def test_sphere_volume(self) -> None:
        """Verify |S^1| = 2π, |S^2| = 4π and the radius scaling."""
        assert sphere_volume(1) == pytest.approx(2.0 * math.pi, rel=1e-14)
        assert sphere_volume(2) == pytest.approx(4.0 * math.pi, rel=1e-14)
        assert sphere_volume(2, 2.0) == pytest.approx(16.0 * math.pi, rel=1e-14)

    def test_sphere_volume_of_product_factor(self) -> None:
        """Verify |S³(1/√2)| = 2π²·2^{-3/2}."""
        value = sphere_volume(3, 1.0 / math.sqrt(2.0))
        assert value == pytest.approx(2.0 * math.pi**2 * 2.0**-1.5, rel=1e-14)
        assert value == pytest.approx(6.9791, abs=5e-4)


class TestIntegrate:
    """Tests for adaptive quadrature."""

    def test_gaussian_half_line(self) -> None:
        """Verify ∫₀^∞ e^{-t²/4} dt = √π with the tail truncation."""
        result = integrate(lambda t: math.exp(-t * t / 4.0), 0.0, math.inf, tol=1e-12)
        assert result.value == pytest.approx(math.sqrt(math.pi), abs=1e-10)
        assert result.error_estimate >= 0

    def test_gaussian_third_moment(self) -> None:
        """Verify ∫₀^∞ t³e^{-t²/4} dt = 8."""
        result = integrate(lambda t: t**3 * math.exp(-t * t / 4.0), 0.0, math.inf, tol=1e-12)
        assert result.value == pytest.approx(8.0, abs=1e-9)

    def test_polynomial(self) -> None:
        assert integrate(lambda t: t * t, 0.0, 1.0).value == pytest.approx(1.0 / 3.0, abs=1e-14)

    def test_breakpoints(self) -> None:
        """Verify a kink passed as breakpoint is integrated accurately."""
        result = integrate(lambda t: abs(t - 0.3), 0.0, 1.0, points=[0.3])
        assert result.value == pytest.approx(0.045 + 0.245, abs=1e-12)

    def test_subdivision_limit_raises(self) -> None:
        """Verify an unreachable tolerance surfaces as QuadratureError."""
        with pytest.raises(QuadratureError) as exc_info:
            integrate(lambda t: math.sin(50.0 * t), 0.0, 20.0, tol=1e-14, limit=1)
        assert math.isfinite(exc_info.value.best_estimate)


class TestLinearAndNewton:
    """Tests for the tridiagonal solver and damped Newton."""

    def test_tridiagonal_matches_dense(self) -> None:
        rng = np.random.default_rng(3)
        n = 8
        lower = rng.uniform(-1.0, 1.0, n - 1)
        upper = rng.uniform(-1.0, 1.0, n - 1)
        diag = 4.0 + rng.uniform(0.0, 1.0, n)
        rhs = rng.normal(size=n)
        dense = np.diag(diag) + np.diag(lower, -1) + np.diag(upper, 1)
        x = solve_tridiagonal(lower, diag, upper, rhs)
        np.testing.assert_allclose(dense @ x, rhs, atol=1e-12)

    def test_tridiagonal_large_random_system(self) -> None:
        """Verify the multiply-back residual of a 100×100 diagonally dominant system."""
        rng = np.random.default_rng(100)
        n = 100
        lower = rng.uniform(-1.0, 1.0, n - 1)
        upper = rng.uniform(-1.0, 1.0, n - 1)
        diag = 2.5 + rng.uniform(0.0, 2.0, n)
        rhs = rng.normal(size=n)
        x = solve_tridiagonal(lower, diag, upper, rhs)
        residual = tridiagonal_matvec(lower, diag, upper, x) - rhs
        assert np.max(np.abs(residual)) < 1e-12 * (np.max(np.abs(rhs)) + 1.0)
        dense = np.diag(diag) + np.diag(lower, -1) + np.diag(upper, 1)
        np.testing.assert_allclose(dense @ x, rhs, atol=1e-12)

    def test_singular_system_raises_pivot_error(self) -> None:
        with pytest.raises(PivotError):
            solve_tridiagonal(np.zeros(2), np.zeros(3), np.zeros(2), np.ones(3))

    def test_newton_scalar_root(self) -> None:
        """Verify Newton finds √2 from x²−2 with a dense Jacobian."""

        def residual_and_jacobian(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
            return x**2 - 2.0, np.array([[2.0 * x[0]]])

        result = newton_damped(residual_and_jacobian, 1.0, tol=1e-12)
        assert result.solution[0] == pytest.approx(math.sqrt(2.0), rel=1e-12)
        assert result.residual_norm <= 1e-12

    def test_newton_iteration_limit(self) -> None:
        """Verify exceeding max_iter raises ConvergenceError with the last iterate."""

        def residual_and_jacobian(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
            return x**2 - 2.0, np.array([[2.0 * x[0]]])

        with pytest.raises(ConvergenceError) as exc_info:
            newton_damped(residual_and_jacobian, 10.0, tol=1e-12, max_iter=1)
        assert exc_info.value.iterations == 1

    def test_rounding_tolerance_floor(self) -> None:
        """Verify the floor applies on coarse grids and rounding on fine ones."""
        assert rounding_tolerance(1.0, 0.1) == pytest.approx(1e-10)
        fine = rounding_tolerance(100.0, 1e-4)
        assert fine == pytest.approx(8.0 * np.finfo(float).eps * 100.0 / 1e-8)


class TestStencils:
    """Tests for centered derivatives."""

    def test_quadratic_is_exact(self) -> None:
        """Verify second-order stencils reproduce u = x² everywhere."""
        grid = Grid1D.uniform(0.0, 1.0, 11)
        x = grid.nodes
        p, q = centered_derivatives(x**2, grid.step, symmetric_left=False)
        np.testing.assert_allclose(p, 2.0 * x, atol=1e-12)
        np.testing.assert_allclose(q, 2.0, atol=1e-9)

    def test_symmetric_left_node(self) -> None:
        """Verify the even reflection gives u'(0) = 0 and u''(0) exactly for x²."""
        grid = Grid1D.uniform(0.0, 1.0, 11)
        p, q = centered_derivatives(grid.nodes**2, grid.step, symmetric_left=True)
        assert p[0] == 0.0
        assert q[0] == pytest.approx(2.0)


class TestQuasilinearBVP:
    """Tests for the two-point solver."""

    def test_linear_dirichlet_problem(self) -> None:
        """Verify u'' + 1 = 0, u(0) = u(1) = 0 gives x(1−x)/2 to rounding."""
        grid = Grid1D.uniform(0.0, 1.0, 51)
        bvp = QuasilinearBVP(
            grid=grid,
            diffusion=np.ones_like,
            diffusion_slope=np.zeros_like,
            drift=np.zeros(len(grid)),
            reaction=np.ones_like,
            reaction_slope=np.zeros_like,
            left="dirichlet",
        )
        values, result = bvp.solve(np.zeros(len(grid)))
        x = grid.nodes
        np.testing.assert_allclose(values, x * (1.0 - x) / 2.0, atol=1e-12)
        assert result.residual_norm <= 1e-10

    def test_symmetric_origin(self) -> None:
        """Verify u'' + u'/r + 4 = 0 on the disk of radius 1 gives 1 − r²."""
        grid = Grid1D.uniform(0.0, 1.0, 41)
        r = grid.nodes
        drift = np.zeros_like(r)
        drift[1:] = 1.0 / r[1:]
        bvp = QuasilinearBVP(
            grid=grid,
            diffusion=np.ones_like,
            diffusion_slope=np.zeros_like,
            drift=drift,
            reaction=lambda u: np.full_like(u, 4.0),
            reaction_slope=np.zeros_like,
            left="symmetric",
            singular_weight=1.0,
        )
        values, _ = bvp.solve(np.zeros(len(grid)))
        np.testing.assert_allclose(values, 1.0 - r**2, atol=1e-10)
