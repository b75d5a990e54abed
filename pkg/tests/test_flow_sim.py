"""Tests for graphic s-flows, translators and their certificates."""

from __future__ import annotations

from dataclasses import replace
import math

import numpy as np
import pytest

from expanderlab.exceptions import DomainError
from expanderlab.flow_sim import (
    FlowScheme,
    FlowState,
    SMode,
    TranslatorParams,
    arrival_time_exact,
    arrival_time_limit,
    evolve,
    explicit_step_limit,
    fixed_point_drift,
    gaussian_bump,
    h_evolution_check,
    hs_identity_residual,
    level_set_residual,
    mcf_duration,
    normalized_convergence,
    ordering_check,
    radial_state,
    reparametrization_check,
    solve_translator,
    step,
    translator_mean_curvature,
    translator_residual,
    write_trajectory,
)

# =============================================================================
# STATES AND STEPPING
# =============================================================================


class TestFlowState:
    """Tests for FlowState validation."""

    def test_rejects_nonpositive_dt(self) -> None:
        with pytest.raises(ValueError, match="dt"):
            radial_state(gaussian_bump(), n=2, R=5.0, nodes=51, dt=0.0)

    def test_rejects_negative_s(self) -> None:
        with pytest.raises(ValueError, match="s must be nonnegative"):
            radial_state(gaussian_bump(), n=2, R=5.0, nodes=51, dt=0.01, s=-1.0)

    def test_s_term_coefficients(self) -> None:
        """Verify full-position and horizontal modes differ only in the u term."""
        full = radial_state(gaussian_bump(), n=2, R=5.0, nodes=51, dt=0.01, s=0.5)
        horizontal = replace(full, s_mode=SMode.HORIZONTAL)
        assert (full.alpha, full.beta) == (0.5, -0.5)
        assert (horizontal.alpha, horizontal.beta) == (0.5, 0.0)


class TestStep:
    """Tests for single steps and evolve."""

    @pytest.mark.parametrize("scheme", list(FlowScheme))
    def test_flat_graph_is_stationary(self, scheme: FlowScheme) -> None:
        """Verify u ≡ 0 stays zero under every scheme."""
        state = radial_state(
            np.zeros_like, n=2, R=5.0, nodes=51, dt=1e-3, s=0.5, scheme=scheme
        )
        final = evolve(state, 0.01)[-1]
        np.testing.assert_allclose(final.values, 0.0, atol=1e-14)
        assert final.time == pytest.approx(0.01)

    def test_bump_decays_under_mcf(self) -> None:
        """Verify the maximum of a Gaussian bump decreases under mean curvature flow."""
        state = radial_state(gaussian_bump(), n=2, R=6.0, nodes=61, dt=0.01)
        final = evolve(state, 0.2)[-1]
        assert final.values.max() < state.values.max()
        assert final.values[-1] == pytest.approx(state.values[-1])

    def test_explicit_step_limit_enforced(self) -> None:
        state = radial_state(
            gaussian_bump(), n=2, R=5.0, nodes=51, dt=1.0, scheme=FlowScheme.EXPLICIT
        )
        assert explicit_step_limit(state) < 1.0
        with pytest.raises(DomainError, match="explicit"):
            step(state)

    def test_evolve_keeps_first_and_last(self) -> None:
        state = radial_state(gaussian_bump(), n=2, R=5.0, nodes=51, dt=0.01)
        trajectory = evolve(state, 0.1, keep_every=4)
        assert trajectory[0].time == 0.0
        assert trajectory[-1].time == pytest.approx(0.1)
        assert len(trajectory) == 4

    def test_evolve_rejects_past_time(self) -> None:
        state = radial_state(gaussian_bump(), n=2, R=5.0, nodes=51, dt=0.01, time=1.0)
        with pytest.raises(DomainError):
            evolve(state, 0.5)

    def test_time_dependent_boundary(self) -> None:
        """Verify the boundary node follows the prescribed trace."""
        state = radial_state(
            np.zeros_like, n=2, R=5.0, nodes=51, dt=0.01, boundary=lambda t: 2.0 * t
        )
        final = evolve(state, 0.1)[-1]
        assert final.values[-1] == pytest.approx(0.2)

    def test_disk_expander_is_stationary(self, cone_field) -> None:
        """Verify the solved disk expander does not move under the s = 1/2 flow."""
        state = FlowState(base=cone_field, s=0.5, dt=0.01)
        assert not state.radial
        assert 0.0 < explicit_step_limit(state) <= (10.0 / 40) ** 2 / 4
        final = evolve(state, 0.05)[-1]
        np.testing.assert_allclose(final.values, cone_field.values, atol=1e-6)


class TestOrdering:
    """Tests for the flow comparison principle."""

    def test_ordered_bumps_stay_ordered(self, tolerances) -> None:
        scheme = FlowScheme.SEMI_IMPLICIT
        kwargs = {"n": 2, "R": 6.0, "nodes": 61, "dt": 0.01, "s": 0.5, "scheme": scheme}
        small = radial_state(gaussian_bump(0.5), **kwargs)
        large = radial_state(gaussian_bump(1.0), **kwargs)
        report = ordering_check(small, large, 0.2, slack=tolerances.ordering_slack)
        assert report.passed, report.failures
        assert report.details["steps"] == 20

    def test_mismatched_grids_rejected(self) -> None:
        a = radial_state(gaussian_bump(), n=2, R=6.0, nodes=61, dt=0.01)
        b = radial_state(gaussian_bump(), n=2, R=6.0, nodes=31, dt=0.01)
        with pytest.raises(DomainError):
            ordering_check(a, b, 0.1)


# =============================================================================
# SELF-SIMILAR CERTIFICATES
# =============================================================================


class TestSelfSimilarity:
    """Tests for the fixed-point and reparametrization certificates."""

    def test_mcf_duration(self) -> None:
        assert mcf_duration(0.0, 0.7) == 0.7
        assert mcf_duration(0.5, 1.0) == pytest.approx(math.e - 1.0)

    def test_reparametrization_needs_positive_s(self) -> None:
        with pytest.raises(DomainError):
            reparametrization_check(0.0)

    @pytest.mark.slow
    def test_expander_is_fixed_point(self, quick_tolerances) -> None:
        report = fixed_point_drift(min_ratio=quick_tolerances.flow_refinement_ratio)
        assert report.passed, report.failures

    @pytest.mark.slow
    def test_rescaled_s_flow_is_mcf(self, quick_tolerances) -> None:
        report = reparametrization_check(min_ratio=quick_tolerances.flow_refinement_ratio)
        assert report.passed, report.failures

    @pytest.mark.slow
    def test_h_evolution_identity(self, quick_tolerances) -> None:
        """Verify the H evolution residual converges and its ablation does not."""
        report = h_evolution_check(min_ratio=quick_tolerances.flow_refinement_ratio)
        assert report.passed, report.failures

    def test_flat_cone_has_no_normalized_error(self) -> None:
        """Verify κ = 0 flows the flat graph onto the flat trace."""
        report = normalized_convergence(0.0, 8.0, 1.0, 81, report_times=3)
        assert report.passed, report.failures
        assert report.details["times"][-1] == pytest.approx(1.0)
        assert report.details["final_error"] <= 1e-12

    @pytest.mark.slow
    def test_cone_flow_approaches_expander(self, quick_tolerances) -> None:
        report = normalized_convergence(
            1.0, 40.0, 25.0, 401, oracle_nodes=4001, tol=quick_tolerances.convergence_error
        )
        assert report.passed, report.failures

    def test_level_set_residual_is_small(self) -> None:
        """Verify the level-set form of the flow holds to discretization error."""
        state = radial_state(
            gaussian_bump(),
            n=2,
            R=6.0,
            nodes=121,
            dt=1e-3,
            s=0.5,
            scheme=FlowScheme.CRANK_NICOLSON,
        )
        trajectory = evolve(state, 0.02)
        assert level_set_residual(trajectory) < 1e-2


# =============================================================================
# TRANSLATORS
# =============================================================================


class TestTranslatorParams:
    """Tests for translator parameter validation."""

    def test_flow_constant(self) -> None:
        assert TranslatorParams(epsilon=1.0, lambda_=10.0).s == pytest.approx(0.5)
        assert TranslatorParams(epsilon=math.inf, lambda_=10.0).s == 0.0

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"epsilon": 0.0, "lambda_": 1.0},
            {"epsilon": 1.0, "lambda_": 0.0},
            {"epsilon": 1.0, "lambda_": math.inf},
            {"epsilon": 1.0, "lambda_": 1.0, "rho0": -1.0},
            {"epsilon": 1.0, "lambda_": 1.0, "n": 1},
        ],
    )
    def test_invalid_parameters(self, kwargs: dict) -> None:
        with pytest.raises(ValueError):
            TranslatorParams(**kwargs)


class TestSolveTranslator:
    """Tests for the radial translator."""

    @pytest.fixture(scope="class")
    def translator(self):
        params = TranslatorParams(epsilon=1.0, lambda_=10.0)
        return params, solve_translator(params, resolution=401)

    def test_residual(self, translator, tolerances) -> None:
        params, profile = translator
        assert translator_residual(profile, params) <= tolerances.translator_residual

    def test_hs_identity(self, translator, tolerances) -> None:
        """Verify H − s⟨x,ν⟩ = −λ⟨E,ν⟩ at every interior node."""
        params, profile = translator
        assert hs_identity_residual(profile, params) <= tolerances.hs_identity

    def test_shape(self, translator) -> None:
        """Verify φ ≥ 0, zero on the rim, maximal at the center, with H_s < 0."""
        params, profile = translator
        assert profile.values[-1] == 0.0
        assert np.all(profile.values >= 0.0)
        assert int(np.argmax(profile.values)) == 0
        assert np.all(translator_mean_curvature(profile, params)[:-1] < 0)


class TestArrivalTime:
    """Tests for the arrival-time limit."""

    def test_exact_vanishes_on_rim(self) -> None:
        r = np.linspace(0.0, 1.0, 11)
        v = arrival_time_exact(r, 1.0)
        assert v[-1] == pytest.approx(0.0, abs=1e-15)
        assert np.all(np.diff(v) < 0)

    def test_exact_unweighted_limit(self) -> None:
        """Verify ε = ∞ gives (ρ₀² − r²)/(2(d−1))."""
        r = np.array([0.0, 0.5])
        np.testing.assert_allclose(arrival_time_exact(r, math.inf, n=4), [0.25, 0.1875])

    def test_exact_needs_n3(self) -> None:
        with pytest.raises(DomainError):
            arrival_time_exact(np.array([0.5]), 1.0, n=2)

    def test_rejects_short_speed_list(self) -> None:
        with pytest.raises(DomainError):
            arrival_time_limit(1.0, (10.0, 100.0))

    def test_rejects_narrow_speed_range(self) -> None:
        with pytest.raises(DomainError):
            arrival_time_limit(1.0, (10.0, 20.0, 30.0))

    @pytest.mark.slow
    def test_limit_converges(self) -> None:
        report = arrival_time_limit(1.0, (10.0, 100.0, 1000.0), 501)
        assert report.passed, report.failures
        distances = report.details["distance_to_closed_form"]
        assert distances[-1] < distances[0]


# =============================================================================
# EXPORT
# =============================================================================


class TestTrajectoryExport:
    """Tests for trajectory export."""

    def test_writes_index_snapshots_and_plot(self, tmp_path) -> None:
        state = radial_state(gaussian_bump(), n=2, R=5.0, nodes=51, dt=0.01)
        trajectory = evolve(state, 0.05)
        written = write_trajectory(trajectory, tmp_path, stem="bump")
        assert written[0].name == "bump_index.csv"
        assert written[-1].suffix == ".svg"
        index = written[0].read_text(encoding="utf-8").splitlines()
        assert index[0] == "index,time,file"
        assert len(index) == len(trajectory) + 1
