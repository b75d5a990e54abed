"""Graphic mean curvature flow and s-mean curvature flow.

A graph x_{n+1} = u(x) moving by dX/dt = H⃗ − sX has vertical speed

    u_t = g^{ij}u_ij + s(x·Du − u),     g^{ij} = δ_ij − u_i u_j/(1+|Du|²)

in full-position mode. Horizontal mode keeps only the horizontal part of the
position, u_t = g^{ij}u_ij + s·x·Du. s = 0 is plain mean curvature flow.
Radial flows run on a RadialProfile grid, disk flows on the polar grid of
graph_solver; both take the same three time-stepping schemes.

The module also certifies the self-similar behavior of these flows and solves
the radial translator whose vertical motion generates the horizontal s-flow.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, replace
from enum import Enum
import math
from pathlib import Path

import numpy as np
from scipy import sparse
import structlog

from .config import BLOW_UP_THRESHOLD
from .exceptions import BlowUpError, DomainError, ExpanderLabError
from .export import write_columns_csv, write_csv, write_curves_svg
from .expander_ode import RadialProfile, rotational_curvatures, solve_rotational
from .graph_solver import GraphField, PolarDiskOperator
from .numerics_core import (
    Grid1D,
    NewtonResult,
    QuasilinearBVP,
    centered_derivatives,
    graph_diffusion,
    graph_diffusion_slope,
    linear_solve,
    rounding_tolerance,
)
from .reports import CertificateReport
from .utils.retry import solve_with_continuation

logger = structlog.get_logger(__name__)

# Error reduction required when (dt, h) are halved together.
FLOW_REFINEMENT_RATIO = 2.5

# Growth between consecutive normalized errors still read as "decreasing".
DECREASE_SLACK = 1e-6


# =============================================================================
# FLOW STATE
# =============================================================================


class FlowScheme(str, Enum):
    """Time-stepping schemes.

    semi-implicit freezes the metric at the current gradient and is implicit
    in the new values; crank-nicolson averages old and new operators with a
    predictor-corrector for the metric; explicit is forward Euler.
    """

    SEMI_IMPLICIT = "semi-implicit"
    CRANK_NICOLSON = "crank-nicolson"
    EXPLICIT = "explicit"


class SMode(str, Enum):
    """Which part of the position vector enters the s-term."""

    FULL_POSITION = "full-position"
    HORIZONTAL = "horizontal"


BoundaryTrace = Callable[[float], float | np.ndarray]


@dataclass(frozen=True, eq=False)
class FlowState:
    """One snapshot of a graphic flow.

    Attributes:
        base: Current graph, radial or on the disk.
        time: Flow time.
        s: Flow constant (0 for mean curvature flow).
        dt: Step used by ``step``.
        scheme: Time-stepping scheme.
        s_mode: Full-position or horizontal s-term.
        boundary: Dirichlet data as a function of time; None keeps the
            current boundary values.
    """

    base: RadialProfile | GraphField
    time: float = 0.0
    s: float = 0.0
    dt: float = 1e-3
    scheme: FlowScheme = FlowScheme.SEMI_IMPLICIT
    s_mode: SMode = SMode.FULL_POSITION
    boundary: BoundaryTrace | None = None

    def __post_init__(self) -> None:
        """Validate the time, step and flow constant."""
        if not (math.isfinite(self.time) and self.time >= 0):
            msg = f"time must be finite and nonnegative, got {self.time}"
            raise ValueError(msg)
        if not self.s >= 0:
            msg = f"s must be nonnegative, got {self.s}"
            raise ValueError(msg)
        if not self.dt > 0:
            msg = f"dt must be positive, got {self.dt}"
            raise ValueError(msg)
        if isinstance(self.base, RadialProfile) and not self.base.symmetric:
            msg = "radial flows need a grid starting at the symmetric origin"
            raise ValueError(msg)

    @property
    def values(self) -> np.ndarray:
        """Current samples of u."""
        return self.base.values

    @property
    def radial(self) -> bool:
        """Whether this is a rotational flow."""
        return isinstance(self.base, RadialProfile)

    @property
    def alpha(self) -> float:
        """Coefficient of x·Du in the vertical speed."""
        return self.s

    @property
    def beta(self) -> float:
        """Coefficient of u in the vertical speed."""
        return -self.s if self.s_mode is SMode.FULL_POSITION else 0.0

    def advance(self, values: np.ndarray, time: float) -> FlowState:
        """Copy carrying new values at a later time."""
        if isinstance(self.base, RadialProfile):
            base: RadialProfile | GraphField = self.base.with_values(
                values, iterations=0, residual_norm=0.0
            )
        else:
            base = replace(self.base, values=values, iterations=0, sweeps=0, residual_norm=0.0)
        return replace(self, base=base, time=time)


def radial_state(
    initial: Callable[[np.ndarray], np.ndarray],
    *,
    n: int,
    R: float,
    nodes: int,
    dt: float,
    s: float = 0.0,
    scheme: FlowScheme = FlowScheme.CRANK_NICOLSON,
    s_mode: SMode = SMode.FULL_POSITION,
    boundary: BoundaryTrace | None = None,
    time: float = 0.0,
    kappa: float = 0.0,
) -> FlowState:
    """Sample initial data on a uniform radial grid and wrap it in a state.

    Args:
        initial: u(r, time) as a vectorized function of r.
        n: Hypersurface dimension.
        R: Outer radius.
        nodes: Grid nodes on [0, R].
        dt: Time step.
        s: Flow constant.
        scheme: Time-stepping scheme.
        s_mode: s-term variant.
        boundary: Dirichlet trace; None pins the initial boundary value.
        time: Initial time.
        kappa: Cone slope recorded on the profile.

    Returns:
        The initial state.
    """
    grid = Grid1D.uniform(0.0, R, nodes)
    profile = RadialProfile(
        n=n, kappa=kappa, R=R, grid=grid, values=initial(grid.nodes), equation="flow"
    )
    return FlowState(
        base=profile, time=time, s=s, dt=dt, scheme=scheme, s_mode=s_mode, boundary=boundary
    )


# =============================================================================
# SPATIAL OPERATORS
# =============================================================================


class _RadialFlowOperator:
    """Rotational vertical speed u_rr/(1+u_r²) + ((n−1)/r + αr)u_r + βu."""

    def __init__(self, profile: RadialProfile, alpha: float, beta: float) -> None:
        r = profile.r
        drift = np.zeros_like(r)
        drift[1:] = (profile.n - 1) / r[1:] + alpha * r[1:]
        self.h = profile.h
        self.unknowns = len(r) - 1
        self.bvp = QuasilinearBVP(
            grid=profile.grid,
            diffusion=graph_diffusion,
            diffusion_slope=graph_diffusion_slope,
            drift=drift,
            reaction=lambda u: beta * u,
            reaction_slope=lambda u: np.full_like(u, beta),
            left="symmetric",
            singular_weight=float(profile.n - 1),
        )

    def split(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return np.array(values[:-1], dtype=float), np.array(values[-1:], dtype=float)

    def merge(self, unknowns: np.ndarray, boundary: np.ndarray) -> np.ndarray:
        return np.concatenate([unknowns, boundary])

    def rate(self, values: np.ndarray) -> np.ndarray:
        return self.bvp.residual(values)

    def frozen(self, values: np.ndarray) -> tuple[sparse.csc_matrix, sparse.csc_matrix]:
        lower, diag, upper = self.bvp.frozen_operator(values)
        _, right = self.bvp.boundary_couplings(values)
        inner = sparse.diags([lower, diag, upper], [-1, 0, 1], format="csc")
        edge = sparse.csc_matrix(([right], ([self.unknowns - 1], [0])), shape=(self.unknowns, 1))
        return inner, edge

    def gradient_sup(self, values: np.ndarray) -> float:
        p, _ = centered_derivatives(values, self.h, symmetric_left=True)
        return float(np.max(np.abs(p)))


class _DiskFlowOperator:
    """Vertical speed g^{ij}u_ij + α·x·Du + βu on the polar grid."""

    def __init__(self, field: GraphField, alpha: float, beta: float) -> None:
        self.op: PolarDiskOperator = field.operator
        self.alpha = alpha
        self.beta = beta
        self.h = self.op.dr
        self.unknowns = self.op.unknowns

    def split(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        vector = self.op.flatten(values)
        return vector[: self.unknowns], vector[self.unknowns :]

    def merge(self, unknowns: np.ndarray, boundary: np.ndarray) -> np.ndarray:
        return self.op.unflatten(np.concatenate([unknowns, boundary]))

    def rate(self, values: np.ndarray) -> np.ndarray:
        return self.op.residual(self.op.flatten(values), self.alpha, self.beta)

    def frozen(self, values: np.ndarray) -> tuple[sparse.csc_matrix, sparse.csc_matrix]:
        matrix = self.op.frozen_matrix(self.op.flatten(values), self.alpha, self.beta).tocsc()
        return matrix[:, : self.unknowns], matrix[:, self.unknowns :]

    def gradient_sup(self, values: np.ndarray) -> float:
        return float(np.sqrt(np.max(self.op.gradient_squared(self.op.flatten(values)))))


def _flow_operator(state: FlowState) -> _RadialFlowOperator | _DiskFlowOperator:
    if isinstance(state.base, RadialProfile):
        return _RadialFlowOperator(state.base, state.alpha, state.beta)
    return _DiskFlowOperator(state.base, state.alpha, state.beta)


def explicit_step_limit(state: FlowState) -> float:
    """Largest stable forward-Euler step: min(h²/4, 2/Gershgorin radius)."""
    op = _flow_operator(state)
    inner, _ = op.frozen(state.values)
    radius = float(np.max(np.abs(inner).sum(axis=1)))
    return min(op.h**2 / 4.0, 2.0 / radius)


# =============================================================================
# TIME STEPPING
# =============================================================================


def _boundary_at(state: FlowState, time: float, current: np.ndarray) -> np.ndarray:
    if state.boundary is None:
        return current
    trace = np.atleast_1d(np.asarray(state.boundary(time), dtype=float))
    return np.broadcast_to(trace, current.shape).copy()


def step(state: FlowState) -> FlowState:
    """Advance the flow by one time step.

    The boundary ring takes the trace at the new time. semi-implicit solves
    (I/dt − A(u))u⁺ = u/dt with the metric of A frozen at u; crank-nicolson
    averages A·u and A·u⁺ and re-freezes the metric at the midpoint once.

    Args:
        state: Current snapshot.

    Returns:
        The snapshot one step later.

    Raises:
        DomainError: If an explicit step violates its stability limit.
        BlowUpError: If a value or gradient exceeds the blow-up threshold.
        PivotError: If a step system is singular.
    """
    op = _flow_operator(state)
    dt = state.dt
    time = state.time + dt
    values = state.values
    unknowns, old_edge = op.split(values)
    new_edge = _boundary_at(state, time, old_edge)

    if state.scheme is FlowScheme.EXPLICIT:
        limit = explicit_step_limit(state)
        if dt > limit:
            raise DomainError("dt", dt, f"explicit scheme needs dt <= {limit:.3e}")
        new = unknowns + dt * op.rate(values)
    else:
        identity = sparse.identity(unknowns.size, format="csc")
        implicit = 1.0 if state.scheme is FlowScheme.SEMI_IMPLICIT else 0.5

        def solve_frozen(frozen_at: np.ndarray) -> np.ndarray:
            inner, edge = op.frozen(frozen_at)
            rhs = unknowns / dt + implicit * (edge @ new_edge)
            if implicit < 1.0:
                rhs = rhs + (1.0 - implicit) * (inner @ unknowns + edge @ old_edge)
            return linear_solve(identity / dt - implicit * inner, rhs)

        new = solve_frozen(values)
        if state.scheme is FlowScheme.CRANK_NICOLSON:
            new = solve_frozen(0.5 * (values + op.merge(new, new_edge)))

    magnitude = float(np.max(np.abs(new))) if np.all(np.isfinite(new)) else math.inf
    merged = op.merge(new, new_edge)
    if magnitude <= BLOW_UP_THRESHOLD:
        magnitude = max(magnitude, op.gradient_sup(merged))
    if not magnitude <= BLOW_UP_THRESHOLD:
        raise BlowUpError(time, magnitude)
    return state.advance(merged, time)


def evolve(state: FlowState, T: float, *, keep_every: int = 1) -> list[FlowState]:
    """Step from state.time to T with a uniform step no larger than state.dt.

    Args:
        state: Initial snapshot.
        T: Final time.
        keep_every: Store every k-th snapshot (the first and last always).

    Returns:
        Stored snapshots in time order.

    Raises:
        DomainError: If T precedes the initial time.
    """
    if T < state.time:
        raise DomainError("T", T, f"final time precedes t={state.time}")
    count = max(1, math.ceil((T - state.time) / state.dt - 1e-9))
    current = replace(state, dt=(T - state.time) / count) if T > state.time else state
    if T == state.time:
        return [state]
    trajectory = [current]
    for k in range(1, count + 1):
        current = step(current)
        if k % keep_every == 0 or k == count:
            trajectory.append(current)
    logger.debug(
        "Flow evolved",
        scheme=state.scheme.value,
        s=state.s,
        s_mode=state.s_mode.value,
        steps=count,
        T=T,
    )
    return trajectory


# =============================================================================
# SELF-SIMILAR CERTIFICATES
# =============================================================================


def _refinement_check(
    report: CertificateReport, coarse: float, fine: float, min_ratio: float, label: str
) -> None:
    ratio = coarse / fine if fine > 0 else math.inf
    report.details[f"{label}_coarse"] = coarse
    report.details[f"{label}_fine"] = fine
    report.details[f"{label}_ratio"] = ratio
    if coarse <= 1e-13:
        return
    report.check(ratio >= min_ratio, f"{label} reduced only {ratio:.3f}x (< {min_ratio})")


def fixed_point_drift(
    n: int = 2,
    kappa: float = 1.0,
    R: float = 10.0,
    nodes: int = 101,
    *,
    dt: float = 0.02,
    T: float = 2.0,
    min_ratio: float = FLOW_REFINEMENT_RATIO,
) -> CertificateReport:
    """Certify that expander profiles are fixed points of the s = 1/2 flow.

    A profile solved on a grid eight times finer than the coarse flow grid is
    sampled on the coarse grid and on its halving, then evolved with
    s = 1/2 in full-position mode; the drift sup|u(T) − φ| must shrink by
    ``min_ratio`` under the halving of (dt, h).

    Returns:
        Report with both drifts and their ratio.
    """
    report = CertificateReport(name="expander_fixed_point")
    oracle = solve_rotational(n, kappa, R, nodes=8 * (nodes - 1) + 1).spline()
    drifts = []
    for level in (0, 1):
        state = radial_state(
            oracle,
            n=n,
            R=R,
            nodes=(nodes - 1) * 2**level + 1,
            dt=dt / 2**level,
            s=0.5,
            kappa=kappa,
        )
        final = evolve(state, T, keep_every=10**9)[-1]
        drifts.append(float(np.max(np.abs(final.values - oracle(final.base.r)))))
    _refinement_check(report, drifts[0], drifts[1], min_ratio, "drift")
    report.details.update(n=n, kappa=kappa, R=R, nodes=nodes, dt=dt, T=T)
    return report


class SelfSimilarTrace:
    """The expanding solution √t·Φ(|y|/√t) built on a solved expander Φ.

    Φ is the spline of φ_{κ,R*} up to R*/4 and κξ + A/ξ beyond, with A
    matched at the cutoff.
    """

    def __init__(self, n: int, kappa: float, R: float, nodes: int) -> None:
        """Solve the expander that generates the trace.

        Args:
            n: Hypersurface dimension.
            kappa: Cone slope (0 gives the flat trace).
            R: Outer radius of the expander solve.
            nodes: Nodes of the expander solve.
        """
        self.kappa = kappa
        self.cutoff = R / 4.0
        self._spline: Callable[[np.ndarray], np.ndarray] | None = None
        self._tail = 0.0
        if kappa > 0:
            self._spline = solve_rotational(n, kappa, R, nodes=nodes).spline()
            self._tail = self.cutoff * (float(self._spline(self.cutoff)) - kappa * self.cutoff)

    def profile(self, xi: np.ndarray) -> np.ndarray:
        """Φ at self-similar radii."""
        xi = np.abs(np.asarray(xi, dtype=float))
        if self._spline is None:
            return np.zeros_like(xi)
        inside = xi <= self.cutoff
        out = self.kappa * xi + self._tail / np.maximum(xi, self.cutoff)
        out[inside] = self._spline(xi[inside])
        return out

    def __call__(self, y: np.ndarray | float, t: float) -> np.ndarray:
        """√t·Φ(|y|/√t); κ|y| at t = 0."""
        y = np.abs(np.atleast_1d(np.asarray(y, dtype=float)))
        if t <= 0:
            return self.kappa * y
        root = math.sqrt(t)
        return root * self.profile(y / root)


def normalized_convergence(
    kappa: float = 1.0,
    R: float = 40.0,
    T_final: float = 25.0,
    nodes: int = 801,
    *,
    n: int = 2,
    theta: float = 0.01,
    first_step: float = 1e-4,
    max_step: float = 0.05,
    report_times: int = 6,
    start_time: float = 0.0,
    oracle_nodes: int = 8001,
    tol: float = 1e-2,
) -> CertificateReport:
    """Certify convergence of the rescaled flow from a cone to its expander.

    The flow starts from κ|y| (or from the self-similar solution at
    ``start_time``) with its boundary pinned to √t·Φ(R/√t), Φ solved on
    [0, 4R]. At T_final·2^{-j} the report records

        e(t) = sup_{|y| ≤ R/4} |u(y, t)/√t − Φ(y/√t)|

    and certifies that e decreases and e(T_final) ≤ tol. Steps grow
    geometrically, dt = min(θt, max_step).

    Returns:
        Report with the e(t) table.
    """
    report = CertificateReport(name="normalized_convergence")
    trace = SelfSimilarTrace(n, kappa, 4.0 * R, oracle_nodes)
    marks = [T_final / 2**j for j in reversed(range(report_times))]
    marks = [t for t in marks if t > start_time]
    state = radial_state(
        lambda r: trace(r, start_time),
        n=n,
        R=R,
        nodes=nodes,
        dt=first_step,
        scheme=FlowScheme.CRANK_NICOLSON,
        boundary=lambda t: trace(R, t),
        time=start_time,
        kappa=kappa,
    )
    window = state.base.r <= R / 4.0
    times: list[float] = []
    errors: list[float] = []
    try:
        for mark in marks:
            while state.time < mark and not math.isclose(state.time, mark, rel_tol=1e-12):
                dt = min(max(theta * state.time, first_step), max_step, mark - state.time)
                state = step(replace(state, dt=dt))
            root = math.sqrt(state.time)
            y = state.base.r[window]
            gap = state.values[window] / root - trace.profile(y / root)
            times.append(state.time)
            errors.append(float(np.max(np.abs(gap))))
    except BlowUpError as e:
        report.check(False, str(e))
    report.details.update(kappa=kappa, R=R, n=n, nodes=nodes, T_final=T_final)
    report.details["times"] = times
    report.details["errors"] = errors
    for earlier, later, t in zip(errors, errors[1:], times[1:], strict=False):
        report.check(
            later <= earlier * (1.0 + DECREASE_SLACK) + 1e-12,
            f"e(t) increased at t={t:.4g}: {earlier:.3e} -> {later:.3e}",
        )
    if errors:
        report.details["final_error"] = errors[-1]
        report.check(errors[-1] <= tol, f"e(T_final)={errors[-1]:.3e} exceeds {tol}")
    logger.info(
        "Normalized convergence computed",
        kappa=kappa,
        R=R,
        final_error=errors[-1] if errors else None,
        passed=report.passed,
    )
    return report


def gaussian_bump(amplitude: float = 1.0, width: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    """Radial initial data a·exp(−r²/w²)."""

    def bump(r: np.ndarray) -> np.ndarray:
        return amplitude * np.exp(-((np.asarray(r, dtype=float) / width) ** 2))

    return bump


def mcf_duration(s: float, T: float) -> float:
    """MCF time (e^{2sT} − 1)/(2s) matching s-flow time T."""
    return T if s == 0 else math.expm1(2.0 * s * T) / (2.0 * s)


def _reparametrization_gap(
    initial: Callable[[np.ndarray], np.ndarray],
    s: float,
    T: float,
    *,
    n: int,
    R: float,
    nodes: int,
    dt: float,
    window: float,
) -> float:
    s_leg = radial_state(initial, n=n, R=R, nodes=nodes, dt=dt, s=s)
    s_final = evolve(s_leg, T, keep_every=10**9)[-1]
    steps = max(1, round(T / dt))
    duration = mcf_duration(s, T)
    mcf_leg = radial_state(initial, n=n, R=R, nodes=nodes, dt=duration / steps)
    mcf_final = evolve(mcf_leg, duration, keep_every=10**9)[-1]
    y = mcf_final.base.r
    mask = y <= window * R
    scale = math.exp(s * T)
    rescaled = scale * s_final.base.spline()(y[mask] / scale)
    return float(np.max(np.abs(mcf_final.values[mask] - rescaled)))


def reparametrization_check(
    s: float = 0.5,
    T: float = 0.5,
    *,
    initial: Callable[[np.ndarray], np.ndarray] | None = None,
    n: int = 2,
    R: float = 12.0,
    nodes: int = 241,
    dt: float = 0.01,
    window: float = 0.25,
    min_ratio: float = FLOW_REFINEMENT_RATIO,
) -> CertificateReport:
    """Certify that rescaled s-flows are mean curvature flows.

    If u_s solves the full-position s-flow, e^{sT}·u_s(e^{−sT}y, T) is the
    MCF solution at time (e^{2sT} − 1)/(2s). Both legs start from the same
    data with the same number of steps; the sup discrepancy on
    |y| ≤ window·R must shrink by ``min_ratio`` when (dt, h) are halved.
    The default data is a Gaussian bump whose boundary values vanish, so the
    fixed boundaries of both legs agree.

    Returns:
        Report with coarse and fine discrepancies.

    Raises:
        DomainError: If s is not positive.
    """
    if not s > 0:
        raise DomainError("s", s, "reparametrization needs s > 0")
    data = initial if initial is not None else gaussian_bump()
    report = CertificateReport(name="reparametrization")
    try:
        gaps = [
            _reparametrization_gap(
                data,
                s,
                T,
                n=n,
                R=R,
                nodes=(nodes - 1) * 2**level + 1,
                dt=dt / 2**level,
                window=window,
            )
            for level in (0, 1)
        ]
    except BlowUpError as e:
        report.check(False, str(e))
        return report
    _refinement_check(report, gaps[0], gaps[1], min_ratio, "discrepancy")
    report.details.update(s=s, T=T, mcf_time=mcf_duration(s, T), nodes=nodes, dt=dt)
    return report


def reparametrization_transitivity(
    s_values: Sequence[float] = (0.25, 0.5),
    duration: float = 0.5,
    *,
    initial: Callable[[np.ndarray], np.ndarray] | None = None,
    n: int = 2,
    R: float = 12.0,
    nodes: int = 241,
    dt: float = 0.01,
    window: float = 0.25,
    tol: float = 5e-3,
) -> CertificateReport:
    """Run several s-flows to the times matching one MCF duration.

    s-flow time T = log(1 + 2s·duration)/(2s) maps to MCF time
    ``duration`` for every s, so each rescaled s-flow must agree with the
    same MCF leg to within ``tol``.

    Returns:
        Report with one discrepancy per s.
    """
    data = initial if initial is not None else gaussian_bump()
    report = CertificateReport(name="reparametrization_transitivity")
    gaps = {}
    for s in s_values:
        T = math.log1p(2.0 * s * duration) / (2.0 * s)
        gaps[f"s={s:g}"] = _reparametrization_gap(
            data, s, T, n=n, R=R, nodes=nodes, dt=dt, window=window
        )
        report.check(gaps[f"s={s:g}"] <= tol, f"s={s:g}: discrepancy {gaps[f's={s:g}']:.3e}")
    report.details.update(duration=duration, discrepancies=gaps)
    return report


# =============================================================================
# EVOLUTION IDENTITIES
# =============================================================================


def _uniform_radial(trajectory: Sequence[FlowState]) -> tuple[float, RadialProfile]:
    if len(trajectory) < 3:
        raise DomainError("trajectory", len(trajectory), "need at least 3 snapshots")
    first = trajectory[0].base
    if not isinstance(first, RadialProfile):
        raise DomainError("trajectory", "disk", "identity checks need a radial trajectory")
    times = np.array([state.time for state in trajectory])
    steps = np.diff(times)
    if np.max(np.abs(steps - steps.mean())) > 1e-9 * steps.mean():
        raise DomainError("trajectory", "times", "snapshots must be equally spaced")
    return float(steps.mean()), first


def _space_mask(profile: RadialProfile, window: tuple[float, float]) -> np.ndarray:
    r = profile.r
    idx = np.arange(r.size)
    mask = (r >= window[0]) & (r <= window[1]) & (idx >= 2) & (idx <= r.size - 3)
    if not mask.any():
        raise DomainError("window", window, "no interior node in the window")
    return mask


def _mean_curvature_terms(profile: RadialProfile) -> dict[str, np.ndarray]:
    """H, |A|², ΔH and H_r of a rotational graph from nested stencils."""
    p, q = profile.derivatives()
    H, A_sq = rotational_curvatures(profile.n, profile.r, p, q)
    Hr, Hrr = centered_derivatives(H, profile.h, symmetric_left=True)
    w = 1.0 + p * p
    r = np.where(profile.r > 0, profile.r, 1.0)
    lap = (Hrr + (profile.n - 1) * Hr / r - Hr * p * q / w) / w
    return {"p": p, "q": q, "w": w, "H": H, "A_sq": A_sq, "Hr": Hr, "lap": lap}


def H_evolution_residual(
    trajectory: Sequence[FlowState],
    *,
    window: tuple[float, float] = (0.5, 2.5),
    include_s_term: bool = True,
) -> float:
    """Sup residual of ∂H/∂t = ΔH + |A|²H + sH along a radial s-flow.

    The identity holds at fixed points of the evolving hypersurface. Graph
    nodes move vertically, so the material point at radius r moves
    horizontally with ṙ = −H·u_r/√(1+u_r²) − s·r, and the time derivative
    at a material point is H_t + H_r·ṙ, with H_t from centered differences
    of equally spaced snapshots.

    Args:
        trajectory: Equally spaced snapshots of one full-position radial flow.
        window: Radial interval of the spacetime window.
        include_s_term: Drop sH to obtain the non-converging control.

    Returns:
        Sup of the residual over interior times and window nodes.

    Raises:
        DomainError: On a short, non-uniform or disk trajectory, horizontal
            s-mode, or an empty window.
    """
    dt, first = _uniform_radial(trajectory)
    if trajectory[0].s_mode is not SMode.FULL_POSITION:
        raise DomainError("s_mode", trajectory[0].s_mode.value, "needs full-position flow")
    s = trajectory[0].s
    mask = _space_mask(first, window)
    r = first.r[mask]
    terms = [_mean_curvature_terms(state.base) for state in trajectory]  # type: ignore[arg-type]
    worst = 0.0
    for k in range(1, len(trajectory) - 1):
        now = terms[k]
        H = now["H"][mask]
        p = now["p"][mask]
        H_t = (terms[k + 1]["H"][mask] - terms[k - 1]["H"][mask]) / (2.0 * dt)
        r_dot = -H * p / np.sqrt(now["w"][mask]) - s * r
        rhs = now["lap"][mask] + now["A_sq"][mask] * H
        if include_s_term:
            rhs = rhs + s * H
        worst = max(worst, float(np.max(np.abs(H_t + now["Hr"][mask] * r_dot - rhs))))
    return worst


def level_set_residual(
    trajectory: Sequence[FlowState], *, window: tuple[float, float] = (0.5, 2.5)
) -> float:
    """Sup residual of F_t = |DF|·div(DF/|DF|) + s·x·DF for F = u − x_{n+1}.

    For a graph |DF|·div(DF/|DF|) = √(1+u_r²)·H; x·DF is r·u_r in
    horizontal mode and r·u_r − u with the full position.

    Returns:
        Sup over interior times and window nodes.
    """
    dt, first = _uniform_radial(trajectory)
    mask = _space_mask(first, window)
    r = first.r[mask]
    state0 = trajectory[0]
    worst = 0.0
    for k in range(1, len(trajectory) - 1):
        terms = _mean_curvature_terms(trajectory[k].base)  # type: ignore[arg-type]
        u = trajectory[k].values[mask]
        u_t = (trajectory[k + 1].values[mask] - trajectory[k - 1].values[mask]) / (2.0 * dt)
        position = r * terms["p"][mask]
        if state0.s_mode is SMode.FULL_POSITION:
            position = position - u
        speed = np.sqrt(terms["w"][mask]) * terms["H"][mask] + state0.s * position
        worst = max(worst, float(np.max(np.abs(u_t - speed))))
    return worst


def h_evolution_check(
    kappa: float = 1.0,
    *,
    n: int = 2,
    s: float = 0.5,
    R: float = 6.0,
    nodes: int = 121,
    dt: float = 0.01,
    T: float = 0.2,
    window: tuple[float, float] = (0.5, 2.5),
    min_ratio: float = FLOW_REFINEMENT_RATIO,
) -> CertificateReport:
    """Refinement certificate for the evolution of H, with its ablation.

    Flows from κ√(1+r²) at (h, dt) and (h/2, dt/2). The full residual must
    shrink by ``min_ratio``; without the sH term it must not converge
    (reduction below 1.5).

    Returns:
        Report with both residual pairs.
    """
    report = CertificateReport(name="H_evolution")
    full, ablated = [], []
    for level in (0, 1):
        state = radial_state(
            lambda r: kappa * np.sqrt(1.0 + r * r),
            n=n,
            R=R,
            nodes=(nodes - 1) * 2**level + 1,
            dt=dt / 2**level,
            s=s,
            kappa=kappa,
        )
        trajectory = evolve(state, T)
        full.append(H_evolution_residual(trajectory, window=window))
        ablated.append(H_evolution_residual(trajectory, window=window, include_s_term=False))
    _refinement_check(report, full[0], full[1], min_ratio, "residual")
    ablation_ratio = ablated[0] / ablated[1] if ablated[1] > 0 else math.inf
    report.details["ablation_coarse"] = ablated[0]
    report.details["ablation_fine"] = ablated[1]
    report.details["ablation_ratio"] = ablation_ratio
    if s > 0 and kappa > 0:
        report.check(ablation_ratio < 1.5, f"residual without sH converged ({ablation_ratio:.2f}x)")
    return report


def ordering_check(
    state_a: FlowState, state_b: FlowState, T: float, *, slack: float = 1e-9
) -> CertificateReport:
    """Certify u_a ≤ u_b + slack at every step of two flows on one grid.

    Returns:
        Report with the worst violation max(u_a − u_b).

    Raises:
        DomainError: If the states are not on the same grid with the same step.
    """
    if state_a.values.shape != state_b.values.shape or state_a.dt != state_b.dt:
        raise DomainError("state_b", state_b.values.shape, "flows must share grid and step")
    report = CertificateReport(name="flow_ordering")
    worst = float(np.max(state_a.values - state_b.values))
    steps = 0
    a, b = state_a, state_b
    try:
        while a.time < T and not math.isclose(a.time, T, rel_tol=1e-12):
            a, b = step(a), step(b)
            steps += 1
            worst = max(worst, float(np.max(a.values - b.values)))
    except BlowUpError as e:
        report.check(False, str(e))
    report.details.update(steps=steps, worst_violation=worst, slack=slack)
    report.check(worst <= slack, f"ordering violated by {worst:.3e}")
    return report


# =============================================================================
# TRANSLATORS AND ARRIVAL TIME
# =============================================================================


@dataclass(frozen=True)
class TranslatorParams:
    """Radial translator N_{ε,λ} over the disk of radius ρ₀ in R^{n−1}.

    Attributes:
        epsilon: Weight parameter ε (``math.inf`` drops the position term).
        lambda_: Vertical speed λ.
        rho0: Disk radius.
        n: The graph lives over R^{n−1}.
    """

    epsilon: float
    lambda_: float
    rho0: float = 1.0
    n: int = 3

    def __post_init__(self) -> None:
        """Validate parameter ranges."""
        if not self.epsilon > 0:
            msg = f"epsilon must be positive, got {self.epsilon}"
            raise ValueError(msg)
        if not (self.lambda_ > 0 and math.isfinite(self.lambda_)):
            msg = f"lambda must be positive and finite, got {self.lambda_}"
            raise ValueError(msg)
        if not self.rho0 > 0:
            msg = f"rho0 must be positive, got {self.rho0}"
            raise ValueError(msg)
        if self.n < 2:
            msg = f"n must be at least 2, got {self.n}"
            raise ValueError(msg)

    @property
    def dim(self) -> int:
        """Dimension d = n − 1 of the base disk."""
        return self.n - 1

    @property
    def s(self) -> float:
        """Flow constant 1/(2ε²)."""
        return 0.0 if math.isinf(self.epsilon) else 1.0 / (2.0 * self.epsilon**2)


def _translator_bvp(params: TranslatorParams, grid: Grid1D, lam: float) -> QuasilinearBVP:
    """w''/(1+λ²w'²) + ((d−1)/r + s·r)w' + 1 = 0, w'(0) = 0, w(ρ₀) = 0."""
    r = grid.nodes
    drift = np.zeros_like(r)
    drift[1:] = (params.dim - 1) / r[1:] + params.s * r[1:]
    lam_sq = lam * lam
    return QuasilinearBVP(
        grid=grid,
        diffusion=lambda p: 1.0 / (1.0 + lam_sq * p * p),
        diffusion_slope=lambda p: -2.0 * lam_sq * p / (1.0 + lam_sq * p * p) ** 2,
        drift=drift,
        reaction=np.ones_like,
        reaction_slope=np.zeros_like,
        left="symmetric",
        singular_weight=float(params.dim - 1),
    )


def solve_translator(params: TranslatorParams, resolution: int = 1001) -> RadialProfile:
    """Solve the radial translator with zero boundary values.

    φ = λw where w solves the λ-normalized equation; on failure the speed is
    ramped geometrically from min(λ, 1).

    Args:
        params: Translator parameters.
        resolution: Nodes on [0, ρ₀].

    Returns:
        Profile of φ with n = d (the base dimension) and equation "translator".

    Raises:
        ConvergenceError: If every continuation attempt fails.
    """
    grid = Grid1D.uniform(0.0, params.rho0, resolution)
    tol = rounding_tolerance(params.rho0**2, grid.step)
    start = min(params.lambda_, 1.0)

    def attempt(stages: int) -> tuple[np.ndarray, NewtonResult]:
        w = np.zeros(len(grid))
        result = NewtonResult(w, 0, 0.0)
        for stage in range(1, stages + 1):
            lam = start * (params.lambda_ / start) ** (stage / stages)
            if stages == 1:
                lam = params.lambda_
            w, result = _translator_bvp(params, grid, lam).solve(w, tol=tol)
        return w, result

    w, result = solve_with_continuation(attempt)
    profile = RadialProfile(
        n=params.dim,
        kappa=0.0,
        R=params.rho0,
        grid=grid,
        values=params.lambda_ * w,
        equation="translator",
        iterations=result.iterations,
        residual_norm=result.residual_norm,
    )
    logger.info(
        "Translator solve converged",
        epsilon=params.epsilon,
        lambda_=params.lambda_,
        rho0=params.rho0,
        iterations=result.iterations,
        residual=result.residual_norm,
    )
    return profile


def translator_residual(profile: RadialProfile, params: TranslatorParams) -> float:
    """Infinity norm of the λ-normalized discrete residual."""
    bvp = _translator_bvp(params, profile.grid, params.lambda_)
    return float(np.max(np.abs(bvp.residual(profile.values / params.lambda_))))


def hs_identity_residual(profile: RadialProfile, params: TranslatorParams) -> float:
    """Sup of |H − s⟨x,ν⟩ + λ⟨E_{n+1},ν⟩| over the interior nodes.

    With ν = (−Dφ, 1)/√(1+|Dφ|²): ⟨x,ν⟩ = −rφ′/√W and ⟨E_{n+1},ν⟩ = 1/√W.
    """
    p, q = profile.derivatives()
    H, _ = rotational_curvatures(profile.n, profile.r, p, q)
    root = np.sqrt(1.0 + p * p)
    residual = H + params.s * profile.r * p / root + params.lambda_ / root
    return float(np.max(np.abs(residual[:-1])))


def translator_mean_curvature(profile: RadialProfile, params: TranslatorParams) -> np.ndarray:
    """s-mean curvature H − s⟨x,ν⟩ at every node (negative on translators)."""
    p, q = profile.derivatives()
    H, _ = rotational_curvatures(profile.n, profile.r, p, q)
    return H + params.s * profile.r * p / np.sqrt(1.0 + p * p)


def arrival_time_exact(
    r: np.ndarray, epsilon: float, rho0: float = 1.0, n: int = 3
) -> np.ndarray:
    """Arrival time of the shrinking spheres of the horizontal s-flow in R^{n−1}.

    v(r) = ε²·log(((d−1) + sρ₀²)/((d−1) + s·r²)), s = 1/(2ε²), d = n − 1;
    (ρ₀² − r²)/(2(d−1)) when ε = ∞.

    Raises:
        DomainError: If n < 3.
    """
    if n < 3:
        raise DomainError("n", n, "closed-form arrival time needs n >= 3")
    r = np.asarray(r, dtype=float)
    d = n - 1
    if math.isinf(epsilon):
        return (rho0**2 - r * r) / (2.0 * (d - 1))
    s = 1.0 / (2.0 * epsilon**2)
    return epsilon**2 * np.log(((d - 1) + s * rho0**2) / ((d - 1) + s * r * r))


def arrival_time_residual(
    profile: RadialProfile, params: TranslatorParams, window: tuple[float, float]
) -> float:
    """Sup of |v′|·((d−1)/r + s·r) − 1 for v = φ/λ on a radial window."""
    r = profile.r
    v_r, _ = centered_derivatives(profile.values / params.lambda_, profile.h, symmetric_left=True)
    mask = (r >= window[0]) & (r <= window[1]) & (r > 0)
    residual = np.abs(v_r[mask]) * ((params.dim - 1) / r[mask] + params.s * r[mask]) - 1.0
    return float(np.max(np.abs(residual)))


def arrival_time_limit(
    epsilon: float,
    lambdas: Sequence[float] = (10.0, 100.0, 1000.0),
    resolution: int = 1001,
    *,
    n: int = 3,
    rho0: float = 1.0,
) -> CertificateReport:
    """Certify that φ_{ε,λ}/λ converges to the arrival-time function.

    Consecutive sup differences of v_λ must decrease, and the arrival-time
    residual on [ρ₀/4, 3ρ₀/4] must decrease along the list. A failed solve
    is recorded and the remaining speeds are still tried.

    Args:
        epsilon: Weight parameter ε.
        lambdas: Increasing speeds spanning at least a decade, ≥ 3 entries.
        resolution: Nodes on [0, ρ₀].
        n: Cross-section dimension (graph over R^{n−1}).
        rho0: Disk radius.

    Returns:
        Report with differences, residuals and distances to the closed form.

    Raises:
        DomainError: On a short, unsorted or too narrow speed list.
    """
    speeds = [float(lam) for lam in lambdas]
    if len(speeds) < 3 or any(b <= a for a, b in zip(speeds, speeds[1:], strict=False)):
        raise DomainError("lambdas", speeds, "need at least 3 increasing speeds")
    if speeds[-1] < 10.0 * speeds[0]:
        raise DomainError("lambdas", speeds, "speeds must span at least a decade")
    report = CertificateReport(name="arrival_time_limit")
    window = (rho0 / 4.0, 3.0 * rho0 / 4.0)
    limits: dict[float, np.ndarray] = {}
    residuals: list[float] = []
    distances: list[float] = []
    r = Grid1D.uniform(0.0, rho0, resolution).nodes
    for lam in speeds:
        params = TranslatorParams(epsilon=epsilon, lambda_=lam, rho0=rho0, n=n)
        try:
            profile = solve_translator(params, resolution)
        except ExpanderLabError as e:
            report.check(False, f"lambda={lam:g}: {e}")
            continue
        limits[lam] = profile.values / lam
        residuals.append(arrival_time_residual(profile, params, window))
        if n >= 3:
            exact = arrival_time_exact(r, epsilon, rho0, n)
            distances.append(float(np.max(np.abs(limits[lam] - exact))))
    solved = list(limits.values())
    differences = [float(np.max(np.abs(b - a))) for a, b in zip(solved, solved[1:], strict=False)]
    report.details.update(epsilon=epsilon, lambdas=speeds, n=n, rho0=rho0)
    report.details["differences"] = differences
    report.details["residuals"] = residuals
    report.details["distance_to_closed_form"] = distances
    for earlier, later in zip(differences, differences[1:], strict=False):
        report.check(later < earlier, f"differences not decreasing: {earlier:.3e} -> {later:.3e}")
    for earlier, later in zip(residuals, residuals[1:], strict=False):
        report.check(later < earlier, f"residuals not decreasing: {earlier:.3e} -> {later:.3e}")
    return report


# =============================================================================
# EXPORT
# =============================================================================


def write_trajectory(
    states: Sequence[FlowState], out_dir: Path, *, stem: str = "flow", svg: bool = True
) -> list[Path]:
    """Write one CSV per snapshot, an index CSV and a stacked-curve SVG.

    Radial snapshots have columns r, u; disk snapshots x1, x2, u with the
    pole written once.

    Returns:
        Every written path, index first.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    rows = []
    for k, state in enumerate(states):
        path = out_dir / f"{stem}_{k:04d}.csv"
        if isinstance(state.base, RadialProfile):
            write_columns_csv(path, {"r": state.base.r, "u": state.values})
        else:
            x1, x2 = state.base.cartesian()
            write_columns_csv(
                path,
                {
                    "x1": np.concatenate([[0.0], x1[1:].ravel()]),
                    "x2": np.concatenate([[0.0], x2[1:].ravel()]),
                    "u": state.base.vector,
                },
            )
        written.append(path)
        rows.append((k, state.time, path.name))
    index = write_csv(out_dir / f"{stem}_index.csv", ["index", "time", "file"], rows)
    written.insert(0, index)
    if svg and states and all(state.radial for state in states):
        curves = [(state.base.r, state.values, f"t={state.time:.3g}") for state in states]
        written.append(
            write_curves_svg(
                out_dir / f"{stem}.svg", curves, xlabel="r", ylabel="u", title=f"{stem} snapshots"
            )
        )
    logger.info("Trajectory written", directory=str(out_dir), snapshots=len(states))
    return written
