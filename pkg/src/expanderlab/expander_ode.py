"""Rotational and one-dimensional self-expander profiles.

A rotational graph x_{n+1} = u(|x|) over R^n is a self-expander exactly when

    𝓙u = u_rr/(1+u_r²) + ((n−1)/r)u_r + (r/2)u_r − u/2 = 0,

with u′(0) = 0 and slope κ at infinity. The family φ_{κ,R} solves this on
[0, R] with u(R) = κR and is sandwiched by the barriers κr and κr + K/r;
n = 1 gives the curve equation with the barrier κy + (τ/y)e^{−y²/4}.

Besides the solvers, this module certifies on solved profiles:
- the entire-limit bound 0 ≤ u − κr ≤ ((n+1)κ+2)·min{1, 1/r},
- the asymptotic constant lim r(u − κr) = (n−1)κ,
- the traced Simons identity ΔH + ½⟨X,∇H⟩ + (½+|A|²)H = 0,
- the radial monotonicity identity for ρ^{−n}·Area(S∩B_ρ).
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import asdict, dataclass
import math
from pathlib import Path

import numpy as np
from scipy import optimize
from scipy.interpolate import CubicSpline
import structlog

from .exceptions import (
    BarrierViolationError,
    ConvergenceError,
    DomainError,
    FitError,
    StencilError,
)
from .export import write_columns_csv, write_curves_svg
from .numerics_core import (
    Grid1D,
    NewtonResult,
    QuasilinearBVP,
    centered_derivatives,
    graph_diffusion,
    graph_diffusion_slope,
    integrate,
    rounding_tolerance,
    sphere_volume,
)
from .reports import CertificateReport
from .utils.retry import solve_with_continuation

logger = structlog.get_logger(__name__)


# =============================================================================
# PROFILES AND BARRIERS
# =============================================================================


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """A sampled radial solution u(r).

    Attributes:
        n: Hypersurface dimension (1 selects the curve equation).
        kappa: Asymptotic slope κ (0 for profiles without a cone at infinity).
        R: Outer radius of the solve.
        grid: Radial abscissae; starts at 0 (symmetric origin) or at −R
            for full-line curve solves.
        values: u at every node, read-only.
        equation: Which equation produced the profile.
        iterations: Newton steps of the producing solve.
        residual_norm: Final Newton residual.
    """

    n: int
    kappa: float
    R: float
    grid: Grid1D
    values: np.ndarray
    equation: str = "expander"
    iterations: int = 0
    residual_norm: float = 0.0

    def __post_init__(self) -> None:
        """Validate and freeze the sampled values."""
        if self.n < 1:
            msg = f"n must be at least 1, got {self.n}"
            raise ValueError(msg)
        if self.kappa < 0:
            msg = f"kappa must be nonnegative, got {self.kappa}"
            raise ValueError(msg)
        if not self.R > 0:
            msg = f"R must be positive, got {self.R}"
            raise ValueError(msg)
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.nodes.shape:
            msg = "values must have one entry per grid node"
            raise ValueError(msg)
        if not np.all(np.isfinite(values)):
            msg = "profile values must be finite"
            raise ValueError(msg)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def r(self) -> np.ndarray:
        """Radial nodes."""
        return self.grid.nodes

    @property
    def h(self) -> float:
        """Uniform grid step."""
        return self.grid.step

    @property
    def symmetric(self) -> bool:
        """Whether the first node is the symmetric origin."""
        return bool(self.grid.nodes[0] == 0.0)

    def derivatives(self) -> tuple[np.ndarray, np.ndarray]:
        """Second-order (u_r, u_rr) at every node."""
        return centered_derivatives(self.values, self.h, symmetric_left=self.symmetric)

    def curvatures(self) -> tuple[np.ndarray, np.ndarray]:
        """Mean curvature H and |A|² of the rotational graph at every node.

        The principal curvatures are u_rr/W^{3/2} (once) and u_r/(r√W)
        (n−1 times), W = 1 + u_r²; at the origin both equal u_rr(0).
        """
        p, q = self.derivatives()
        return rotational_curvatures(self.n, self.r, p, q)

    def spline(self) -> CubicSpline:
        """C² interpolant, clamped to u′(0) = 0 at a symmetric origin."""
        bc = ((1, 0.0), "not-a-knot") if self.symmetric else "not-a-knot"
        return CubicSpline(self.r, self.values, bc_type=bc)

    def with_values(self, values: np.ndarray, **changes: object) -> RadialProfile:
        """Copy with new sampled values on the same grid."""
        fields = {
            "n": self.n,
            "kappa": self.kappa,
            "R": self.R,
            "grid": self.grid,
            "equation": self.equation,
            **changes,
        }
        return RadialProfile(values=values, **fields)  # type: ignore[arg-type]


def rotational_curvatures(
    n: int, r: np.ndarray, p: np.ndarray, q: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """H and |A|² of a rotational graph from its radial derivatives.

    Args:
        n: Hypersurface dimension.
        r: Radii.
        p: u_r.
        q: u_rr.

    Returns:
        (H, |A|²) arrays.
    """
    w = 1.0 + p * p
    k1 = q / w**1.5
    if n == 1:
        return k1, k1 * k1
    k2 = np.empty_like(k1)
    inner = r != 0.0
    k2[inner] = p[inner] / (r[inner] * np.sqrt(w[inner]))
    k2[~inner] = q[~inner]
    return k1 + (n - 1) * k2, k1 * k1 + (n - 1) * k2 * k2


@dataclass(frozen=True)
class BarrierSpec:
    """Constants of the explicit barriers.

    Attributes:
        n: Hypersurface dimension.
        kappa: Asymptotic slope κ.
        K: Rotational barrier constant; for n = 1 the plateau constant 3κ+2.
        tau: Curve barrier constant τ = 2e·max{κ, 2}.
    """

    n: int
    kappa: float
    K: float
    tau: float

    def __post_init__(self) -> None:
        """Validate positivity."""
        if self.n < 1:
            msg = f"n must be at least 1, got {self.n}"
            raise ValueError(msg)
        if not (self.kappa > 0 and self.K > 0 and self.tau > 0):
            msg = "kappa, K and tau must be positive"
            raise ValueError(msg)

    @classmethod
    def for_cone(cls, n: int, kappa: float) -> BarrierSpec:
        """Barrier constants for the cone of slope κ.

        K = 2 + 2κ for n = 2 and K = (n−1)κ for n ≥ 3.

        Args:
            n: Hypersurface dimension.
            kappa: Asymptotic slope.

        Returns:
            The barrier specification.
        """
        if n == 1:
            K = 3.0 * kappa + 2.0
        elif n == 2:
            K = 2.0 + 2.0 * kappa
        else:
            K = (n - 1) * kappa
        return cls(n=n, kappa=kappa, K=K, tau=2.0 * math.e * max(kappa, 2.0))

    def lower(self, r: np.ndarray) -> np.ndarray:
        """Lower barrier κ|r|."""
        return self.kappa * np.abs(r)

    def upper(self, r: np.ndarray) -> np.ndarray:
        """Upper barrier, +∞ where it is singular."""
        y = np.abs(np.asarray(r, dtype=float))
        out = np.full_like(y, np.inf)
        pos = y > 0
        if self.n == 1:
            gap = np.full_like(y, 3.0 * self.kappa + 2.0)
            gap[pos] = np.minimum(self.tau / y[pos] * np.exp(-0.25 * y[pos] ** 2), gap[pos])
            return self.kappa * y + gap
        out[pos] = self.kappa * y[pos] + self.K / y[pos]
        return out

    def entire_bound(self, r: np.ndarray) -> np.ndarray:
        """Bound ((n+1)κ+2)·min{1, 1/r} on u − κr for the entire solution."""
        y = np.abs(np.asarray(r, dtype=float))
        return ((self.n + 1) * self.kappa + 2.0) * np.minimum(1.0, 1.0 / np.maximum(y, 1.0))

    def to_dict(self) -> dict[str, float]:
        """Convert to dictionary."""
        return asdict(self)


# =============================================================================
# DISCRETE OPERATOR
# =============================================================================


def _half_decay(u: np.ndarray) -> np.ndarray:
    return -0.5 * u


def _half_decay_slope(u: np.ndarray) -> np.ndarray:
    return np.full_like(u, -0.5)


def expander_bvp(
    n: int, grid: Grid1D, right_value: float, *, left_value: float | None = None
) -> QuasilinearBVP:
    """Discrete 𝓙 on a grid.

    Args:
        n: Hypersurface dimension.
        grid: Uniform grid starting at 0 (symmetric origin) or at −R.
        right_value: Dirichlet value at the last node.
        left_value: Dirichlet value at the first node of a full-line grid.

    Returns:
        The two-point problem.
    """
    r = grid.nodes
    drift = 0.5 * r
    if r[0] == 0.0:
        drift[1:] += (n - 1) / r[1:]
        return QuasilinearBVP(
            grid=grid,
            diffusion=graph_diffusion,
            diffusion_slope=graph_diffusion_slope,
            drift=drift,
            reaction=_half_decay,
            reaction_slope=_half_decay_slope,
            left="symmetric",
            singular_weight=float(n - 1),
            right_value=right_value,
        )
    if n != 1:
        raise DomainError("n", n, "only the curve equation is solved on a full line")
    return QuasilinearBVP(
        grid=grid,
        diffusion=graph_diffusion,
        diffusion_slope=graph_diffusion_slope,
        drift=drift,
        reaction=_half_decay,
        reaction_slope=_half_decay_slope,
        left="dirichlet",
        left_value=right_value if left_value is None else left_value,
        right_value=right_value,
    )


def residual_J(
    n: int,
    u: RadialProfile | Callable[[float], float],
    r: float,
    *,
    h: float = 1e-3,
) -> float:
    """Evaluate 𝓙u at r with centered second-order differences.

    Args:
        n: Hypersurface dimension.
        u: A solved profile (r must be an interior node) or a callable
            sampled at r and r ± h.
        r: Positive radius.
        h: Stencil width for callables.

    Returns:
        u_rr/(1+u_r²) + ((n−1)/r + r/2)u_r − u/2.

    Raises:
        DomainError: If r ≤ 0 or r is not a node of the profile.
        StencilError: If r is a boundary node or r − h < 0.
    """
    if n < 1:
        raise DomainError("n", n, "dimension must be at least 1")
    if not r > 0:
        raise DomainError("r", r, "radius must be positive")
    if isinstance(u, RadialProfile):
        idx = u.grid.index_of(r)
        if idx == 0 or idx == len(u.grid) - 1:
            raise StencilError(r)
        h = u.h
        um, u0, up = (float(v) for v in u.values[idx - 1 : idx + 2])
        r = float(u.r[idx])
    else:
        if r - h < 0:
            raise StencilError(r)
        um, u0, up = float(u(r - h)), float(u(r)), float(u(r + h))
    p = (up - um) / (2.0 * h)
    q = (up - 2.0 * u0 + um) / h**2
    return q / (1.0 + p * p) + ((n - 1) / r + 0.5 * r) * p - 0.5 * u0


def discrete_residual(profile: RadialProfile) -> float:
    """Infinity norm of the discrete 𝓙 residual at the unknown nodes."""
    bvp = expander_bvp(
        profile.n, profile.grid, float(profile.values[-1]), left_value=float(profile.values[0])
    )
    return float(np.max(np.abs(bvp.residual(profile.values))))


# =============================================================================
# SOLVERS
# =============================================================================


def _solve_family(
    n: int, kappa: float, grid: Grid1D, initial: np.ndarray
) -> tuple[np.ndarray, NewtonResult]:
    """Newton solve of the φ_{κ,R} problem with κ-continuation on retries."""
    R = float(grid.nodes[-1])
    tol = rounding_tolerance(kappa * R, grid.step)

    def attempt(stages: int) -> tuple[np.ndarray, NewtonResult]:
        values, result = expander_bvp(n, grid, kappa * R / stages).solve(
            np.asarray(initial, dtype=float) / stages, tol=tol
        )
        for stage in range(2, stages + 1):
            bvp = expander_bvp(n, grid, kappa * R * stage / stages)
            values, result = bvp.solve(values * stage / (stage - 1), tol=tol)
        return values, result

    return solve_with_continuation(attempt)


def _certify_sandwich(profile: RadialProfile, barrier: BarrierSpec, slack: float) -> None:
    """Raise on the first node leaving κ|r| ≤ u ≤ upper barrier (upper for |r| ≥ 1)."""
    r = profile.r
    u = profile.values
    lower = barrier.lower(r)
    upper = barrier.upper(r)
    bad_lower = u < lower - slack
    bad_upper = (np.abs(r) >= 1.0) & (u > upper + slack)
    bad = np.flatnonzero(bad_lower | bad_upper)
    if bad.size:
        i = int(bad[0])
        raise BarrierViolationError(float(r[i]), float(u[i]), float(lower[i]), float(upper[i]))


def _radial_grid(R: float, grid: Grid1D | None, nodes: int) -> Grid1D:
    if grid is None:
        return Grid1D.uniform(0.0, R, nodes)
    if grid.nodes[0] != 0.0 or not math.isclose(grid.nodes[-1], R, rel_tol=1e-12):
        raise DomainError("grid", (grid.nodes[0], grid.nodes[-1]), f"must cover [0, {R}]")
    return grid


def solve_rotational(
    n: int,
    kappa: float,
    R: float,
    grid: Grid1D | None = None,
    *,
    nodes: int = 4001,
    initial: np.ndarray | None = None,
    barrier_slack: float = 1e-9,
) -> RadialProfile:
    """Solve 𝓙u = 0 on [0, R] with u′(0) = 0 and u(R) = κR.

    Newton starts from the lower barrier κr unless another guess is given.
    The converged profile is checked against κr ≤ u ≤ κr + K/r.

    Args:
        n: Hypersurface dimension (≥ 2).
        kappa: Cone slope κ > 0.
        R: Outer radius (≥ 1).
        grid: Uniform grid on [0, R]; built from ``nodes`` when omitted.
        nodes: Node count for the default grid.
        initial: Full-length initial guess.
        barrier_slack: Absolute slack of the sandwich check.

    Returns:
        The solved profile.

    Raises:
        DomainError: On invalid n, κ, R or grid.
        ConvergenceError: If Newton and its continuation retries fail.
        BarrierViolationError: If the converged profile leaves the sandwich.
    """
    if n < 2:
        raise DomainError("n", n, "rotational solves need n >= 2; use solve_1d for curves")
    if not kappa > 0:
        raise DomainError("kappa", kappa, "cone slope must be positive")
    if not R >= 1:
        raise DomainError("R", R, "outer radius must be at least 1")
    grid = _radial_grid(R, grid, nodes)
    guess = kappa * grid.nodes if initial is None else np.asarray(initial, dtype=float)
    values, result = _solve_family(n, kappa, grid, guess)
    profile = RadialProfile(
        n=n,
        kappa=kappa,
        R=R,
        grid=grid,
        values=values,
        iterations=result.iterations,
        residual_norm=result.residual_norm,
    )
    _certify_sandwich(profile, BarrierSpec.for_cone(n, kappa), barrier_slack)
    logger.info(
        "Rotational solve converged",
        n=n,
        kappa=kappa,
        R=R,
        nodes=len(grid),
        iterations=result.iterations,
        residual=result.residual_norm,
    )
    return profile


def solve_1d(
    kappa: float,
    R: float,
    grid: Grid1D | None = None,
    *,
    nodes: int = 2001,
    symmetric: bool = True,
    initial: np.ndarray | None = None,
    barrier_slack: float = 1e-9,
) -> RadialProfile:
    """Solve the curve equation u_yy/(1+u_y²) + (y/2)u_y − u/2 = 0.

    With ``symmetric`` the even reflection u′(0) = 0 is imposed on [0, R];
    otherwise the problem is solved on [−R, R] with u(±R) = κR.

    Args:
        kappa: Slope κ > 0.
        R: Half-width (≥ 2).
        grid: Grid on [0, R] (symmetric) or [−R, R].
        nodes: Node count on [0, R] for the default grid.
        symmetric: Solve on the half line with the reflection condition.
        initial: Full-length initial guess (default κ|y|).
        barrier_slack: Absolute slack of the sandwich check.

    Returns:
        Profile with n = 1.

    Raises:
        DomainError: On invalid κ, R or grid.
        ConvergenceError: If Newton fails.
        BarrierViolationError: If the solution leaves its barriers.
    """
    if not kappa > 0:
        raise DomainError("kappa", kappa, "slope must be positive")
    if not R >= 2:
        raise DomainError("R", R, "half-width must be at least 2")
    if symmetric:
        grid = _radial_grid(R, grid, nodes)
        guess = kappa * grid.nodes if initial is None else initial
        values, result = _solve_family(1, kappa, grid, guess)
    else:
        if grid is None:
            grid = Grid1D.uniform(-R, R, 2 * nodes - 1)
        bvp = expander_bvp(1, grid, kappa * R, left_value=kappa * R)
        tol = rounding_tolerance(kappa * R, grid.step)
        guess = kappa * np.abs(grid.nodes) if initial is None else initial
        values, result = bvp.solve(np.asarray(guess, dtype=float), tol=tol)
    profile = RadialProfile(
        n=1,
        kappa=kappa,
        R=R,
        grid=grid,
        values=values,
        equation="expander-1d",
        iterations=result.iterations,
        residual_norm=result.residual_norm,
    )
    _certify_sandwich(profile, BarrierSpec.for_cone(1, kappa), barrier_slack)
    logger.info(
        "Curve solve converged",
        kappa=kappa,
        R=R,
        symmetric=symmetric,
        iterations=result.iterations,
        residual=result.residual_norm,
    )
    return profile


# =============================================================================
# CERTIFICATES
# =============================================================================


def profile_certificate(
    profile: RadialProfile,
    *,
    residual_tol: float = 1e-8,
    barrier_slack: float = 1e-9,
    monotone_slack: float = 1e-10,
) -> CertificateReport:
    """Residual, barrier sandwich and monotonicity of a solved profile.

    Args:
        profile: Output of solve_rotational or solve_1d.
        residual_tol: Bound on the discrete residual.
        barrier_slack: Sandwich slack.
        monotone_slack: Allowed decrease between consecutive nodes (|r| increasing).

    Returns:
        The certificate.
    """
    report = CertificateReport(name=f"profile_n{profile.n}_kappa{profile.kappa:g}")
    residual = discrete_residual(profile)
    barrier = BarrierSpec.for_cone(profile.n, profile.kappa)
    r, u = profile.r, profile.values
    half = r >= 0
    gap = u[half] - barrier.lower(r[half])
    upper_gap = barrier.upper(r[half]) - u[half]
    outer = np.abs(r[half]) >= 1.0
    steps = np.diff(u[half])
    report.details.update(
        {
            "residual": residual,
            "min_lower_gap": float(gap.min()),
            "min_upper_gap": float(upper_gap[outer].min()) if outer.any() else math.inf,
            "max_decrease": float(max(0.0, -steps.min())),
            "barrier": barrier.to_dict(),
        }
    )
    report.check(residual <= residual_tol, f"residual {residual:.3e} > {residual_tol:.1e}")
    report.check(gap.min() >= -barrier_slack, "lower barrier κr violated")
    report.check(
        not outer.any() or upper_gap[outer].min() >= -barrier_slack, "upper barrier violated"
    )
    report.check(steps.min() >= -monotone_slack, "profile is not nondecreasing")
    return report


def entire_limit_bounds(
    n: int,
    kappa: float,
    R_list: list[float],
    *,
    step: float = 0.01,
    slack: float = 1e-9,
    min_factor: float = 2.0,
) -> CertificateReport:
    """Certify the R → ∞ behaviour of φ_{κ,R}.

    Every radius is solved with the same grid step so the profiles share the
    nodes of [0, R_list[0]]. Checks: the profiles increase with R on that
    common grid, consecutive sup differences decrease (by at least
    ``min_factor`` per step), and the largest solve obeys
    0 ≤ u − κr ≤ ((n+1)κ+2)·min{1, 1/r}.

    Args:
        n: Hypersurface dimension.
        kappa: Cone slope.
        R_list: Increasing radii, at least three, last ≥ 20.
        step: Common grid step.
        slack: Absolute slack for orderings and bounds.
        min_factor: Required reduction factor between consecutive differences.

    Returns:
        The certificate; failing nodes and radii are listed in ``failures``.
    """
    radii = [float(R) for R in R_list]
    if len(radii) < 3 or any(b <= a for a, b in zip(radii, radii[1:], strict=False)):
        raise DomainError("R_list", R_list, "needs at least 3 increasing radii")
    if radii[-1] < 20:
        raise DomainError("R_list", R_list, "largest radius must be at least 20")

    profiles = [solve_rotational(n, kappa, R, nodes=int(round(R / step)) + 1) for R in radii]
    common = int(round(radii[0] / step)) + 1
    report = CertificateReport(name="entire_limit_bounds")
    diffs: list[float] = []
    for k in range(len(radii) - 1):
        a, b = profiles[k], profiles[k + 1]
        delta = b.values[:common] - a.values[:common]
        diffs.append(float(np.max(np.abs(delta))))
        worst = int(np.argmin(delta))
        report.check(
            delta[worst] >= -slack,
            f"phi_R={radii[k + 1]:g} < phi_R={radii[k]:g} "
            f"at r={a.r[worst]:.4g} by {-delta[worst]:.3e}",
        )
    factors = [a / b if b > 0 else math.inf for a, b in zip(diffs, diffs[1:], strict=False)]
    for i, factor in enumerate(factors):
        report.check(factor > 1.0, f"sup difference grew after R={radii[i + 1]:g}")
        report.check(
            factor >= min_factor, f"reduction factor {factor:.3g} < {min_factor:g} at step {i}"
        )

    largest = profiles[-1]
    barrier = BarrierSpec.for_cone(n, kappa)
    gap = largest.values - kappa * largest.r
    bound = barrier.entire_bound(largest.r)
    low = np.flatnonzero(gap < -slack)
    high = np.flatnonzero(gap > bound + slack)
    if low.size:
        report.check(False, f"u - kappa r < 0 at r={largest.r[low[0]]:.4g} (R={radii[-1]:g})")
    if high.size:
        report.check(
            False, f"entire bound exceeded at r={largest.r[high[0]]:.4g} (R={radii[-1]:g})"
        )
    report.details.update(
        {
            "n": n,
            "kappa": kappa,
            "R_list": radii,
            "sup_differences": diffs,
            "reduction_factors": factors,
            "max_gap_ratio": float(np.max(gap / bound)),
        }
    )
    logger.info("Entire-limit certificate", n=n, kappa=kappa, passed=report.passed, diffs=diffs)
    return report


def initial_guess_uniqueness(
    n: int, kappa: float, R: float, *, nodes: int = 2001, tol: float = 1e-8
) -> CertificateReport:
    """Solve from the lower barrier and from an interior guess and compare.

    The interior guess is κr + ½K(1/max(r, 1) − 1/R), which lies inside the
    barrier sandwich and keeps u(R) = κR. Both solves must agree in sup norm.

    Args:
        n: Hypersurface dimension (1 selects the curve equation).
        kappa: Cone slope.
        R: Outer radius.
        nodes: Grid nodes on [0, R].
        tol: Allowed sup-norm gap.

    Returns:
        The certificate with the observed gap.
    """
    grid = Grid1D.uniform(0.0, R, nodes)
    K = BarrierSpec.for_cone(n, kappa).K
    r = grid.nodes
    interior = kappa * r + 0.5 * K * (1.0 / np.maximum(r, 1.0) - 1.0 / R)
    if n == 1:
        base = solve_1d(kappa, R, grid)
        other = solve_1d(kappa, R, grid, initial=interior)
    else:
        base = solve_rotational(n, kappa, R, grid)
        other = solve_rotational(n, kappa, R, grid, initial=interior)
    gap = float(np.max(np.abs(base.values - other.values)))
    report = CertificateReport(name=f"initial_guess_uniqueness n={n} kappa={kappa:g}")
    report.check(gap <= tol, f"solves from two guesses differ by {gap:.3e} > {tol:g}")
    report.details.update({"n": n, "kappa": kappa, "R": R, "sup_gap": gap})
    return report


def asymptotic_constant(
    profile: RadialProfile,
    *,
    window: tuple[float, float] = (0.5, 0.75),
    max_relative_error: float = 0.1,
) -> float:
    """Fitted limit of r·(u(r) − κr).

    Fits r(u − κr) = A + B(r/R)² + C(R/r)² by least squares on the window
    [aR, bR]; the B term absorbs the finite-R tilt −Kr²/R² and the C term the
    next order of the entire solution. Returns A.

    Args:
        profile: Rotational profile with n ≥ 3 and R ≥ 20.
        window: Window as fractions of R.
        max_relative_error: Largest admissible standard error relative to A.

    Returns:
        The fitted constant, ≈ (n−1)κ.

    Raises:
        DomainError: If n < 3, R < 20 or the window holds too few nodes.
        FitError: If the standard error exceeds ``max_relative_error``·|A|.
    """
    if profile.n < 3:
        raise DomainError("n", profile.n, "asymptotic constant needs n >= 3")
    if profile.R < 20:
        raise DomainError("R", profile.R, "asymptotic constant needs R >= 20")
    r = profile.r
    mask = (r >= window[0] * profile.R) & (r <= window[1] * profile.R)
    if mask.sum() < 8:
        raise DomainError("window", window, "fewer than 8 nodes in the fit window")
    rw = r[mask]
    target = rw * (profile.values[mask] - profile.kappa * rw)
    design = np.column_stack([np.ones_like(rw), (rw / profile.R) ** 2, (profile.R / rw) ** 2])
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    resid = target - design @ coef
    dof = max(rw.size - design.shape[1], 1)
    variance = float(resid @ resid) / dof
    cov = variance * np.linalg.inv(design.T @ design)
    value = float(coef[0])
    standard_error = math.sqrt(max(cov[0, 0], 0.0))
    if standard_error > max_relative_error * abs(value) + 1e-14:
        raise FitError(value, standard_error)
    logger.debug(
        "Asymptotic constant fitted",
        n=profile.n,
        kappa=profile.kappa,
        value=value,
        standard_error=standard_error,
    )
    return value


def mean_curvature_identity_residual(
    profile: RadialProfile, *, window: tuple[float, float] = (1.0, 0.75)
) -> float:
    """Sup of ΔH + ½⟨X,∇H⟩ + (½+|A|²)H over an interior window.

    On a rotational graph with W = 1 + u_r²,
    ΔH = [H_rr + (n−1)H_r/r − H_r·W_r/(2W)]/W and ⟨X,∇H⟩ = H_r(r + u·u_r)/W.
    H and its radial derivatives all come from second-order stencils, so the
    residual of a discrete solution is O(h²).

    Args:
        profile: Solved profile.
        window: (smallest radius, largest radius as a fraction of R).

    Returns:
        Sup of the absolute residual.

    Raises:
        DomainError: If the window contains no fully interior node.
    """
    r = profile.r
    u = profile.values
    h = profile.h
    p, q = profile.derivatives()
    H, A_sq = profile.curvatures()
    Hr, Hrr = centered_derivatives(H, h, symmetric_left=profile.symmetric)
    w = 1.0 + p * p
    w_r = 2.0 * p * q
    idx = np.arange(r.size)
    mask = (np.abs(r) >= window[0]) & (np.abs(r) <= window[1] * profile.R)
    mask &= (idx >= 2) & (idx <= r.size - 3)
    if not mask.any():
        raise DomainError("window", window, "no interior node in the identity window")
    rr = r[mask]
    lap = (Hrr[mask] + (profile.n - 1) * Hr[mask] / rr - Hr[mask] * w_r[mask] / (2.0 * w[mask]))
    lap = lap / w[mask]
    position_drift = Hr[mask] * (rr + u[mask] * p[mask]) / w[mask]
    residual = lap + 0.5 * position_drift + (0.5 + A_sq[mask]) * H[mask]
    return float(np.max(np.abs(residual)))


def expander_mean_curvature_residual(
    profile: RadialProfile, *, window: tuple[float, float] = (0.0, 0.75)
) -> float:
    """Sup of |H − ⟨X,ν⟩/2| with ⟨X,ν⟩ = (u − r·u_r)/√(1+u_r²).

    Args:
        profile: Solved profile.
        window: (smallest |r|, largest |r| as a fraction of R).

    Returns:
        Sup over interior nodes of the window.
    """
    r = profile.r
    p, _ = profile.derivatives()
    H, _ = profile.curvatures()
    support = (profile.values - r * p) / np.sqrt(1.0 + p * p)
    idx = np.arange(r.size)
    mask = (np.abs(r) >= window[0]) & (np.abs(r) <= window[1] * profile.R)
    mask &= idx <= r.size - 2
    if not profile.symmetric:
        mask &= idx >= 1
    return float(np.max(np.abs(H[mask] - 0.5 * support[mask])))


@dataclass(frozen=True)
class DecayFit:
    """Empirical decay of the gap u − κy of a curve profile.

    The fit is log(u − κy) = c + power·log y + rate·y². The barrier has
    power −1 and rate −1/4.

    Attributes:
        power: Fitted power of y.
        rate: Fitted Gaussian rate.
        window: (first, last) abscissa of the fitted window.
        points: Nodes used.
    """

    power: float
    rate: float
    window: tuple[float, float]
    points: int

    def to_dict(self) -> dict[str, object]:
        """Convert to dictionary."""
        return asdict(self)


def fit_decay_order(profile: RadialProfile, *, start: float = 1.0) -> DecayFit:
    """Fit the observed decay of u − κy for an n = 1 profile.

    Uses nodes y ≥ ``start`` where the gap is well above rounding.

    Args:
        profile: Curve profile (n = 1).
        start: Smallest abscissa used.

    Returns:
        The fitted exponents (recorded, not asserted).

    Raises:
        DomainError: If the profile is not a curve or too few nodes qualify.
    """
    if profile.n != 1:
        raise DomainError("n", profile.n, "decay fit applies to the curve equation only")
    y = profile.r
    gap = profile.values - profile.kappa * y
    floor = 1e3 * np.finfo(float).eps * np.maximum(1.0, np.abs(profile.values))
    mask = (y >= start) & (y <= 0.75 * profile.R) & (gap > floor)
    if mask.sum() < 5:
        raise DomainError("profile", profile.R, "too few nodes above rounding for a decay fit")
    yw = y[mask]
    design = np.column_stack([np.ones_like(yw), np.log(yw), yw**2])
    coef, *_ = np.linalg.lstsq(design, np.log(gap[mask]), rcond=None)
    fit = DecayFit(
        power=float(coef[1]),
        rate=float(coef[2]),
        window=(float(yw[0]), float(yw[-1])),
        points=int(mask.sum()),
    )
    logger.info("Curve decay fitted", kappa=profile.kappa, power=fit.power, rate=fit.rate)
    return fit


# =============================================================================
# MONOTONICITY IDENTITY
# =============================================================================


class _RotationalSurface:
    """Radial integrals over S ∩ B_ρ for a rotational graph."""

    def __init__(self, profile: RadialProfile) -> None:
        self.n = profile.n
        self.u = profile.spline()
        self.du = self.u.derivative()
        self.r_max = float(profile.r[-1])
        self.x_max = math.hypot(self.r_max, float(profile.values[-1]))
        self.factor = 2.0 if profile.n == 1 else sphere_volume(profile.n - 1)

    def cut_radius(self, rho: float) -> float:
        """Radius r_ρ with r² + u(r)² = ρ²; 0 when the ball misses the graph."""

        def g(r: float) -> float:
            return r * r + float(self.u(r)) ** 2 - rho * rho

        if g(0.0) >= 0.0:
            return 0.0
        if g(self.r_max) < 0.0:
            raise DomainError("rho", rho, "ball extends past the solved region")
        try:
            return float(optimize.brentq(g, 0.0, self.r_max, xtol=1e-14, rtol=4e-16))
        except (RuntimeError, ValueError) as e:
            raise ConvergenceError(
                f"cut radius for rho={rho}: {e}", iterations=0, residual_norm=math.nan
            ) from None

    def _integrand(self, kind: str) -> Callable[[float], float]:
        n = self.n

        def f(r: float) -> float:
            u = float(self.u(r))
            p = float(self.du(r))
            w = 1.0 + p * p
            jac = r ** (n - 1) * math.sqrt(w)
            if kind == "area":
                return jac
            normal_sq = (u - r * p) ** 2 / w
            if kind == "normal":
                return jac * normal_sq
            return jac * normal_sq / (r * r + u * u) ** (0.5 * (n + 2))

        return f

    def integral(self, kind: str, rho: float) -> float:
        """|S^{n−1}|·∫₀^{r_ρ} of the named integrand (area, normal, weighted)."""
        top = self.cut_radius(rho)
        if top == 0.0:
            return 0.0
        return self.factor * integrate(self._integrand(kind), 0.0, top, tol=1e-11, limit=1000).value

    def mismatch(self, rho: float, delta: float) -> tuple[float, float]:
        """Both sides of the monotonicity identity at ρ with difference step δ."""
        n = self.n

        def scaled_area(x: float) -> float:
            return x ** (-n) * self.integral("area", x)

        lhs = (scaled_area(rho + delta) - scaled_area(rho - delta)) / (2.0 * delta)
        dq = (self.integral("weighted", rho + delta) - self.integral("weighted", rho - delta)) / (
            2.0 * delta
        )
        rhs = dq + 0.5 * rho ** (-n - 1) * self.integral("normal", rho)
        return lhs, rhs


def monotonicity_identity_check(
    profile: RadialProfile,
    rho_list: list[float],
    *,
    delta_rho: float = 1e-2,
    tol: float = 1e-4,
    refinement_step: float | None = None,
    min_reduction: float = 3.0,
) -> CertificateReport:
    """Compare both sides of the radial monotonicity identity.

    d/dρ(ρ^{−n}A(ρ)) = d/dρ∫|X^N|²/|X|^{n+2} + ½ρ^{−n−1}∫|X^N|²
    (integrals over S ∩ B_ρ),
    with A(ρ) the area of S ∩ B_ρ. All integrals reduce to radial quadratures
    up to the cut radius; ρ-derivatives are centered differences.

    Args:
        profile: Solved profile.
        rho_list: Ball radii, each in (1, max|X|).
        delta_rho: Difference step for the mismatch.
        tol: Bound on the maximum mismatch.
        refinement_step: When given, mismatches at this step and half of it
            are compared and must shrink by ``min_reduction``.
        min_reduction: Required refinement factor.

    Returns:
        Certificate with per-ρ sides and mismatches.

    Raises:
        DomainError: If a radius is outside (1, max|X|).
        ConvergenceError: If a cut radius cannot be bracketed.
    """
    surface = _RotationalSurface(profile)
    report = CertificateReport(name="monotonicity_identity")
    rows: list[dict[str, float]] = []
    largest_step = max(delta_rho, refinement_step or 0.0)
    for rho in rho_list:
        if not (1.0 < rho and rho + largest_step < surface.x_max):
            raise DomainError("rho", rho, f"must lie in (1, {surface.x_max:.6g})")
        lhs, rhs = surface.mismatch(rho, delta_rho)
        row = {"rho": float(rho), "lhs": lhs, "rhs": rhs, "mismatch": abs(lhs - rhs)}
        if refinement_step is not None:
            coarse = abs(np.subtract(*surface.mismatch(rho, refinement_step)))
            fine = abs(np.subtract(*surface.mismatch(rho, 0.5 * refinement_step)))
            row["coarse_mismatch"] = float(coarse)
            row["fine_mismatch"] = float(fine)
            if coarse > 1e-9:
                ratio = float(coarse / fine) if fine > 0 else math.inf
                row["reduction"] = ratio
                report.check(
                    ratio >= min_reduction,
                    f"rho={rho:g}: refinement reduction {ratio:.3g} < {min_reduction:g}",
                )
        report.check(
            row["mismatch"] <= tol, f"rho={rho:g}: mismatch {row['mismatch']:.3e} > {tol:.1e}"
        )
        rows.append(row)
    report.details["rows"] = rows
    report.details["max_mismatch"] = max((row["mismatch"] for row in rows), default=0.0)
    return report


# =============================================================================
# EXPORT
# =============================================================================


def write_profile_csv(profile: RadialProfile, path: Path) -> Path:
    """Write columns r, u, u_r, H, |A|² of a profile.

    Args:
        profile: Profile to export.
        path: Destination CSV.

    Returns:
        The written path.
    """
    p, _ = profile.derivatives()
    H, A_sq = profile.curvatures()
    return write_columns_csv(
        path, {"r": profile.r, "u": profile.values, "u_r": p, "H": H, "A_sq": A_sq}
    )


def write_profile_svg(profile: RadialProfile, path: Path) -> Path:
    """Plot the profile between its barriers."""
    barrier = BarrierSpec.for_cone(profile.n, profile.kappa) if profile.kappa > 0 else None
    curves = [(profile.r, profile.values, "u")]
    if barrier is not None:
        r = profile.r
        upper = barrier.upper(r)
        shown = np.isfinite(upper) & (upper <= profile.values.max() * 1.5 + 1.0)
        curves.append((r, barrier.lower(r), "lower barrier"))
        curves.append((r[shown], upper[shown], "upper barrier"))
    return write_curves_svg(
        path,
        curves,
        xlabel="r",
        ylabel="u",
        title=f"{profile.equation} n={profile.n} kappa={profile.kappa:g}",
    )
