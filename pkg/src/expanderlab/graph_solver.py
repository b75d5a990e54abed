"""Graphic self-expanders over disks and the latitude band problem.

The disk solver treats the Dirichlet problem

    g^{ij}u_ij + ½x·Du − ½u = 0 on B_R,  u = V on ∂B_R,
    g^{ij} = δ_ij − u_iu_j/(1+|Du|²),

for 1-homogeneous Lipschitz boundary data V(x) = |x|·g(θ). The disk is
sampled on a polar grid: second-order differences in r, Fourier
differentiation in θ, and a single pole node with an eight-direction
Cartesian stencil. Rotational data therefore reproduce the radial solver of
``expander_ode`` node for node.

The latitude solver handles the log-radial graph problem on a rotational
band of S^n, reduced to one latitude variable θ:

    F''/(1+F'²) + (n−1)cot θ·F' − e^{2F}/(2ε²) = n,  F(θ₁) = F(θ₂) = 0.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, replace
from functools import lru_cache
import math
from pathlib import Path

import numpy as np
from scipy import fft, sparse
from scipy import integrate as sp_integrate
from scipy.interpolate import CubicSpline
import structlog

from .exceptions import BarrierViolationError, DomainError
from .export import write_columns_csv, write_contour_svg, write_curves_svg
from .expander_ode import RadialProfile, solve_rotational
from .numerics_core import (
    Grid1D,
    NewtonResult,
    QuasilinearBVP,
    centered_derivatives,
    graph_diffusion,
    graph_diffusion_slope,
    integrate,
    linear_solve,
    newton_damped,
    rounding_tolerance,
    sphere_volume,
)
from .reports import CertificateReport
from .utils.retry import solve_with_continuation

logger = structlog.get_logger(__name__)

# Frozen-coefficient sweeps run until the residual drops below this, then Newton
PICARD_SWITCH = 1e-2
PICARD_MAX_SWEEPS = 50

# Drift and zeroth-order coefficients of the self-expander operator
EXPANDER_DRIFT = 0.5
EXPANDER_DECAY = -0.5

# Above this exponent the weighted area is only reported as a logarithm
LOG_SPACE_THRESHOLD = 700.0


# =============================================================================
# BOUNDARY DATA
# =============================================================================


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """A 1-homogeneous boundary function V(x) = |x|·g(θ).

    Attributes:
        angular: g, evaluated on arrays of angles.
        lipschitz: Declared Lipschitz constant l of V.
        label: Short description used in reports and file names.
    """

    angular: Callable[[np.ndarray], np.ndarray]
    lipschitz: float
    label: str = "custom"

    def __post_init__(self) -> None:
        """Validate the Lipschitz constant."""
        if not (self.lipschitz > 0 and math.isfinite(self.lipschitz)):
            msg = f"lipschitz must be positive and finite, got {self.lipschitz}"
            raise ValueError(msg)

    def __call__(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        """Evaluate V at Cartesian points."""
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        return np.hypot(x1, x2) * self.angular(np.arctan2(x2, x1))

    def on_circle(self, theta: np.ndarray) -> np.ndarray:
        """g(θ), the restriction to the unit circle."""
        return np.asarray(self.angular(np.asarray(theta, dtype=float)), dtype=float)

    @classmethod
    def cone(cls, kappa: float) -> BoundaryData:
        """Rotational data V(x) = κ|x|."""
        return cls(
            lambda t: np.full_like(t, kappa, dtype=float), max(kappa, 1e-12), f"cone{kappa:g}"
        )

    @classmethod
    def linear(cls, a1: float, a2: float) -> BoundaryData:
        """Affine data V(x) = a·x, solved exactly by the hyperplane."""
        return cls(
            lambda t: a1 * np.cos(t) + a2 * np.sin(t),
            max(math.hypot(a1, a2), 1e-12),
            f"linear{a1:g}_{a2:g}",
        )

    @classmethod
    def abs_x1(cls) -> BoundaryData:
        """V(x) = |x₁|, even under x₁ ↦ −x₁."""
        return cls(lambda t: np.abs(np.cos(t)), 1.0, "abs_x1")

    @classmethod
    def max_blend(cls) -> BoundaryData:
        """V(x) = max(x₁, ½|x|)."""
        return cls(lambda t: np.maximum(np.cos(t), 0.5), 1.0, "max_blend")

    @classmethod
    def from_function(
        cls, V: Callable[[np.ndarray, np.ndarray], np.ndarray], lipschitz: float, label: str = ""
    ) -> BoundaryData:
        """Wrap V(x₁, x₂) given on the unit circle; it is extended homogeneously."""
        return cls(lambda t: V(np.cos(t), np.sin(t)), lipschitz, label or "custom")

    def estimate_lipschitz(self, samples: int = 4096) -> float:
        """max √(g² + g′²) over sampled angles, the Lipschitz constant of V."""
        theta = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
        g = self.on_circle(theta)
        h = theta[1] - theta[0]
        slope = (np.roll(g, -1) - np.roll(g, 1)) / (2.0 * h)
        return float(np.max(np.hypot(g, slope)))

    def check_lipschitz(self, samples: int = 2000, seed: int = 0) -> None:
        """Sample point pairs and verify |V(x) − V(y)| ≤ l·|x − y|.

        Raises:
            DomainError: If a sampled pair violates the declared constant.
        """
        rng = np.random.default_rng(seed)
        radius = rng.uniform(0.1, 1.0, size=(2, samples))
        theta = rng.uniform(0.0, 2.0 * np.pi, size=(2, samples))
        # Nearby pairs resolve the local slope, far pairs the global one
        theta[1, : samples // 2] = theta[0, : samples // 2] + rng.normal(0.0, 1e-3, samples // 2)
        radius[1, : samples // 2] = radius[0, : samples // 2]
        x1, x2 = radius * np.cos(theta), radius * np.sin(theta)
        values = self(x1, x2)
        gap = np.abs(values[0] - values[1])
        dist = np.hypot(x1[0] - x1[1], x2[0] - x2[1])
        excess = gap - self.lipschitz * dist * (1.0 + 1e-6) - 1e-12
        worst = int(np.argmax(excess))
        if excess[worst] > 0:
            raise DomainError(
                "lipschitz",
                self.lipschitz,
                f"data {self.label} has slope {gap[worst] / dist[worst]:.6g} at sampled points",
            )


def random_boundary_pair(
    rng: np.random.Generator, *, modes: int = 3
) -> tuple[BoundaryData, BoundaryData]:
    """Draw ordered data V₁ ≤ V₂ for comparison-principle sweeps.

    g₁ is a low-order trigonometric polynomial; V₂ adds δ(θ)·|x| with
    δ = d₀ + d₁cos(θ − φ), d₀ ≥ |d₁|, so δ ≥ 0.

    Args:
        rng: Random generator.
        modes: Number of Fourier modes of g₁.

    Returns:
        (V₁, V₂) with declared Lipschitz constants from their angular samples.
    """
    c0 = rng.uniform(-0.5, 0.5)
    coeffs = rng.normal(0.0, 0.3 / np.arange(1, modes + 1), size=(2, modes))
    d1 = rng.uniform(-0.3, 0.3)
    d0 = abs(d1) + rng.uniform(0.0, 0.3)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    k = np.arange(1, modes + 1)

    def g1(t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)[..., None]
        return c0 + np.sum(coeffs[0] * np.cos(k * t) + coeffs[1] * np.sin(k * t), axis=-1)

    def g2(t: np.ndarray) -> np.ndarray:
        return g1(t) + d0 + d1 * np.cos(np.asarray(t, dtype=float) - phase)

    pair = (BoundaryData(g1, 1.0, "random_lower"), BoundaryData(g2, 1.0, "random_upper"))
    lower, upper = (replace(v, lipschitz=1.05 * v.estimate_lipschitz()) for v in pair)
    return lower, upper


# =============================================================================
# POLAR DISK OPERATOR
# =============================================================================


def _fourier_matrices(M: int) -> tuple[np.ndarray, np.ndarray]:
    """Dense first and second Fourier differentiation matrices on M angles."""
    k = np.arange(M // 2 + 1, dtype=float)
    coeffs = fft.rfft(np.eye(M), axis=0)
    ik = 1j * k
    ik[-1] = 0.0
    first = fft.irfft(ik[:, None] * coeffs, n=M, axis=0)
    second = fft.irfft(-(k**2)[:, None] * coeffs, n=M, axis=0)
    return first, second


class PolarDiskOperator:
    """Discrete derivatives on a polar grid of B_R.

    The node vector is [pole, ring 1, ..., ring N], ring j holding the M
    angles θ_k = 2πk/M at radius r_j. The first ``unknowns`` entries (pole
    and rings 1..N−1) are unknown; ring N carries the Dirichlet data.

    Each frame operator maps the full node vector to a derivative at the
    unknown nodes, expressed in the orthonormal frame (e_r, e_θ) on the
    rings and in Cartesian (e₁, e₂) at the pole:

    - ``p1``, ``p2``: gradient components,
    - ``h11``, ``h12``, ``h22``: Hessian components.
    """

    def __init__(self, radial: Grid1D, angular_nodes: int) -> None:
        """Assemble the sparse frame operators.

        Args:
            radial: Uniform grid on [0, R] with at least 5 nodes.
            angular_nodes: Number of angles M, a positive multiple of 8.

        Raises:
            DomainError: On an unsupported grid.
        """
        if radial.nodes[0] != 0.0 or len(radial) < 5:
            raise DomainError("radial", len(radial), "need a uniform grid on [0, R], >= 5 nodes")
        if angular_nodes < 8 or angular_nodes % 8:
            raise DomainError("angular_nodes", angular_nodes, "must be a positive multiple of 8")
        self.radial = radial
        self.dr = radial.step
        self.N = len(radial) - 1
        self.M = int(angular_nodes)
        self.size = 1 + self.N * self.M
        self.unknowns = 1 + (self.N - 1) * self.M
        self.angles = 2.0 * np.pi * np.arange(self.M) / self.M
        ring_r = np.repeat(radial.nodes[1 : self.N], self.M)
        self.row_r = np.concatenate([[0.0], ring_r])
        self.d_theta, self.d_theta2 = _fourier_matrices(self.M)
        self._build(ring_r)

    def index(self, ring: int, k: int) -> int:
        """Position of node (ring, k) in the node vector (ring ≥ 1)."""
        return 1 + (ring - 1) * self.M + (k % self.M)

    def _pole_row(self, entries: dict[int, float]) -> sparse.csr_matrix:
        cols = list(entries)
        return sparse.csr_matrix(
            (list(entries.values()), ([0] * len(cols), cols)), shape=(1, self.size)
        )

    def _ring_block(
        self, radial: sparse.spmatrix, angular: np.ndarray | sparse.spmatrix, pole: float
    ) -> sparse.csr_matrix:
        body = sparse.kron(radial, sparse.csr_matrix(angular), format="csr")
        pole_col = np.zeros(((self.N - 1) * self.M, 1))
        pole_col[: self.M, 0] = pole
        return sparse.hstack([sparse.csr_matrix(pole_col), body], format="csr")

    def _build(self, ring_r: np.ndarray) -> None:
        N, M, dr = self.N, self.M, self.dr
        up = sparse.eye(N - 1, N, k=1, format="csr")
        mid = sparse.eye(N - 1, N, k=0, format="csr")
        down = sparse.eye(N - 1, N, k=-1, format="csr")
        ident = sparse.identity(M, format="csr")

        d_r = self._ring_block((up - down) / (2.0 * dr), ident, -1.0 / (2.0 * dr))
        d_rr = self._ring_block((up - 2.0 * mid + down) / dr**2, ident, 1.0 / dr**2)
        d_t = self._ring_block(mid, self.d_theta, 0.0)
        d_tt = self._ring_block(mid, self.d_theta2, 0.0)
        d_rt = self._ring_block((up - down) / (2.0 * dr), self.d_theta, 0.0)
        inv_r = sparse.diags(1.0 / ring_r)
        inv_r2 = sparse.diags(1.0 / ring_r**2)

        i = self.index
        half, quarter, eighth = M // 2, M // 4, M // 8
        ux = self._pole_row({i(1, 0): 0.5 / dr, i(1, half): -0.5 / dr})
        uy = self._pole_row({i(1, quarter): 0.5 / dr, i(1, 3 * quarter): -0.5 / dr})
        uxx = self._pole_row({i(1, 0): 1.0 / dr**2, i(1, half): 1.0 / dr**2, 0: -2.0 / dr**2})
        uyy = self._pole_row(
            {i(1, quarter): 1.0 / dr**2, i(1, 3 * quarter): 1.0 / dr**2, 0: -2.0 / dr**2}
        )
        uxy = self._pole_row(
            {
                i(1, eighth): 0.5 / dr**2,
                i(1, 3 * eighth): -0.5 / dr**2,
                i(1, 5 * eighth): 0.5 / dr**2,
                i(1, 7 * eighth): -0.5 / dr**2,
            }
        )

        self.p1 = sparse.vstack([ux, d_r], format="csr")
        self.p2 = sparse.vstack([uy, inv_r @ d_t], format="csr")
        self.h11 = sparse.vstack([uxx, d_rr], format="csr")
        self.h12 = sparse.vstack([uxy, inv_r @ d_rt - inv_r2 @ d_t], format="csr")
        self.h22 = sparse.vstack([uyy, inv_r2 @ d_tt + inv_r @ d_r], format="csr")
        self.select = sparse.eye(self.unknowns, self.size, format="csr")

    # -- node vectors ---------------------------------------------------------

    def flatten(self, values: np.ndarray) -> np.ndarray:
        """(N+1, M) array (pole row repeated) to the node vector."""
        values = np.asarray(values, dtype=float)
        return np.concatenate([[values[0, 0]], values[1:].ravel()])

    def unflatten(self, vector: np.ndarray) -> np.ndarray:
        """Node vector to an (N+1, M) array with the pole row repeated."""
        rings = np.asarray(vector, dtype=float)[1:].reshape(self.N, self.M)
        return np.vstack([np.full(self.M, vector[0]), rings])

    def sample(self, boundary: BoundaryData) -> np.ndarray:
        """Node vector of V, the initial guess and the Dirichlet data."""
        r = self.radial.nodes
        g = boundary.on_circle(self.angles)
        values = r[:, None] * g[None, :]
        values[0] = 0.0
        return self.flatten(values)

    # -- operator ---------------------------------------------------------------

    def frame(self, u: np.ndarray) -> tuple[np.ndarray, ...]:
        """(p1, p2, h11, h12, h22) at the unknown nodes."""
        return self.p1 @ u, self.p2 @ u, self.h11 @ u, self.h12 @ u, self.h22 @ u

    def residual(
        self, u: np.ndarray, alpha: float, beta: float, source: np.ndarray | None = None
    ) -> np.ndarray:
        """g^{ij}u_ij + α·x·Du + β·u (+ source) at the unknown nodes."""
        p1, p2, h11, h12, h22 = self.frame(u)
        w = 1.0 + p1 * p1 + p2 * p2
        hess_pp = p1 * p1 * h11 + 2.0 * p1 * p2 * h12 + p2 * p2 * h22
        out = h11 + h22 - hess_pp / w + alpha * self.row_r * p1 + beta * u[: self.unknowns]
        if source is not None:
            out = out + source
        return out

    def jacobian(self, u: np.ndarray, alpha: float, beta: float) -> sparse.csr_matrix:
        """Derivative of ``residual`` with respect to the full node vector."""
        p1, p2, h11, h12, h22 = self.frame(u)
        w = 1.0 + p1 * p1 + p2 * p2
        hess_pp = p1 * p1 * h11 + 2.0 * p1 * p2 * h12 + p2 * p2 * h22
        f_p1 = -2.0 * (p1 * h11 + p2 * h12) / w + 2.0 * p1 * hess_pp / w**2
        f_p2 = -2.0 * (p2 * h22 + p1 * h12) / w + 2.0 * p2 * hess_pp / w**2
        diag = sparse.diags
        return (
            diag(1.0 - p1 * p1 / w) @ self.h11
            + diag(-2.0 * p1 * p2 / w) @ self.h12
            + diag(1.0 - p2 * p2 / w) @ self.h22
            + diag(f_p1 + alpha * self.row_r) @ self.p1
            + diag(f_p2) @ self.p2
            + beta * self.select
        ).tocsr()

    def frozen_matrix(self, u: np.ndarray, alpha: float, beta: float) -> sparse.csr_matrix:
        """Linear operator with g^{ij} frozen at u; residual(u) = frozen(u)·u."""
        p1, p2 = self.p1 @ u, self.p2 @ u
        w = 1.0 + p1 * p1 + p2 * p2
        diag = sparse.diags
        return (
            diag(1.0 - p1 * p1 / w) @ self.h11
            + diag(-2.0 * p1 * p2 / w) @ self.h12
            + diag(1.0 - p2 * p2 / w) @ self.h22
            + diag(alpha * self.row_r) @ self.p1
            + beta * self.select
        ).tocsr()

    def gradient_squared(self, u: np.ndarray) -> np.ndarray:
        """|Du|² at every node as an (N+1, M) array.

        The boundary ring uses a one-sided second-order radial difference.
        """
        p1, p2 = self.p1 @ u, self.p2 @ u
        grad = p1 * p1 + p2 * p2
        rings = self.unflatten(u)
        u_r = (3.0 * rings[-1] - 4.0 * rings[-2] + rings[-3]) / (2.0 * self.dr)
        u_t = self.d_theta @ rings[-1] / self.radial.nodes[-1]
        out = np.empty((self.N + 1, self.M))
        out[0] = grad[0]
        out[1 : self.N] = grad[1:].reshape(self.N - 1, self.M)
        out[self.N] = u_r**2 + u_t**2
        return out

    def solve(
        self,
        initial: np.ndarray,
        *,
        alpha: float,
        beta: float,
        tol: float,
        source: np.ndarray | None = None,
        picard_switch: float = PICARD_SWITCH,
        max_sweeps: int = PICARD_MAX_SWEEPS,
    ) -> tuple[np.ndarray, NewtonResult, int]:
        """Frozen-coefficient sweeps, then damped Newton, with fixed ring N.

        Args:
            initial: Full node vector; its ring-N entries are the boundary data.
            alpha: Coefficient of x·Du.
            beta: Coefficient of u.
            tol: Newton residual tolerance.
            source: Optional additive term at the unknown nodes.
            picard_switch: Residual below which Newton takes over.
            max_sweeps: Sweep limit before handing over regardless.

        Returns:
            (solution node vector, Newton diagnostics, sweeps taken).

        Raises:
            ConvergenceError: If Newton fails.
            PivotError: If a linear system is singular.
        """
        U = self.unknowns
        u = np.asarray(initial, dtype=float).copy()
        extra = np.zeros(U) if source is None else np.asarray(source, dtype=float)
        sweeps = 0
        while sweeps < max_sweeps:
            norm = float(np.max(np.abs(self.residual(u, alpha, beta, extra))))
            if norm <= picard_switch:
                break
            frozen = self.frozen_matrix(u, alpha, beta).tocsc()
            rhs = -(frozen[:, U:] @ u[U:]) - extra
            u[:U] = linear_solve(frozen[:, :U], rhs)
            sweeps += 1
        boundary = u[U:].copy()

        def residual_and_jacobian(x: np.ndarray) -> tuple[np.ndarray, sparse.csc_matrix]:
            full = np.concatenate([x, boundary])
            return (
                self.residual(full, alpha, beta, extra),
                self.jacobian(full, alpha, beta).tocsc()[:, :U],
            )

        result = newton_damped(residual_and_jacobian, u[:U], tol=tol)
        return np.concatenate([result.solution, boundary]), result, sweeps


@lru_cache(maxsize=8)
def polar_operator(R: float, radial_nodes: int, angular_nodes: int) -> PolarDiskOperator:
    """Shared operator for a uniform polar grid of B_R."""
    return PolarDiskOperator(Grid1D.uniform(0.0, R, radial_nodes), angular_nodes)


# =============================================================================
# DISK DIRICHLET PROBLEM
# =============================================================================


@dataclass(frozen=True, eq=False)
class GraphField:
    """A solved graph u over B_R on a polar grid.

    Attributes:
        R: Disk radius.
        radial: Radial grid on [0, R].
        angles: The M sample angles.
        values: u as an (N+1, M) array; row 0 is the pole, repeated.
        boundary: Boundary data V.
        n: Base dimension (always 2).
        iterations: Newton steps of the final stage.
        sweeps: Frozen-coefficient sweeps of the final stage.
        residual_norm: Final residual.
    """

    R: float
    radial: Grid1D
    angles: np.ndarray
    values: np.ndarray
    boundary: BoundaryData
    n: int = 2
    iterations: int = 0
    sweeps: int = 0
    residual_norm: float = 0.0

    def __post_init__(self) -> None:
        """Validate the sample shape and freeze it."""
        values = np.array(self.values, dtype=float)
        if values.shape != (len(self.radial), len(self.angles)):
            msg = "values must be shaped (radial nodes, angles)"
            raise ValueError(msg)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def operator(self) -> PolarDiskOperator:
        """Disk operator on this field's grid."""
        return polar_operator(self.R, len(self.radial), len(self.angles))

    @property
    def vector(self) -> np.ndarray:
        """Values as a node vector."""
        return np.concatenate([[self.values[0, 0]], self.values[1:].ravel()])

    def cartesian(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates (x₁, x₂) as (N+1, M) arrays."""
        r = self.radial.nodes[:, None]
        return r * np.cos(self.angles)[None, :], r * np.sin(self.angles)[None, :]

    def boundary_values(self) -> np.ndarray:
        """V sampled at every node."""
        return self.boundary(*self.cartesian())


def disk_residual(field: GraphField) -> float:
    """Infinity norm of the expander residual at the interior nodes."""
    return float(
        np.max(np.abs(field.operator.residual(field.vector, EXPANDER_DRIFT, EXPANDER_DECAY)))
    )


def solve_dirichlet_disk(
    boundary: BoundaryData,
    R: float,
    *,
    radial_nodes: int = 201,
    angular_nodes: int = 32,
    tol: float = 1e-9,
    check_lipschitz: bool = True,
) -> GraphField:
    """Solve the self-expander Dirichlet problem on B_R.

    The boundary data V serves as the initial guess. Frozen-coefficient sweeps
    run until the residual is below 1e-2 and Newton finishes; a failing
    Newton solve is retried with the data ramped in stages.

    Args:
        boundary: 1-homogeneous data with its Lipschitz constant.
        R: Disk radius.
        radial_nodes: Nodes on [0, R].
        angular_nodes: Angles per ring, a multiple of 8.
        tol: Residual tolerance (raised to the rounding floor of the grid).
        check_lipschitz: Sample V against its declared constant first.

    Returns:
        The solved field.

    Raises:
        DomainError: On invalid R, grid or Lipschitz constant.
        ConvergenceError: If every continuation attempt fails.
    """
    if not R > 0:
        raise DomainError("R", R, "disk radius must be positive")
    if check_lipschitz:
        boundary.check_lipschitz()
    op = polar_operator(R, radial_nodes, angular_nodes)
    radial = op.radial
    target = op.sample(boundary)
    tol = max(tol, rounding_tolerance(float(np.max(np.abs(target))), op.dr))

    def attempt(stages: int) -> tuple[np.ndarray, NewtonResult, int]:
        u = target / stages
        out = (u, NewtonResult(u[: op.unknowns], 0, 0.0), 0)
        for stage in range(1, stages + 1):
            guess = np.concatenate([u[: op.unknowns], target[op.unknowns :] * stage / stages])
            out = op.solve(guess, alpha=EXPANDER_DRIFT, beta=EXPANDER_DECAY, tol=tol)
            u = out[0] * (stage + 1) / stage
        return out

    solution, result, sweeps = solve_with_continuation(attempt)
    field = GraphField(
        R=R,
        radial=radial,
        angles=op.angles,
        values=op.unflatten(solution),
        boundary=boundary,
        iterations=result.iterations,
        sweeps=sweeps,
        residual_norm=result.residual_norm,
    )
    logger.info(
        "Disk Dirichlet solve converged",
        data=boundary.label,
        R=R,
        radial_nodes=radial_nodes,
        angular_nodes=angular_nodes,
        sweeps=sweeps,
        iterations=result.iterations,
        residual=result.residual_norm,
    )
    return field


def symmetry_defect(field: GraphField) -> float:
    """max |u(r, θ) − u(r, π − θ)|, the defect under x₁ ↦ −x₁."""
    M = len(field.angles)
    mirror = (M // 2 - np.arange(M)) % M
    return float(np.max(np.abs(field.values - field.values[:, mirror])))


# =============================================================================
# CERTIFICATES
# =============================================================================


def rotational_consistency(
    kappa: float,
    R: float,
    *,
    radial_nodes: int = 201,
    angular_nodes: int = 32,
    tol: float = 1e-5,
) -> CertificateReport:
    """Compare the disk solve of V = κ|x| with the radial profile on every ray.

    Both solvers share the radial step, so their discrete equations agree.
    """
    field = solve_dirichlet_disk(
        BoundaryData.cone(kappa), R, radial_nodes=radial_nodes, angular_nodes=angular_nodes
    )
    profile = solve_rotational(2, kappa, R, nodes=radial_nodes)
    gap = float(np.max(np.abs(field.values - profile.values[:, None])))
    report = CertificateReport(name=f"rotational_consistency_kappa{kappa:g}")
    report.details.update(
        {"kappa": kappa, "R": R, "max_ray_gap": gap, "tolerance": tol, "rays": angular_nodes}
    )
    report.check(gap <= tol, f"disk and radial solutions differ by {gap:.3e} > {tol:.1e}")
    return report


def linear_exactness_check(
    a1: float,
    a2: float,
    R: float,
    *,
    radial_nodes: int = 101,
    angular_nodes: int = 32,
    tol: float = 1e-10,
) -> CertificateReport:
    """Affine data V(x) = a·x must be reproduced at every node."""
    data = BoundaryData.linear(a1, a2)
    field = solve_dirichlet_disk(data, R, radial_nodes=radial_nodes, angular_nodes=angular_nodes)
    gap = float(np.max(np.abs(field.values - field.boundary_values())))
    report = CertificateReport(name=f"linear_exactness_{data.label}")
    report.details.update({"R": R, "max_gap": gap, "tolerance": tol})
    report.check(gap <= tol, f"hyperplane data reproduced only to {gap:.3e}")
    return report


def uniqueness_estimate_check(field: GraphField, *, slack: float = 0.10) -> CertificateReport:
    """Far-field estimate |u(y) − V(y)|·max{1, |y|} ≤ (n+1)l + 2.

    The maximum is taken over nodes with 2 ≤ |y| ≤ R/2, away from the
    truncation boundary; the bound carries a relative ``slack``.

    Raises:
        DomainError: If R < 10.
    """
    if field.R < 10:
        raise DomainError("R", field.R, "uniqueness estimate needs R >= 10")
    l = field.boundary.lipschitz
    bound = (field.n + 1) * l + 2.0
    r = field.radial.nodes
    window = (r >= 2.0) & (r <= field.R / 2)
    gap = np.abs(field.values - field.boundary_values())
    weighted = gap[window] * np.maximum(1.0, r[window])[:, None]
    observed = float(weighted.max())
    coarse = np.abs(field.values) - (l * r[:, None] + bound)
    report = CertificateReport(name=f"uniqueness_estimate_{field.boundary.label}")
    report.details.update(
        {
            "lipschitz": l,
            "bound": bound,
            "observed": observed,
            "ratio": observed / bound,
            "coarse_excess": float(coarse.max()),
        }
    )
    report.check(
        observed <= bound * (1.0 + slack),
        f"max |u-V|·max(1,|y|) = {observed:.4g} exceeds {bound:g}·{1 + slack:g}",
    )
    report.check(coarse.max() <= 0.0, "|u| exceeds l|x| + (n+1)l + 2")
    return report


def comparison_ordering(
    lower: BoundaryData,
    upper: BoundaryData,
    R: float,
    *,
    radial_nodes: int = 101,
    angular_nodes: int = 32,
    slack: float = 1e-9,
) -> CertificateReport:
    """Solve with ordered data V₁ ≤ V₂ and certify u₁ ≤ u₂ + slack.

    Raises:
        DomainError: If V₁ > V₂ somewhere on the sampled circle.
    """
    theta = np.linspace(0.0, 2.0 * np.pi, 4 * angular_nodes, endpoint=False)
    excess = lower.on_circle(theta) - upper.on_circle(theta)
    if excess.max() > 1e-12:
        raise DomainError(
            "V1", lower.label, f"exceeds V2 on the circle by {excess.max():.3e}"
        )
    kwargs = {"radial_nodes": radial_nodes, "angular_nodes": angular_nodes}
    first = solve_dirichlet_disk(lower, R, **kwargs)
    second = solve_dirichlet_disk(upper, R, **kwargs)
    diff = first.values - second.values
    worst = np.unravel_index(int(np.argmax(diff)), diff.shape)
    report = CertificateReport(name=f"comparison_{lower.label}_{upper.label}")
    report.details.update(
        {
            "R": R,
            "max_u1_minus_u2": float(diff.max()),
            "min_interior_gap": float(-diff[1:-1].max()),
        }
    )
    report.check(
        diff.max() <= slack,
        f"u1 > u2 by {diff.max():.3e} at r={first.radial.nodes[worst[0]]:.4g}, "
        f"theta={first.angles[worst[1]]:.4g}",
    )
    return report


# =============================================================================
# WEIGHTED AREA
# =============================================================================


@dataclass(frozen=True)
class WeightedArea:
    """∫ e^{|X|²/4} dμ, kept as a logarithm.

    Attributes:
        log_value: Natural logarithm of the weighted area.
        log_space: Whether |X|²/4 exceeded the overflow threshold, in which
            case only the logarithm is meaningful.
    """

    log_value: float
    log_space: bool

    @property
    def value(self) -> float:
        """The weighted area, ``inf`` when only the logarithm is representable."""
        return math.exp(self.log_value) if self.log_value < 709.0 else math.inf


def _disk_integrand(field: GraphField, values: np.ndarray, shift: float) -> np.ndarray:
    """e^{|X|²/4 − shift}·√(1+|Du|²)·r at every node."""
    op = field.operator
    r = field.radial.nodes[:, None]
    grad = op.gradient_squared(op.flatten(values))
    exponent = (r**2 + values**2) / 4.0 - shift
    return np.exp(exponent) * np.sqrt(1.0 + grad) * r


def _disk_quadrature(field: GraphField, integrand: np.ndarray) -> float:
    """Simpson in r, periodic trapezoid in θ."""
    dtheta = 2.0 * np.pi / len(field.angles)
    return float(sp_integrate.simpson(integrand.sum(axis=1) * dtheta, x=field.radial.nodes))


def _field_shift(field: GraphField) -> float:
    r = field.radial.nodes[:, None]
    return float(np.max((r**2 + field.values**2) / 4.0))


def weighted_area(surface: GraphField | RadialProfile) -> WeightedArea:
    """Weighted area of a disk graph or a rotational profile graph.

    The integrand is scaled by e^{−max|X|²/4} so the quadrature never
    overflows; the scale is added back in the logarithm.

    Args:
        surface: A solved GraphField, or a radial profile over B_R (for
            n = 1 the curve over [−R, R]).

    Returns:
        The weighted area.
    """
    if isinstance(surface, GraphField):
        shift = _field_shift(surface)
        scaled = _disk_quadrature(surface, _disk_integrand(surface, surface.values, shift))
    else:
        profile = surface
        spline = profile.spline()
        slope = spline.derivative()
        r, u = profile.r, profile.values
        shift = float(np.max((r**2 + u**2) / 4.0))
        n = profile.n

        def integrand(t: float) -> float:
            height = float(spline(t))
            weight = abs(t) ** (n - 1) if n > 1 else 1.0
            return weight * math.exp((t * t + height * height) / 4.0 - shift) * math.sqrt(
                1.0 + float(slope(t)) ** 2
            )

        factor = sphere_volume(n - 1) if n > 1 else (2.0 if profile.symmetric else 1.0)
        start = float(r[0])
        scaled = factor * integrate(integrand, start, float(r[-1]), tol=1e-11, limit=1000).value
    log_value = math.log(scaled) + shift
    return WeightedArea(log_value=log_value, log_space=shift > LOG_SPACE_THRESHOLD)


def _bump(
    x1: np.ndarray, x2: np.ndarray, center: np.ndarray, radius: float, amplitude: float
) -> np.ndarray:
    """a·exp(1 − 1/(1 − s²)) for s = |x − c|/ρ < 1, zero outside."""
    s2 = ((x1 - center[0]) ** 2 + (x2 - center[1]) ** 2) / radius**2
    out = np.zeros_like(s2)
    inside = s2 < 1.0
    out[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - s2[inside]))
    return out


def e_minimality_check(
    field: GraphField,
    *,
    bumps: int = 100,
    seed: int = 0,
    radius_range: tuple[float, float] = (1.5, 3.0),
    amplitude_range: tuple[float, float] = (0.2, 1.0),
    slack: float = 1e-9,
) -> CertificateReport:
    """Weighted area of u against u + b for random compactly supported bumps.

    Each bump has |c| + ρ ≤ 0.9R, so the boundary data are untouched.
    Differences are summed node by node on the field's quadrature.

    Args:
        field: Solved field.
        bumps: Number of random perturbations.
        seed: Generator seed.
        radius_range: Range of the bump radius ρ.
        amplitude_range: Range of |a|; the sign is random.
        slack: Relative slack on E(u) ≤ E(u + b).

    Returns:
        The certificate, with the smallest relative increase observed.
    """
    rng = np.random.default_rng(seed)
    shift = _field_shift(field)
    base = _disk_integrand(field, field.values, shift)
    energy = _disk_quadrature(field, base)
    x1, x2 = field.cartesian()
    report = CertificateReport(name=f"e_minimality_{field.boundary.label}")
    increases = []
    for _ in range(bumps):
        radius = rng.uniform(*radius_range)
        radius = min(radius, 0.45 * field.R)
        reach = 0.9 * field.R - radius
        distance = reach * math.sqrt(rng.uniform())
        angle = rng.uniform(0.0, 2.0 * np.pi)
        center = np.array([distance * math.cos(angle), distance * math.sin(angle)])
        amplitude = rng.uniform(*amplitude_range) * rng.choice([-1.0, 1.0])
        perturbed = field.values + _bump(x1, x2, center, radius, amplitude)
        delta = _disk_quadrature(field, _disk_integrand(field, perturbed, shift) - base)
        increases.append(delta / energy)
        report.check(
            delta >= -slack * energy,
            f"bump at ({center[0]:.3g}, {center[1]:.3g}) lowers E by {-delta / energy:.3e}",
        )
    report.details.update(
        {
            "bumps": bumps,
            "log_energy": math.log(energy) + shift,
            "min_relative_increase": float(min(increases)),
            "max_relative_increase": float(max(increases)),
        }
    )
    return report


# =============================================================================
# LATITUDE BAND PROBLEM
# =============================================================================


@dataclass(frozen=True, eq=False)
class LatitudeField:
    """Solution F(θ) of the latitude problem on a band of S^n.

    Attributes:
        n: Sphere dimension.
        epsilon: Weight parameter ε (``inf`` for the unweighted operator).
        theta_grid: Latitude grid on [θ₁, θ₂].
        values: F at every node, read-only.
        iterations: Newton steps of the final stage.
        residual_norm: Final residual.
    """

    n: int
    epsilon: float
    theta_grid: Grid1D
    values: np.ndarray
    iterations: int = 0
    residual_norm: float = 0.0

    def __post_init__(self) -> None:
        """Freeze the samples."""
        values = np.array(self.values, dtype=float)
        if values.shape != self.theta_grid.nodes.shape:
            msg = "values must have one entry per latitude node"
            raise ValueError(msg)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def theta(self) -> np.ndarray:
        """Latitude nodes."""
        return self.theta_grid.nodes

    @property
    def band(self) -> tuple[float, float]:
        """(θ₁, θ₂)."""
        return float(self.theta[0]), float(self.theta[-1])

    def slope(self) -> np.ndarray:
        """F′ at every node."""
        p, _ = centered_derivatives(self.values, self.theta_grid.step, symmetric_left=False)
        return p

    @property
    def gradient_sup(self) -> float:
        """Observed sup |F′|; recorded, no bound is asserted."""
        return float(np.max(np.abs(self.slope())))

    def spline(self) -> CubicSpline:
        """Cubic interpolant of F."""
        return CubicSpline(self.theta, self.values)


def _latitude_bvp(n: int, epsilon: float, grid: Grid1D, weight: float = 1.0) -> QuasilinearBVP:
    """Discrete latitude operator with the reaction scaled by ``weight``."""
    coupling = 0.0 if math.isinf(epsilon) else 1.0 / (2.0 * epsilon**2)

    def reaction(u: np.ndarray) -> np.ndarray:
        return -weight * (coupling * np.exp(2.0 * u) + n)

    def reaction_slope(u: np.ndarray) -> np.ndarray:
        return -weight * 2.0 * coupling * np.exp(2.0 * u)

    return QuasilinearBVP(
        grid=grid,
        diffusion=graph_diffusion,
        diffusion_slope=graph_diffusion_slope,
        drift=(n - 1) / np.tan(grid.nodes),
        reaction=reaction,
        reaction_slope=reaction_slope,
        left="dirichlet",
    )


def latitude_residual(field: LatitudeField) -> float:
    """Infinity norm of the discrete latitude residual."""
    bvp = _latitude_bvp(field.n, field.epsilon, field.theta_grid)
    return float(np.max(np.abs(bvp.residual(field.values))))


def solve_latitude_band(
    epsilon: float,
    band: tuple[float, float],
    n: int = 3,
    resolution: int = 801,
    *,
    slack: float = 1e-12,
) -> LatitudeField:
    """Solve the rotational latitude problem with zero boundary values.

    The source n + e^{2F}/(2ε²) is ramped in stages on retries.

    Args:
        epsilon: ε > 0; ``math.inf`` drops the exponential term.
        band: (θ₁, θ₂) with 0 < θ₁ < θ₂ < π.
        n: Sphere dimension (≥ 2).
        resolution: Number of latitude nodes.
        slack: Allowed positive excursion of F.

    Returns:
        The solved field.

    Raises:
        DomainError: On invalid ε, band or n.
        ConvergenceError: If Newton and its continuation retries fail.
        BarrierViolationError: If the solution is positive somewhere.
    """
    theta1, theta2 = (float(b) for b in band)
    if not 0.0 < theta1 < theta2 < math.pi:
        raise DomainError("band", band, "need 0 < theta1 < theta2 < pi")
    if not epsilon > 0:
        raise DomainError("epsilon", epsilon, "must be positive")
    if n < 2:
        raise DomainError("n", n, "sphere dimension must be at least 2")
    grid = Grid1D.uniform(theta1, theta2, resolution)
    tol = rounding_tolerance(1.0, grid.step)

    def attempt(stages: int) -> tuple[np.ndarray, NewtonResult]:
        values = np.zeros(resolution)
        result = NewtonResult(values, 0, 0.0)
        for stage in range(1, stages + 1):
            bvp = _latitude_bvp(n, epsilon, grid, weight=stage / stages)
            values, result = bvp.solve(values, tol=tol)
        return values, result

    values, result = solve_with_continuation(attempt)
    top = int(np.argmax(values))
    if values[top] > slack:
        raise BarrierViolationError(float(grid.nodes[top]), float(values[top]), -math.inf, 0.0)
    field = LatitudeField(
        n=n,
        epsilon=epsilon,
        theta_grid=grid,
        values=values,
        iterations=result.iterations,
        residual_norm=result.residual_norm,
    )
    logger.info(
        "Latitude solve converged",
        n=n,
        epsilon=epsilon,
        band=(theta1, theta2),
        iterations=result.iterations,
        residual=result.residual_norm,
        gradient_sup=field.gradient_sup,
    )
    return field


def latitude_leaf_mean_curvature(field: LatitudeField) -> np.ndarray:
    """e^F/(2ε²√(1+F′²)) at every node; zero for ε = ∞."""
    if math.isinf(field.epsilon):
        return np.zeros_like(field.values)
    return np.exp(field.values) / (2.0 * field.epsilon**2 * np.sqrt(1.0 + field.slope() ** 2))


def latitude_epsilon_comparison(
    epsilons: list[float],
    band: tuple[float, float],
    n: int = 3,
    resolution: int = 801,
    *,
    slack: float = 1e-10,
) -> CertificateReport:
    """Ordering of the latitude solutions in ε.

    A smaller ε strengthens the exponential source, so the solutions
    decrease with ε: F_ε ≤ F_ε′ for ε < ε′ at every node.
    """
    ordered = sorted(float(e) for e in epsilons)
    fields = [solve_latitude_band(e, band, n, resolution) for e in ordered]
    report = CertificateReport(name="latitude_epsilon_ordering")
    gaps = []
    for small, large in zip(fields, fields[1:], strict=False):
        excess = float(np.max(small.values - large.values))
        gaps.append(excess)
        report.check(
            excess <= slack,
            f"F(eps={small.epsilon:g}) exceeds F(eps={large.epsilon:g}) by {excess:.3e}",
        )
    report.details.update(
        {
            "epsilons": ordered,
            "max_excess": gaps,
            "minima": [float(f.values.min()) for f in fields],
            "gradient_sups": [f.gradient_sup for f in fields],
        }
    )
    return report


def nested_band_check(
    epsilon: float,
    inner: tuple[float, float],
    outer: tuple[float, float],
    n: int = 3,
    resolution: int = 801,
    *,
    slack: float = 1e-8,
) -> CertificateReport:
    """The smaller band's solution dominates the larger one on the smaller band.

    Raises:
        DomainError: If the bands are not strictly nested.
    """
    if not outer[0] < inner[0] < inner[1] < outer[1]:
        raise DomainError("inner", inner, f"must lie strictly inside {outer}")
    small = solve_latitude_band(epsilon, inner, n, resolution)
    large = solve_latitude_band(epsilon, outer, n, resolution)
    excess = float(np.max(large.spline()(small.theta) - small.values))
    report = CertificateReport(name="latitude_nested_bands")
    report.details.update({"epsilon": epsilon, "inner": inner, "outer": outer, "excess": excess})
    report.check(excess <= slack, f"outer-band solution exceeds inner one by {excess:.3e}")
    return report


# =============================================================================
# EXPORT
# =============================================================================


def write_field_csv(field: GraphField, path: Path) -> Path:
    """Write (x1, x2, u) rows; the pole appears once."""
    x1, x2 = field.cartesian()
    keep = np.ones(field.values.shape, dtype=bool)
    keep[0, 1:] = False
    return write_columns_csv(path, {"x1": x1[keep], "x2": x2[keep], "u": field.values[keep]})


def write_field_svg(field: GraphField, path: Path) -> Path:
    """Contour plot of u over the disk."""
    x1, x2 = field.cartesian()
    keep = np.ones(field.values.shape, dtype=bool)
    keep[0, 1:] = False
    return write_contour_svg(
        path, x1[keep], x2[keep], field.values[keep], title=f"u, data {field.boundary.label}"
    )


def write_latitude_csv(field: LatitudeField, path: Path) -> Path:
    """Write (theta, U) rows."""
    return write_columns_csv(path, {"theta": field.theta, "U": field.values})


def write_latitude_svg(fields: list[LatitudeField], path: Path) -> Path:
    """Overlay latitude solutions for several ε."""
    curves = [(f.theta, f.values, f"eps={f.epsilon:g}") for f in fields]
    return write_curves_svg(path, curves, xlabel="theta", ylabel="U", title="latitude band")
