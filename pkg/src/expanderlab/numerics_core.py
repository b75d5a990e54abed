"""Shared numerical kernels.

Grids, special functions, quadrature, banded linear solves, damped Newton
iteration and the quasilinear two-point boundary value problem used by the
radial expander, latitude, translator and flow solvers.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
import math
from typing import TYPE_CHECKING, Literal

import numpy as np
from scipy import integrate as sp_integrate
from scipy import linalg as sp_linalg
from scipy import sparse
from scipy import special
from scipy.sparse import linalg as sparse_linalg
import structlog

from .config import NEWTON_MAX_HALVINGS, NEWTON_MAX_ITER, NEWTON_TOL, TRIDIAGONAL_RESIDUAL
from .exceptions import ConvergenceError, DomainError, PivotError, QuadratureError

if TYPE_CHECKING:
    from numpy.typing import ArrayLike

logger = structlog.get_logger(__name__)

Tridiagonal = tuple[np.ndarray, np.ndarray, np.ndarray]
Jacobian = np.ndarray | sparse.spmatrix | sparse.sparray | Tridiagonal
ResidualAndJacobian = Callable[[np.ndarray], tuple[np.ndarray, Jacobian]]


# =============================================================================
# GRIDS AND RESULT RECORDS
# =============================================================================


@dataclass(frozen=True, eq=False)
class Grid1D:
    """Ordered abscissae for a radius, latitude, coordinate or time variable.

    Attributes:
        nodes: Strictly increasing, read-only node array (at least 3 nodes).
    """

    nodes: np.ndarray

    def __post_init__(self) -> None:
        """Validate ordering and size, then freeze the node array."""
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 3:
            msg = "Grid1D needs a one-dimensional array of at least 3 nodes"
            raise ValueError(msg)
        if not np.all(np.isfinite(nodes)) or np.any(np.diff(nodes) <= 0):
            msg = "Grid1D nodes must be finite and strictly increasing"
            raise ValueError(msg)
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, start: float, stop: float, num: int) -> Grid1D:
        """Create a uniform grid including both endpoints.

        Args:
            start: First node.
            stop: Last node.
            num: Number of nodes.

        Returns:
            Uniform grid.
        """
        return cls(np.linspace(start, stop, int(num)))

    @property
    def spacing(self) -> np.ndarray:
        """Per-interval steps."""
        return np.diff(self.nodes)

    @property
    def step(self) -> float:
        """Common step of a uniform grid.

        Raises:
            ValueError: If the grid is not uniform to rounding.
        """
        steps = self.spacing
        h = float(steps.mean())
        if np.max(np.abs(steps - h)) > 1e-9 * max(h, 1.0):
            msg = "grid is not uniform"
            raise ValueError(msg)
        return h

    def __len__(self) -> int:
        """Return the number of nodes."""
        return int(self.nodes.size)

    def index_of(self, value: float) -> int:
        """Locate the node equal to value (to rounding).

        Args:
            value: Abscissa to find.

        Returns:
            Node index.

        Raises:
            DomainError: If value is not a node.
        """
        idx = int(np.argmin(np.abs(self.nodes - value)))
        if not math.isclose(self.nodes[idx], value, rel_tol=1e-12, abs_tol=1e-12):
            raise DomainError("r", value, "not a grid node")
        return idx


@dataclass(frozen=True)
class QuadratureResult:
    """Value of a definite integral with its error estimate."""

    value: float
    error_estimate: float

    def __post_init__(self) -> None:
        """Validate the error estimate."""
        if not (math.isfinite(self.error_estimate) and self.error_estimate >= 0):
            msg = "error_estimate must be finite and nonnegative"
            raise ValueError(msg)


@dataclass(frozen=True, eq=False)
class NewtonResult:
    """Outcome of a damped Newton iteration.

    Attributes:
        solution: Converged iterate.
        iterations: Newton steps taken.
        residual_norm: Infinity norm of the final residual.
    """

    solution: np.ndarray
    iterations: int
    residual_norm: float


# =============================================================================
# SPECIAL FUNCTIONS
# =============================================================================


def gamma(x: float) -> float:
    """Evaluate the Gamma function for positive arguments.

    Args:
        x: Positive real argument.

    Returns:
        Γ(x).

    Raises:
        DomainError: If x is not positive.
    """
    if not x > 0:
        raise DomainError("x", x, "Gamma is only evaluated for x > 0")
    return float(special.gamma(x))


def unit_ball_volume(n: int) -> float:
    """Volume ω_n = π^{n/2}/Γ(n/2+1) of the unit ball in R^n."""
    if n < 1:
        raise DomainError("n", n, "dimension must be at least 1")
    return float(math.exp(0.5 * n * math.log(math.pi) - special.gammaln(0.5 * n + 1.0)))


def sphere_volume(p: int, radius: float = 1.0) -> float:
    """p-dimensional volume of the round sphere S^p(radius) in R^{p+1}.

    Args:
        p: Sphere dimension (p >= 1).
        radius: Sphere radius.

    Returns:
        radius^p · 2π^{(p+1)/2}/Γ((p+1)/2).
    """
    if p < 1:
        raise DomainError("p", p, "sphere dimension must be at least 1")
    if not radius > 0:
        raise DomainError("radius", radius, "radius must be positive")
    log_unit = math.log(2.0) + 0.5 * (p + 1) * math.log(math.pi) - special.gammaln(0.5 * (p + 1))
    return float(math.exp(log_unit + p * math.log(radius)))


# =============================================================================
# QUADRATURE
# =============================================================================


def gaussian_truncation_point(tol: float) -> float:
    """Upper limit T where the tail bound e^{-T²/8} drops below tol/10."""
    return math.sqrt(8.0 * math.log(10.0 / tol))


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-10,
    *,
    points: list[float] | None = None,
    limit: int = 200,
) -> QuadratureResult:
    """Adaptive Gauss-Kronrod quadrature.

    Infinite upper limits are truncated where the Gaussian tail bound falls
    below tol/10; integrands must decay at least like e^{-ct}.

    Args:
        f: Integrand, finite on (a, b).
        a: Lower limit.
        b: Upper limit, possibly ``math.inf``.
        tol: Absolute and relative tolerance.
        points: Optional interior breakpoints.
        limit: Maximum number of subintervals.

    Returns:
        The integral value with its error estimate.

    Raises:
        QuadratureError: If refinement stops before reaching tol.
    """
    upper = b
    if math.isinf(b):
        upper = max(a + 1.0, gaussian_truncation_point(tol))
    kwargs: dict = {"epsabs": tol, "epsrel": tol, "limit": limit, "full_output": 1}
    if points:
        kwargs["points"] = [p for p in points if a < p < upper]
    out = sp_integrate.quad(f, a, upper, **kwargs)
    value, error = float(out[0]), float(out[1])
    if len(out) > 3:
        message = str(out[3]).splitlines()[0]
        raise QuadratureError(message, best_estimate=value, error_estimate=error)
    return QuadratureResult(value=value, error_estimate=abs(error))


# =============================================================================
# LINEAR AND NONLINEAR SOLVES
# =============================================================================


def solve_tridiagonal(
    lower: ArrayLike, diag: ArrayLike, upper: ArrayLike, rhs: ArrayLike
) -> np.ndarray:
    """Solve a tridiagonal system with a banded LU factorization.

    The multiply-back residual must stay below
    TRIDIAGONAL_RESIDUAL·(‖rhs‖∞ + 1), or below the rounding level
    8·n·eps·‖A‖∞·‖x‖∞ when that is larger.

    Args:
        lower: Sub-diagonal (length n-1).
        diag: Main diagonal (length n).
        upper: Super-diagonal (length n-1).
        rhs: Right-hand side (length n).

    Returns:
        Solution vector.

    Raises:
        PivotError: On a zero or near-zero pivot, or a residual above the bound.
    """
    d = np.asarray(diag, dtype=float)
    n = d.size
    ab = np.zeros((3, n))
    ab[0, 1:] = upper
    ab[1] = d
    ab[2, :-1] = lower
    b = np.asarray(rhs, dtype=float)
    try:
        x = sp_linalg.solve_banded((1, 1), ab, b, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise PivotError(f"tridiagonal system of size {n}: {e}") from None
    if not np.all(np.isfinite(x)):
        raise PivotError(f"tridiagonal system of size {n} produced non-finite values")
    residual = tridiagonal_matvec(lower, d, upper, x) - b
    row_sums = np.abs(d)
    row_sums[1:] += np.abs(np.asarray(lower, dtype=float))
    row_sums[:-1] += np.abs(np.asarray(upper, dtype=float))
    x_max = np.max(np.abs(x), initial=0.0)
    rounding = 8.0 * n * np.finfo(float).eps * np.max(row_sums, initial=0.0) * x_max
    bound = max(TRIDIAGONAL_RESIDUAL * (np.max(np.abs(b), initial=0.0) + 1.0), rounding)
    if np.max(np.abs(residual), initial=0.0) > bound:
        raise PivotError(f"tridiagonal system of size {n} is numerically singular")
    return x


def tridiagonal_matvec(
    lower: ArrayLike, diag: ArrayLike, upper: ArrayLike, x: ArrayLike
) -> np.ndarray:
    """Multiply a tridiagonal matrix by a vector."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(diag, dtype=float) * x
    y[:-1] += np.asarray(upper, dtype=float) * x[1:]
    y[1:] += np.asarray(lower, dtype=float) * x[:-1]
    return y


def linear_solve(jacobian: Jacobian, rhs: np.ndarray) -> np.ndarray:
    """Solve J·x = rhs for a tridiagonal tuple, scipy-sparse or dense J.

    Raises:
        PivotError: If the system is singular.
    """
    if isinstance(jacobian, tuple):
        return solve_tridiagonal(*jacobian, rhs)
    if sparse.issparse(jacobian):
        step = sparse_linalg.spsolve(sparse.csc_matrix(jacobian), rhs)
        if not np.all(np.isfinite(step)):
            raise PivotError("sparse Jacobian is singular")
        return np.asarray(step, dtype=float)
    try:
        return np.atleast_1d(sp_linalg.solve(np.atleast_2d(jacobian), rhs))
    except (np.linalg.LinAlgError, ValueError) as e:
        raise PivotError(str(e)) from None


def newton_damped(
    residual_and_jacobian: ResidualAndJacobian,
    initial: ArrayLike,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
    *,
    max_halvings: int = NEWTON_MAX_HALVINGS,
) -> NewtonResult:
    """Damped Newton iteration with step-halving line search.

    A step is accepted once the residual infinity norm strictly decreases;
    the step length is halved up to ``max_halvings`` times.

    Args:
        residual_and_jacobian: Maps an iterate to (residual, Jacobian). The
            Jacobian may be dense, scipy-sparse, or a (lower, diag, upper) tuple.
        initial: Starting iterate (scalar or vector).
        tol: Target residual infinity norm.
        max_iter: Maximum Newton steps.
        max_halvings: Maximum step halvings per Newton step.

    Returns:
        Converged iterate with iteration count and residual norm.

    Raises:
        ConvergenceError: If max_iter is exceeded or the line search stalls.
    """
    x = np.atleast_1d(np.asarray(initial, dtype=float)).copy()
    residual, jacobian = residual_and_jacobian(x)
    norm = float(np.max(np.abs(residual)))
    for iteration in range(max_iter + 1):
        if norm <= tol:
            return NewtonResult(solution=x, iterations=iteration, residual_norm=norm)
        if iteration == max_iter:
            break
        step = linear_solve(jacobian, -residual)
        alpha = 1.0
        for _ in range(max_halvings + 1):
            candidate = x + alpha * step
            trial_residual, trial_jacobian = residual_and_jacobian(candidate)
            trial_norm = float(np.max(np.abs(trial_residual)))
            if np.isfinite(trial_norm) and trial_norm < norm:
                break
            alpha *= 0.5
        else:
            raise ConvergenceError(
                "Newton line search stalled",
                iterations=iteration,
                residual_norm=norm,
                last_iterate=x,
            )
        x, residual, jacobian, norm = candidate, trial_residual, trial_jacobian, trial_norm
    raise ConvergenceError(
        "Newton iteration exceeded max_iter",
        iterations=max_iter,
        residual_norm=norm,
        last_iterate=x,
    )


def rounding_tolerance(scale: float, h: float, floor: float = NEWTON_TOL) -> float:
    """Smallest residual a second-order stencil can resolve at this scale.

    One ulp of a value of size ``scale`` moves a second difference by about
    ulp/h²; Newton targets below that granularity stall in the line search.

    Args:
        scale: Magnitude of the sampled values.
        h: Grid step.
        floor: Tolerance used when rounding is not limiting.

    Returns:
        max(floor, 8·eps·scale/h²).
    """
    return max(floor, 8.0 * float(np.finfo(float).eps) * max(1.0, abs(scale)) / h**2)


# =============================================================================
# QUASILINEAR TWO-POINT PROBLEMS
# =============================================================================


def centered_derivatives(
    values: np.ndarray, h: float, *, symmetric_left: bool
) -> tuple[np.ndarray, np.ndarray]:
    """Second-order first and second derivatives on a uniform grid.

    Interior nodes use centered stencils. With ``symmetric_left`` the first
    node is a symmetry point (ghost value u(-h) = u(h)); otherwise, and always
    at the last node, one-sided second-order stencils are used.

    Args:
        values: Sampled function.
        h: Grid step.
        symmetric_left: Whether the first node is an even-reflection point.

    Returns:
        (first derivative, second derivative) arrays.
    """
    u = np.asarray(values, dtype=float)
    p = np.empty_like(u)
    q = np.empty_like(u)
    p[1:-1] = (u[2:] - u[:-2]) / (2.0 * h)
    q[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h**2
    if symmetric_left:
        p[0] = 0.0
        q[0] = 2.0 * (u[1] - u[0]) / h**2
    else:
        p[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h)
        q[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / h**2
    p[-1] = (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) / (2.0 * h)
    q[-1] = (2.0 * u[-1] - 5.0 * u[-2] + 4.0 * u[-3] - u[-4]) / h**2
    return p, q


def graph_diffusion(p: np.ndarray) -> np.ndarray:
    """Coefficient 1/(1+p²) of the second derivative of a graph over a line."""
    return 1.0 / (1.0 + p * p)


def graph_diffusion_slope(p: np.ndarray) -> np.ndarray:
    """Derivative of graph_diffusion."""
    return -2.0 * p / (1.0 + p * p) ** 2


@dataclass(frozen=True, eq=False)
class QuasilinearBVP:
    """Two-point problem a(u')u'' + b(x)u' + c(u) = 0 on a uniform grid.

    The left end is either a Dirichlet node or a regular singular symmetry
    point where b(x) contains ``singular_weight/x``; there u'(0) = 0 and the
    singular term is replaced by its limit ``singular_weight·u''(0)``. The
    right end is always Dirichlet.

    Attributes:
        grid: Uniform grid.
        diffusion: a(p), positive.
        diffusion_slope: a'(p).
        drift: b at every node (the entry at a symmetric left node is ignored).
        reaction: c(u), including any constant source.
        reaction_slope: c'(u).
        left: "symmetric" or "dirichlet".
        singular_weight: Coefficient m of m·u'/x at a symmetric left node.
        left_value: Dirichlet value at the left end.
        right_value: Dirichlet value at the right end.
    """

    grid: Grid1D
    diffusion: Callable[[np.ndarray], np.ndarray]
    diffusion_slope: Callable[[np.ndarray], np.ndarray]
    drift: np.ndarray
    reaction: Callable[[np.ndarray], np.ndarray]
    reaction_slope: Callable[[np.ndarray], np.ndarray]
    left: Literal["symmetric", "dirichlet"] = "symmetric"
    singular_weight: float = 0.0
    left_value: float = 0.0
    right_value: float = 0.0

    @property
    def h(self) -> float:
        """Grid step."""
        return self.grid.step

    @property
    def _first_unknown(self) -> int:
        return 0 if self.left == "symmetric" else 1

    def residual(self, values: np.ndarray) -> np.ndarray:
        """Discrete residual at every unknown node of a full-length array."""
        u = np.asarray(values, dtype=float)
        h = self.h
        p, q = centered_derivatives(u, h, symmetric_left=self.left == "symmetric")
        out = self.diffusion(p) * q + self.drift * p + self.reaction(u)
        if self.left == "symmetric":
            out[0] = (self.diffusion(np.zeros(1))[0] + self.singular_weight) * q[0] + self.reaction(
                u[:1]
            )[0]
        return out[self._first_unknown : -1]

    def _embed(self, unknowns: np.ndarray) -> np.ndarray:
        u = np.empty(len(self.grid))
        start = self._first_unknown
        u[start:-1] = unknowns
        if start == 1:
            u[0] = self.left_value
        u[-1] = self.right_value
        return u

    def residual_and_jacobian(self, unknowns: np.ndarray) -> tuple[np.ndarray, Tridiagonal]:
        """Residual and tridiagonal Jacobian with respect to the unknown nodes."""
        u = self._embed(unknowns)
        h = self.h
        symmetric = self.left == "symmetric"
        p, q = centered_derivatives(u, h, symmetric_left=symmetric)
        a = self.diffusion(p)
        slope_p = self.diffusion_slope(p) * q + self.drift
        full = a * q + self.drift * p + self.reaction(u)
        lower = a / h**2 - slope_p / (2.0 * h)
        diag = -2.0 * a / h**2 + self.reaction_slope(u)
        upper = a / h**2 + slope_p / (2.0 * h)
        if symmetric:
            weight = self.diffusion(np.zeros(1))[0] + self.singular_weight
            full[0] = weight * q[0] + self.reaction(u[:1])[0]
            diag[0] = -2.0 * weight / h**2 + self.reaction_slope(u[:1])[0]
            upper[0] = 2.0 * weight / h**2
        start = self._first_unknown
        residual = full[start:-1]
        return residual, (lower[start + 1 : -1], diag[start:-1], upper[start:-2])

    def frozen_operator(self, values: np.ndarray) -> Tridiagonal:
        """Linear operator with the diffusion frozen at ``values``.

        Acts on the full node array; rows and columns cover the unknown nodes
        only, so boundary contributions must be added by the caller.

        Returns:
            (lower, diag, upper) of the frozen-coefficient operator.
        """
        u = np.asarray(values, dtype=float)
        h = self.h
        symmetric = self.left == "symmetric"
        p, _ = centered_derivatives(u, h, symmetric_left=symmetric)
        a = self.diffusion(p)
        lower = a / h**2 - self.drift / (2.0 * h)
        diag = -2.0 * a / h**2 + self.reaction_slope(u)
        upper = a / h**2 + self.drift / (2.0 * h)
        if symmetric:
            weight = self.diffusion(np.zeros(1))[0] + self.singular_weight
            diag[0] = -2.0 * weight / h**2 + self.reaction_slope(u[:1])[0]
            upper[0] = 2.0 * weight / h**2
        start = self._first_unknown
        return lower[start + 1 : -1], diag[start:-1], upper[start:-2]

    def boundary_couplings(self, values: np.ndarray) -> tuple[float, float]:
        """Off-diagonal weights linking the first/last unknowns to Dirichlet ends."""
        u = np.asarray(values, dtype=float)
        h = self.h
        p, _ = centered_derivatives(u, h, symmetric_left=self.left == "symmetric")
        a = self.diffusion(p)
        left = 0.0
        if self.left == "dirichlet":
            left = float(a[1] / h**2 - self.drift[1] / (2.0 * h))
        right = float(a[-2] / h**2 + self.drift[-2] / (2.0 * h))
        return left, right

    def solve(
        self,
        initial: np.ndarray,
        tol: float = NEWTON_TOL,
        max_iter: int = NEWTON_MAX_ITER,
        *,
        polish: bool = True,
    ) -> tuple[np.ndarray, NewtonResult]:
        """Solve by damped Newton from a full-length initial guess.

        Args:
            initial: Full node array (boundary entries are overwritten).
            tol: Residual tolerance.
            max_iter: Newton step limit.
            polish: Take one extra full Newton step after convergence, kept
                only if it does not increase the residual.

        Returns:
            (full solution array, Newton diagnostics).
        """
        start = self._first_unknown
        guess = np.asarray(initial, dtype=float)[start:-1]
        result = newton_damped(self.residual_and_jacobian, guess, tol=tol, max_iter=max_iter)
        if polish and result.residual_norm > 0.0:
            residual, jacobian = self.residual_and_jacobian(result.solution)
            try:
                candidate = result.solution + linear_solve(jacobian, -residual)
            except PivotError:
                candidate = None
            if candidate is not None:
                norm = float(np.max(np.abs(self.residual_and_jacobian(candidate)[0])))
                if norm <= result.residual_norm:
                    result = NewtonResult(
                        solution=candidate, iterations=result.iterations + 1, residual_norm=norm
                    )
        return self._embed(result.solution), result
