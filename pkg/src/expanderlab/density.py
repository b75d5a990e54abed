"""Cone densities, shrinker entropies and the √2 comparisons.

The density of an n-dimensional cone C over Σ ⊂ ∂B₁ is
Θ(C) = Vol(Σ)/(n·ω_n), which also equals its Gaussian density
∫_C (4π)^{−n/2} e^{−|z|²/4}. The round shrinking S^k has entropy
d_k = (k/2e)^{k/2}·2√π/Γ((k+1)/2), decreasing in k towards √2, as do the
densities of the Simons cones C_{k,k}.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass
from enum import Enum
import math
from pathlib import Path

from scipy import special
import structlog

from .exceptions import DomainError, QuadratureError
from .export import write_csv
from .models import DensityRow
from .numerics_core import integrate, sphere_volume, unit_ball_volume
from .reports import CertificateReport

logger = structlog.get_logger(__name__)

SQRT2 = math.sqrt(2.0)


# =============================================================================
# CONE SPECIFICATIONS
# =============================================================================


class ConeKind(str, Enum):
    """Families of cones with closed-form cross-sections."""

    HYPERPLANE = "hyperplane"
    ROTATIONAL = "rotational"
    PRODUCT_SPHERES = "product-spheres"


@dataclass(frozen=True)
class ConeSpec:
    """A cone with a closed-form cross-section Σ = C ∩ ∂B₁.

    Attributes:
        kind: Cone family.
        n: Cone dimension.
        kappa: Slope of the rotational cone {x_{n+1} = κ|x|}.
        p: First sphere dimension of a product cross-section.
        q: Second sphere dimension of a product cross-section.
    """

    kind: ConeKind
    n: int
    kappa: float = 0.0
    p: int = 0
    q: int = 0

    def __post_init__(self) -> None:
        """Validate the variant's parameters."""
        if self.n < 1:
            msg = f"cone dimension must be positive, got {self.n}"
            raise ValueError(msg)
        if self.kind is ConeKind.ROTATIONAL and not (self.kappa >= 0 and math.isfinite(self.kappa)):
            msg = f"kappa must be finite and nonnegative, got {self.kappa}"
            raise ValueError(msg)
        if self.kind is ConeKind.PRODUCT_SPHERES and (
            self.p < 1 or self.q < 1 or self.n != self.p + self.q + 1
        ):
            msg = f"product cone needs p, q >= 1 and n = p + q + 1, got {self.p}, {self.q}"
            raise ValueError(msg)

    @classmethod
    def hyperplane(cls, n: int) -> ConeSpec:
        """An n-plane through the origin."""
        return cls(kind=ConeKind.HYPERPLANE, n=n)

    @classmethod
    def rotational(cls, n: int, kappa: float) -> ConeSpec:
        """The graph cone x_{n+1} = κ|x| over R^n."""
        return cls(kind=ConeKind.ROTATIONAL, n=n, kappa=kappa)

    @classmethod
    def product_spheres(cls, p: int, q: int) -> ConeSpec:
        """Cone over S^p(√(p/(p+q))) × S^q(√(q/(p+q)))."""
        return cls(kind=ConeKind.PRODUCT_SPHERES, n=p + q + 1, p=p, q=q)

    @property
    def cone_dimension(self) -> int:
        """Dimension n of the cone."""
        return self.n

    @property
    def ambient_dimension(self) -> int:
        """Dimension of the surrounding Euclidean space."""
        return self.n + 1

    @property
    def cross_section_volume(self) -> float:
        """Vol(Σ) from closed forms."""
        if self.kind is ConeKind.PRODUCT_SPHERES:
            total = self.p + self.q
            return sphere_volume(self.p, math.sqrt(self.p / total)) * sphere_volume(
                self.q, math.sqrt(self.q / total)
            )
        if self.n == 1:
            return 2.0
        radius = 1.0
        if self.kind is ConeKind.ROTATIONAL:
            radius = 1.0 / math.sqrt(1.0 + self.kappa**2)
        return sphere_volume(self.n - 1, radius)

    @property
    def label(self) -> str:
        """Short human-readable name."""
        if self.kind is ConeKind.PRODUCT_SPHERES:
            return f"C_{{{self.p},{self.q}}}"
        if self.kind is ConeKind.ROTATIONAL:
            return f"rotational(n={self.n}, kappa={self.kappa:g})"
        return f"hyperplane(n={self.n})"


def product_cone_spec(p: int, q: int) -> ConeSpec:
    """Cone over the minimal product S^p × S^q, p and q possibly unequal."""
    return ConeSpec.product_spheres(p, q)


# =============================================================================
# DENSITIES AND ENTROPIES
# =============================================================================


def cone_density(spec: ConeSpec) -> float:
    """Θ(C) = Vol(Σ)/(n·ω_n)."""
    return spec.cross_section_volume / (spec.n * unit_ball_volume(spec.n))


@dataclass(frozen=True)
class RotationalDensity:
    """Density of a rotational cone by quadrature and in closed form."""

    quadrature: float
    closed_form: float
    error_estimate: float


def rotational_cone_density(n: int, kappa: float) -> RotationalDensity:
    """Density of {x_{n+1} = κ|x|} by integrating over the latitude radius.

    The slice of the cone at horizontal radius ρ is a sphere of volume
    |S^{n−1}|ρ^{n−1}; arc length along the generator is √(1+κ²)dρ and the
    cone leaves B₁ at ρ = 1/√(1+κ²). The closed form is (1+κ²)^{−(n−1)/2}.

    Raises:
        DomainError: If n < 2 or κ < 0.
    """
    if n < 2:
        raise DomainError("n", n, "rotational cones need n >= 2")
    if not kappa >= 0:
        raise DomainError("kappa", kappa, "slope must be nonnegative")
    stretch = math.sqrt(1.0 + kappa * kappa)
    sphere = sphere_volume(n - 1)
    result = integrate(lambda rho: sphere * rho ** (n - 1) * stretch, 0.0, 1.0 / stretch, tol=1e-13)
    return RotationalDensity(
        quadrature=result.value / unit_ball_volume(n),
        closed_form=stretch ** (-(n - 1)),
        error_estimate=result.error_estimate / unit_ball_volume(n),
    )


def entropy_dk(k: int) -> float:
    """d_k = (k/2e)^{k/2}·2√π/Γ((k+1)/2), evaluated in log space.

    Raises:
        DomainError: If k < 1.
    """
    if k < 1:
        raise DomainError("k", k, "sphere dimension must be at least 1")
    log_value = (
        0.5 * k * math.log(k / (2.0 * math.e))
        + math.log(2.0 * math.sqrt(math.pi))
        - special.gammaln(0.5 * (k + 1))
    )
    return math.exp(log_value)


def gaussian_density_identity(spec: ConeSpec, tol: float = 1e-8) -> CertificateReport:
    """Certify ∫_C (4π)^{−n/2}e^{−|z|²/4} = Θ(C) with a radial quadrature.

    The left side is Vol(Σ)·∫₀^∞ (4π)^{−n/2} e^{−s²/4} s^{n−1} ds.

    Returns:
        Report with both sides and their gap.
    """
    report = CertificateReport(name=f"gaussian_density {spec.label}")
    m = spec.n
    theta = cone_density(spec)
    scale = (4.0 * math.pi) ** (-m / 2.0)
    try:
        radial = integrate(
            lambda s: scale * math.exp(-s * s / 4.0) * s ** (m - 1), 0.0, math.inf, tol=1e-12
        )
    except QuadratureError as e:
        report.check(False, str(e))
        report.details.update(density=theta, best_estimate=e.best_estimate)
        return report
    gaussian = spec.cross_section_volume * radial.value
    gap = abs(gaussian - theta)
    report.details.update(density=theta, gaussian_density=gaussian, gap=gap, tol=tol)
    report.check(gap <= tol, f"Gaussian density {gaussian:.12g} differs from {theta:.12g}")
    return report


def simons_density_check(tol: float = 1e-9, gaussian_tol: float = 1e-8) -> CertificateReport:
    """Θ(C_{1,1}) = π/2, Θ(C_{2,2}) = 3/2, Θ(C_{3,3}) = 15π/32, all above √2."""
    report = CertificateReport(name="simons_densities")
    oracles = {1: math.pi / 2.0, 2: 1.5, 3: 15.0 * math.pi / 32.0}
    for k, expected in oracles.items():
        spec = ConeSpec.product_spheres(k, k)
        theta = cone_density(spec)
        report.details[spec.label] = theta
        report.check(abs(theta - expected) <= tol, f"{spec.label}: {theta!r} != {expected!r}")
        report.check(theta > SQRT2, f"{spec.label}: density {theta:.6f} not above sqrt(2)")
        report.merge(gaussian_density_identity(spec, gaussian_tol))
    return report


# =============================================================================
# √2 TABLE
# =============================================================================


def sqrt2_table(k_max: int) -> tuple[list[DensityRow], CertificateReport]:
    """Rows (k, Θ(C_{k,k}), d_k, d_k − √2, Θ − √2) with their certificate.

    Certifies Θ(C_{k,k}) > √2, d_k strictly decreasing with d_k > √2, and
    Θ(C_{k,k}) decreasing over 1 ≤ k ≤ k_max.

    Raises:
        DomainError: If k_max < 3.
    """
    if k_max < 3:
        raise DomainError("k_max", k_max, "need at least 3 rows")
    rows = []
    for k in range(1, k_max + 1):
        theta = cone_density(ConeSpec.product_spheres(k, k))
        d_k = entropy_dk(k)
        rows.append(
            DensityRow(
                k=k,
                theta_simons=theta,
                d_k=d_k,
                d_k_minus_sqrt2=d_k - SQRT2,
                theta_minus_sqrt2=theta - SQRT2,
            )
        )
    report = CertificateReport(name="sqrt2_table")
    for row in rows:
        report.check(row.theta_minus_sqrt2 > 0, f"k={row.k}: Simons density not above sqrt(2)")
        report.check(row.d_k_minus_sqrt2 > 0, f"k={row.k}: d_k not above sqrt(2)")
    for before, after in zip(rows, rows[1:], strict=False):
        report.check(after.d_k < before.d_k, f"d_k not decreasing at k={after.k}")
        report.check(
            after.theta_simons < before.theta_simons,
            f"Simons density not decreasing at k={after.k}",
        )
    report.details.update(k_max=k_max, last_d_k=rows[-1].d_k, last_theta=rows[-1].theta_simons)
    logger.info("Density table computed", k_max=k_max, passed=report.passed)
    return rows, report


def entropy_chain_check(
    k_max: int = 50, far: int = 200, gap: float = 0.01, d1_tol: float = 1e-3
) -> CertificateReport:
    """d₁ ≈ 1.5203 = √(2π/e), d_k decreasing up to k_max, |d_far − √2| < gap."""
    report = CertificateReport(name="entropy_chain")
    d1 = entropy_dk(1)
    closed = math.sqrt(2.0 * math.pi / math.e)
    report.details.update(d1=d1, d_far=entropy_dk(far), far=far)
    report.check(abs(d1 - 1.5203) <= d1_tol, f"d_1={d1:.6f} not within {d1_tol} of 1.5203")
    report.check(abs(d1 - closed) <= 1e-12, "d_1 differs from sqrt(2 pi / e)")
    values = [entropy_dk(k) for k in range(1, k_max + 1)]
    decreasing = all(b < a for a, b in zip(values, values[1:], strict=False))
    report.check(decreasing, f"d_k not strictly decreasing for k <= {k_max}")
    report.check(abs(entropy_dk(far) - SQRT2) < gap, f"|d_{far} - sqrt(2)| not below {gap}")
    return report


def write_density_csv(rows: Iterable[DensityRow], path: Path) -> Path:
    """Write the √2 table."""
    header = list(DensityRow.model_fields)
    return write_csv(path, header, ([getattr(row, key) for key in header] for row in rows))
