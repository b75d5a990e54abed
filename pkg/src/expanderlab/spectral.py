"""Stability functional of minimal cones and the radial Jacobi-type operator.

For a minimal cone over Σ with first eigenvalue λ₁ of Δ_Σ + |A_Σ|², the
second variation of the weighted area along radial test functions reduces to

    I₀(η) = ∫₀^∞ (λ₁η² + ½t²η² + t²η′²) t^{n−3} e^{t²/4} dt.

The test family η_{δ,R} ramps linearly on [δ/2, δ) into t^c(e^{−t²/4} −
e^{−R²/4}), c = ε + 1 − n/2, and its δ → 0, R → ∞ limit has a closed form in
Gamma functions. The cone is an unstable self-expander exactly when
λ₁ + (n−2)²/4 ≤ 0.

The operator L₀w = w_rr + ((n−1)/r + r/2)w_r − w/2 acts on r^m e^{−r²/4}
by multiplication with m(m+n−2)/r² − (m+n+1)/2; the identities below are
checked with finite-difference stencils.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable
from dataclasses import dataclass
from enum import Enum
import math
from pathlib import Path
from typing import Protocol

import numpy as np
from scipy import special
from scipy.interpolate import CubicSpline
import structlog

from .exceptions import DomainError
from .export import write_csv
from .models import SpectralRow
from .numerics_core import gamma, integrate
from .reports import CertificateReport

logger = structlog.get_logger(__name__)

# Exponent above which the weight e^{t²/4} is factored out of the quadrature.
LOG_SPACE_THRESHOLD = 700.0

# Default stencil width for the operator identities.
STENCIL_WIDTH = 1e-3


# =============================================================================
# PARAMETERS
# =============================================================================


@dataclass(frozen=True)
class SpectralParams:
    """Inputs of the stability functional on the η_{δ,R} family.

    Attributes:
        n: Cone dimension (≥ 3).
        lambda1: First eigenvalue λ₁ of Δ_Σ + |A_Σ|².
        eps: Exponent ε of the test family.
        delta: Inner cut-off δ ∈ (0, 1).
        R: Outer cut-off R > 1.
    """

    n: int
    lambda1: float
    eps: float
    delta: float = 1e-3
    R: float = 30.0

    def __post_init__(self) -> None:
        """Validate parameter ranges."""
        if self.n < 3:
            msg = f"n must be at least 3, got {self.n}"
            raise ValueError(msg)
        if not math.isfinite(self.lambda1):
            msg = f"lambda1 must be finite, got {self.lambda1}"
            raise ValueError(msg)
        if not self.eps > 0:
            msg = f"eps must be positive, got {self.eps}"
            raise ValueError(msg)
        if not 0 < self.delta < 1 < self.R:
            msg = f"need 0 < delta < 1 < R, got delta={self.delta}, R={self.R}"
            raise ValueError(msg)

    @property
    def exponent(self) -> float:
        """c = ε + 1 − n/2, the power of t in the test family."""
        return self.eps + 1.0 - self.n / 2.0

    def to_dict(self) -> dict[str, float]:
        """Convert to dictionary for reports."""
        return {
            "n": self.n,
            "lambda1": self.lambda1,
            "eps": self.eps,
            "delta": self.delta,
            "R": self.R,
        }


@dataclass(frozen=True)
class ConeEigendata:
    """Spectral data of a cone cross-section with constant |A_Σ|².

    Attributes:
        n: Cone dimension.
        lambda1: First eigenvalue λ₁ of Δ_Σ + |A_Σ|².
        A_sq: |A_Σ|² (NaN when not known).
    """

    n: int
    lambda1: float
    A_sq: float = math.nan

    def __post_init__(self) -> None:
        """Validate the dimension and eigenvalue."""
        if self.n < 3:
            msg = f"n must be at least 3, got {self.n}"
            raise ValueError(msg)
        if not math.isfinite(self.lambda1):
            msg = f"lambda1 must be finite, got {self.lambda1}"
            raise ValueError(msg)

    @classmethod
    def for_product_spheres(cls, p: int, q: int) -> ConeEigendata:
        """Minimal product S^p(√(p/(p+q))) × S^q(√(q/(p+q))) in S^{p+q+1}.

        |A_Σ|² = p + q on this product, so the constant eigenfunction gives
        λ₁ = −|A_Σ|² = −(n − 1) with n = p + q + 1.
        """
        if p < 1 or q < 1:
            raise DomainError("p, q", (p, q), "sphere dimensions must be positive")
        A_sq = float(p + q)
        return cls(n=p + q + 1, lambda1=-A_sq, A_sq=A_sq)

    @classmethod
    def simons(cls, k: int) -> ConeEigendata:
        """Simons cone C_{k,k} over S^k × S^k."""
        return cls.for_product_spheres(k, k)


# =============================================================================
# TEST PROFILES
# =============================================================================


class EtaProfile(Protocol):
    """A radial test function with its derivative and support."""

    support: tuple[float, float]
    breakpoints: tuple[float, ...]

    def __call__(self, t: float) -> float: ...

    def derivative(self, t: float) -> float: ...


class EtaFamily:
    """The Lipschitz cut-off η_{δ,R}.

    2δ^{ε−n/2}(e^{−δ²/4} − e^{−R²/4})(t − δ/2) on [δ/2, δ),
    t^c(e^{−t²/4} − e^{−R²/4}) on [δ, R), zero elsewhere.
    """

    def __init__(self, params: SpectralParams) -> None:
        """Precompute the ramp slope."""
        self.params = params
        d, R = params.delta, params.R
        self.tail = math.exp(-(R * R) / 4.0)
        ramp_height = math.exp(-d * d / 4.0) - self.tail
        self.slope = 2.0 * d ** (params.eps - params.n / 2.0) * ramp_height
        self.support = (d / 2.0, R)
        self.breakpoints = (d,)

    def __call__(self, t: float) -> float:
        d, R, c = self.params.delta, self.params.R, self.params.exponent
        if t < d / 2.0 or t >= R:
            return 0.0
        if t < d:
            return self.slope * (t - d / 2.0)
        return t**c * (math.exp(-t * t / 4.0) - self.tail)

    def derivative(self, t: float) -> float:
        d, R, c = self.params.delta, self.params.R, self.params.exponent
        if t < d / 2.0 or t >= R:
            return 0.0
        if t < d:
            return self.slope
        gauss = math.exp(-t * t / 4.0)
        return c * t ** (c - 1.0) * (gauss - self.tail) - 0.5 * t ** (c + 1.0) * gauss


def eta_limit_profile(t: np.ndarray | float, params: SpectralParams) -> np.ndarray:
    """t^c·e^{−t²/4}, the δ → 0, R → ∞ limit of η_{δ,R}."""
    t = np.asarray(t, dtype=float)
    return t**params.exponent * np.exp(-t * t / 4.0)


class LimitEta:
    """eta_limit_profile restricted to [start, stop]."""

    def __init__(self, params: SpectralParams, start: float, stop: float) -> None:
        """Fix the restriction interval."""
        self.params = params
        self.support = (start, stop)
        self.breakpoints: tuple[float, ...] = ()

    def __call__(self, t: float) -> float:
        return float(eta_limit_profile(t, self.params))

    def derivative(self, t: float) -> float:
        c = self.params.exponent
        return (c / t - t / 2.0) * float(eta_limit_profile(t, self.params))


class SampledEta:
    """A test function given by samples, interpolated by a cubic spline."""

    def __init__(self, t: np.ndarray, values: np.ndarray) -> None:
        """Build the spline.

        Raises:
            DomainError: On mismatched or unsorted samples.
        """
        t = np.asarray(t, dtype=float)
        values = np.asarray(values, dtype=float)
        if t.shape != values.shape or t.size < 4 or np.any(np.diff(t) <= 0) or t[0] <= 0:
            raise DomainError("t", t.size, "need at least 4 increasing positive samples")
        self._spline = CubicSpline(t, values)
        self._slope = self._spline.derivative()
        self.support = (float(t[0]), float(t[-1]))
        self.breakpoints = ()

    def __call__(self, t: float) -> float:
        return float(self._spline(t))

    def derivative(self, t: float) -> float:
        return float(self._slope(t))


# =============================================================================
# STABILITY FUNCTIONAL
# =============================================================================


@dataclass(frozen=True)
class FunctionalValue:
    """Value of I₀ with the weight possibly factored out.

    Attributes:
        scaled: Integral computed with e^{t²/4 − log_scale} in place of
            e^{t²/4}.
        error_estimate: Quadrature error estimate of ``scaled``.
        log_scale: Exponent factored out (0 unless log-space was needed).
    """

    scaled: float
    error_estimate: float
    log_scale: float = 0.0

    @property
    def log_space(self) -> bool:
        """Whether the weight overflowed and was factored out."""
        return self.log_scale > 0.0

    @property
    def value(self) -> float:
        """scaled·e^{log_scale}, ±inf when not representable."""
        if self.scaled == 0.0:
            return 0.0
        log_abs = math.log(abs(self.scaled)) + self.log_scale
        if log_abs >= 709.0:
            return math.copysign(math.inf, self.scaled)
        return self.scaled * math.exp(self.log_scale)


def I0_quadrature(
    params: SpectralParams, eta: EtaProfile | None = None, *, tol: float = 1e-11
) -> FunctionalValue:
    """Evaluate I₀(η) by adaptive quadrature in x = log t.

    Args:
        params: Spectral parameters (η defaults to η_{δ,R}).
        eta: Test function on its support.
        tol: Quadrature tolerance.

    Returns:
        The functional value.
    """
    profile: EtaProfile = eta if eta is not None else EtaFamily(params)
    start, stop = profile.support
    shift = max(0.0, stop * stop / 4.0 - LOG_SPACE_THRESHOLD)
    power = params.n - 2

    def integrand(x: float) -> float:
        t = math.exp(x)
        value = profile(t)
        slope = profile.derivative(t)
        density = params.lambda1 * value**2 + 0.5 * t * t * value**2 + t * t * slope**2
        return density * t**power * math.exp(t * t / 4.0 - shift)

    points = [math.log(b) for b in profile.breakpoints if start < b < stop]
    result = integrate(integrand, math.log(start), math.log(stop), tol=tol, points=points)
    if shift > 0:
        logger.debug("I0 evaluated in log space", log_scale=shift, n=params.n)
    return FunctionalValue(
        scaled=result.value, error_estimate=result.error_estimate, log_scale=shift
    )


def I0_closed_form(n: int, lambda1: float, eps: float) -> float:
    """lim I₀(η_{δ,R}) = 2^{2ε−1}((λ₁+c²)Γ(ε) + 2(n−1−2ε)Γ(1+ε) + 4Γ(2+ε)).

    Raises:
        DomainError: If eps is not positive.
    """
    if not eps > 0:
        raise DomainError("eps", eps, "exponent must be positive")
    c = eps + 1.0 - n / 2.0
    bracket = (
        (lambda1 + c * c) * gamma(eps)
        + 2.0 * (n - 1 - 2.0 * eps) * gamma(1.0 + eps)
        + 4.0 * gamma(2.0 + eps)
    )
    return 2.0 ** (2.0 * eps - 1.0) * bracket


def I0_head_correction(params: SpectralParams) -> float:
    """Integral of the limit integrand over (0, δ) via regularized gammainc."""
    n, eps, lam = params.n, params.eps, params.lambda1
    c = params.exponent
    x = params.delta**2 / 4.0
    bracket = (
        (lam + c * c) * gamma(eps) * special.gammainc(eps, x)
        + 2.0 * (n - 1 - 2.0 * eps) * gamma(1.0 + eps) * special.gammainc(1.0 + eps, x)
        + 4.0 * gamma(2.0 + eps) * special.gammainc(2.0 + eps, x)
    )
    return float(2.0 ** (2.0 * eps - 1.0) * bracket)


def ramp_bound(params: SpectralParams) -> float:
    """(|λ₁| + 3/2)(4/n)δ^{2ε}, a bound on the ramp's share of I₀(η_{δ,R})."""
    return (abs(params.lambda1) + 1.5) * 4.0 / params.n * params.delta ** (2.0 * params.eps)


def gamma_identity_check(params: SpectralParams, *, tol: float = 1e-3) -> CertificateReport:
    """Compare quadrature of the stability functional with its Gamma closed form.

    Three quantities are certified:
    - quadrature of the limit integrand on [δ, R] plus the analytic head
      over (0, δ) matches the closed form to relative ``tol``;
    - I₀(η_{δ,R}) differs from the closed form by at most the ramp bound plus
      the head, up to relative ``tol``; the observed relative gap is reported
      as ``family_relative_gap``;
    - the quadratures are finite.

    Returns:
        Report with every component.
    """
    report = CertificateReport(name="gamma_identity")
    closed = I0_closed_form(params.n, params.lambda1, params.eps)
    head = I0_head_correction(params)
    limit = I0_quadrature(params, LimitEta(params, params.delta, params.R)).value
    family = I0_quadrature(params, EtaFamily(params)).value
    bound = ramp_bound(params)
    scale = max(abs(closed), 1e-300)
    relative = abs(limit + head - closed) / scale
    family_relative = abs(family - closed) / scale
    allowance = (bound + abs(head)) / scale + tol
    report.details.update(params.to_dict())
    report.details.update(
        closed_form=closed,
        limit_quadrature=limit,
        head_correction=head,
        family_quadrature=family,
        ramp_bound=bound,
        relative_error=relative,
        family_relative_gap=family_relative,
        family_allowance=allowance,
    )
    report.check(math.isfinite(limit) and math.isfinite(family), "quadrature not finite")
    report.check(relative <= tol, f"limit quadrature off by relative {relative:.3e}")
    report.check(
        family_relative <= allowance,
        f"family value {family:.6g} off by relative {family_relative:.3e} "
        f"(allowed {allowance:.3e} around {closed:.6g})",
    )
    return report


# =============================================================================
# STABILITY CLASSIFICATION
# =============================================================================


class StabilityClass(str, Enum):
    """Stability of a minimal cone as a self-expander."""

    STABLE = "stable"
    UNSTABLE = "unstable"


def stability_margin(data: ConeEigendata) -> float:
    """λ₁ + (n−2)²/4; nonpositive means unstable."""
    return data.lambda1 + (data.n - 2) ** 2 / 4.0


def stability_classify(data: ConeEigendata) -> StabilityClass:
    """Unstable iff λ₁ + (n−2)²/4 ≤ 0."""
    return StabilityClass.UNSTABLE if stability_margin(data) <= 0 else StabilityClass.STABLE


def instability_scan(
    samples: Iterable[tuple[int, float]], *, eps: float = 1e-3
) -> CertificateReport:
    """Certify I₀ closed form < 0 at small ε for unstable (n, λ₁) pairs.

    Pairs on the boundary λ₁ = −(n−2)²/4 are classified unstable but the
    closed form stays positive there: λ₁ + c² = ε² − (n−2)ε cancels the pole
    of Γ(ε). They are reported and skipped. Strictly unstable pairs turn
    negative once ε·(n+4) is below the margin.

    Returns:
        Report listing every sampled value.
    """
    report = CertificateReport(name="instability_detection")
    rows = []
    for n, lambda1 in samples:
        data = ConeEigendata(n=n, lambda1=lambda1)
        margin = stability_margin(data)
        value = I0_closed_form(n, lambda1, eps)
        rows.append({"n": n, "lambda1": lambda1, "margin": margin, "I0": value})
        if margin < 0:
            report.check(value < 0, f"n={n}, lambda1={lambda1:g}: I0={value:.4g} not negative")
    report.details.update(eps=eps, samples=rows)
    return report


def simons_flip(k_max: int = 6) -> CertificateReport:
    """Certify Simons cones C_{k,k} are unstable for k < 3 and stable for k ≥ 3."""
    report = CertificateReport(name="simons_classification")
    for k in range(1, k_max + 1):
        label = stability_classify(ConeEigendata.simons(k))
        expected = StabilityClass.UNSTABLE if k < 3 else StabilityClass.STABLE
        report.details[f"k={k}"] = label.value
        report.check(label is expected, f"k={k} classified {label.value}")
    return report


# =============================================================================
# OPERATOR IDENTITIES
# =============================================================================


def _apply_L0(w: Callable[[float], float], n: int, r: float, width: float) -> float:
    """L₀w at r with centered second-order stencils."""
    if not r > width:
        raise DomainError("r", r, f"must exceed the stencil width {width}")
    left, mid, right = w(r - width), w(r), w(r + width)
    w_r = (right - left) / (2.0 * width)
    w_rr = (right - 2.0 * mid + left) / width**2
    return w_rr + ((n - 1) / r + r / 2.0) * w_r - mid / 2.0


def _relative(lhs: float, rhs: float) -> float:
    if lhs == rhs:
        return 0.0
    return abs(lhs - rhs) / max(abs(rhs), 1e-300)


def power_gaussian(m: float) -> Callable[[float], float]:
    """w(r) = r^m·e^{−r²/4}."""
    return lambda r: r**m * math.exp(-r * r / 4.0)


def L0_identity_residual(n: int, tau: float, r: float, *, width: float = STENCIL_WIDTH) -> float:
    """Relative residual of L₀(r^{τ−n−1}e^{−r²/4}) against its closed form.

    The closed form is (−τ/2 + (3(n+1) − (n+4)τ + τ²)/r²)·r^{τ−n−1}e^{−r²/4}.
    """
    w = power_gaussian(tau - n - 1)
    rhs = (-tau / 2.0 + (3.0 * (n + 1) - (n + 4) * tau + tau * tau) / r**2) * w(r)
    return _relative(_apply_L0(w, n, r, width), rhs)


def L0_bracket_roots(n: int) -> tuple[float, float]:
    """Roots τ of τ² − (n+4)τ + 3(n+1): 3 and n + 1."""
    return 3.0, float(n + 1)


def L0_affine_identity_residual(
    n: int, t: float, s: float, r: float, *, width: float = STENCIL_WIDTH
) -> float:
    """Relative residual of L₀(t(r+s)r^{−n−2}e^{−r²/4}).

    The closed form is t·r^{−n−2}e^{−r²/4}(s/2 + (3n+3)/r + (4n+8)s/r²).
    """

    def w(x: float) -> float:
        return t * (x + s) * x ** (-n - 2) * math.exp(-x * x / 4.0)

    rhs = (
        t
        * r ** (-n - 2)
        * math.exp(-r * r / 4.0)
        * (s / 2.0 + (3.0 * n + 3.0) / r + (4.0 * n + 8.0) * s / r**2)
    )
    return _relative(_apply_L0(w, n, r, width), rhs)


def L_C_separated_residual(
    n: int, lambda1: float, tau: float, r: float, *, width: float = STENCIL_WIDTH
) -> float:
    """Relative residual of L_C on w(r)φ₁ with Δ_Σφ₁ + |A_Σ|²φ₁ = −λ₁φ₁.

    L_C = L₀ + r^{−2}(Δ_Σ + |A_Σ|²) acts on the radial factor as
    L₀w − λ₁w/r²; for w = r^{τ−n−1}e^{−r²/4} the closed form subtracts λ₁
    from the r^{−2} bracket.
    """
    w = power_gaussian(tau - n - 1)
    lhs = _apply_L0(w, n, r, width) - lambda1 * w(r) / r**2
    bracket = 3.0 * (n + 1) - (n + 4) * tau + tau * tau - lambda1
    rhs = (-tau / 2.0 + bracket / r**2) * w(r)
    return _relative(lhs, rhs)


def observed_order(residual: Callable[[float], float], width: float) -> float:
    """log₂ of the residual ratio between stencil widths h and h/2."""
    coarse, fine = residual(width), residual(width / 2.0)
    if fine == 0.0 or coarse == 0.0:
        return math.inf
    return math.log2(coarse / fine)


def l0_order_check(
    samples: Iterable[tuple[int, float, float, float]],
    *,
    width: float = 4e-3,
    min_order: float = 1.9,
) -> CertificateReport:
    """Certify second-order convergence of both operator identities.

    Each sample (n, τ, s, r) checks the power identity at τ and the affine
    identity with t = 1 and shift s.

    Returns:
        Report with the observed orders.
    """
    report = CertificateReport(name="L0_identities")
    orders = []
    for n, tau, s, r in samples:
        power = observed_order(
            lambda h, n=n, tau=tau, r=r: L0_identity_residual(n, tau, r, width=h), width
        )
        affine = observed_order(
            lambda h, n=n, s=s, r=r: L0_affine_identity_residual(n, 1.0, s, r, width=h), width
        )
        orders.append({"n": n, "tau": tau, "s": s, "r": r, "power": power, "affine": affine})
        report.check(power >= min_order, f"power identity order {power:.2f} at n={n}, tau={tau}")
        report.check(affine >= min_order, f"affine identity order {affine:.2f} at n={n}, s={s}")
    report.details.update(width=width, orders=orders)
    return report


# =============================================================================
# EXPORT
# =============================================================================


def spectral_row(params: SpectralParams) -> SpectralRow:
    """Closed form, limit quadrature and classification for one parameter set."""
    limit = I0_quadrature(params, LimitEta(params, params.delta, params.R)).value
    return SpectralRow(
        n=params.n,
        lambda1=params.lambda1,
        eps=params.eps,
        closed_form=I0_closed_form(params.n, params.lambda1, params.eps),
        quadrature=limit + I0_head_correction(params),
        classification=stability_classify(ConeEigendata(params.n, params.lambda1)).value,
    )


def write_spectral_csv(rows: Iterable[SpectralRow], path: Path) -> Path:
    """Write (n, λ₁, ε, closed form, quadrature, classification) rows."""
    header = list(SpectralRow.model_fields)
    return write_csv(path, header, ([getattr(row, key) for key in header] for row in rows))
