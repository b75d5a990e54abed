"""Numerical laboratory for self-expanders of mean curvature flow.

Solves the rotational and one-dimensional expander ODEs, the graphical
Dirichlet problem on a disk, the latitude band problem, graphic s-mean
curvature flows and their translators, and evaluates the stability
functional and cone densities. Every experiment returns certificates that
the ``expanderlab`` CLI collects into a run manifest.

Usage:
    from expanderlab import solve_rotational, profile_certificate

    profile = solve_rotational(3, 1.0, 20.0)
    report = profile_certificate(profile)
    print(report.to_markdown())

    # Stability of a cone with first eigenvalue -0.25 in dimension 3
    from expanderlab import I0_closed_form
    I0_closed_form(3, -0.25, 0.05)
"""

# =============================================================================
# CONFIGURATION AND RECORDS
# =============================================================================
from .config import CommandName, ExperimentConfig, Tolerances

# =============================================================================
# CONE DENSITIES
# =============================================================================
from .density import (
    ConeSpec,
    cone_density,
    entropy_dk,
    gaussian_density_identity,
    rotational_cone_density,
    sqrt2_table,
)

# =============================================================================
# EXCEPTIONS
# =============================================================================
from .exceptions import (
    BarrierViolationError,
    BlowUpError,
    ConfigError,
    ConvergenceError,
    DomainError,
    ExpanderLabError,
    FitError,
    PivotError,
    QuadratureError,
    StencilError,
)

# =============================================================================
# RADIAL EXPANDERS
# =============================================================================
from .expander_ode import (
    BarrierSpec,
    RadialProfile,
    asymptotic_constant,
    entire_limit_bounds,
    initial_guess_uniqueness,
    monotonicity_identity_check,
    profile_certificate,
    residual_J,
    solve_1d,
    solve_rotational,
)

# =============================================================================
# FLOWS AND TRANSLATORS
# =============================================================================
from .flow_sim import (
    FlowScheme,
    FlowState,
    SMode,
    TranslatorParams,
    H_evolution_residual,
    arrival_time_limit,
    evolve,
    fixed_point_drift,
    normalized_convergence,
    radial_state,
    reparametrization_check,
    solve_translator,
    step,
)

# =============================================================================
# GRAPHICAL DIRICHLET AND LATITUDE PROBLEMS
# =============================================================================
from .graph_solver import (
    BoundaryData,
    GraphField,
    LatitudeField,
    comparison_ordering,
    solve_dirichlet_disk,
    solve_latitude_band,
    uniqueness_estimate_check,
    weighted_area,
)
from .models import Manifest
from .reports import CertificateReport

# =============================================================================
# STABILITY FUNCTIONAL
# =============================================================================
from .spectral import (
    ConeEigendata,
    SpectralParams,
    I0_closed_form,
    I0_quadrature,
    L0_identity_residual,
    stability_classify,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # ==========================================================================
    # CONFIGURATION AND RECORDS
    # ==========================================================================
    "CommandName",
    "ExperimentConfig",
    "Tolerances",
    "CertificateReport",
    "Manifest",
    # ==========================================================================
    # RADIAL EXPANDERS
    # ==========================================================================
    "BarrierSpec",
    "RadialProfile",
    "asymptotic_constant",
    "entire_limit_bounds",
    "initial_guess_uniqueness",
    "monotonicity_identity_check",
    "profile_certificate",
    "residual_J",
    "solve_1d",
    "solve_rotational",
    # ==========================================================================
    # GRAPHICAL DIRICHLET AND LATITUDE PROBLEMS
    # ==========================================================================
    "BoundaryData",
    "GraphField",
    "LatitudeField",
    "comparison_ordering",
    "solve_dirichlet_disk",
    "solve_latitude_band",
    "uniqueness_estimate_check",
    "weighted_area",
    # ==========================================================================
    # FLOWS AND TRANSLATORS
    # ==========================================================================
    "FlowScheme",
    "FlowState",
    "SMode",
    "TranslatorParams",
    "H_evolution_residual",
    "arrival_time_limit",
    "evolve",
    "fixed_point_drift",
    "normalized_convergence",
    "radial_state",
    "reparametrization_check",
    "solve_translator",
    "step",
    # ==========================================================================
    # STABILITY FUNCTIONAL
    # ==========================================================================
    "ConeEigendata",
    "SpectralParams",
    "I0_closed_form",
    "I0_quadrature",
    "L0_identity_residual",
    "stability_classify",
    # ==========================================================================
    # CONE DENSITIES
    # ==========================================================================
    "ConeSpec",
    "cone_density",
    "entropy_dk",
    "gaussian_density_identity",
    "rotational_cone_density",
    "sqrt2_table",
    # ==========================================================================
    # EXCEPTIONS
    # ==========================================================================
    "BarrierViolationError",
    "BlowUpError",
    "ConfigError",
    "ConvergenceError",
    "DomainError",
    "ExpanderLabError",
    "FitError",
    "PivotError",
    "QuadratureError",
    "StencilError",
]
