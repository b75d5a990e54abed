"""Command-line interface for the expander laboratory.

Usage:
    expanderlab solve-rotational --n 3 --kappa 1 --R 20
    expanderlab density-table --k-max 10 --formats csv
    expanderlab verify-all --quick
"""

from __future__ import annotations

import argparse
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import logging
import math
from pathlib import Path
import sys
from typing import Any

from dotenv import load_dotenv
import numpy as np
from rich.console import Console
from rich.table import Table
import structlog

from . import __version__
from .config import (
    DEFAULT_PARAMETERS,
    SUPPORTED_FORMATS,
    CommandName,
    ExperimentConfig,
    Tolerances,
    resolve_thread_count,
)
from .density import (
    SQRT2,
    entropy_chain_check,
    gaussian_density_identity,
    product_cone_spec,
    rotational_cone_density,
    simons_density_check,
    sqrt2_table,
    write_density_csv,
)
from .exceptions import ConfigError, ExpanderLabError, FitError
from .expander_ode import (
    RadialProfile,
    asymptotic_constant,
    entire_limit_bounds,
    initial_guess_uniqueness,
    fit_decay_order,
    monotonicity_identity_check,
    profile_certificate,
    solve_1d,
    solve_rotational,
    write_profile_csv,
    write_profile_svg,
)
from .export import write_columns_csv, write_csv, write_curves_svg, write_json
from .flow_sim import (
    FlowScheme,
    SelfSimilarTrace,
    TranslatorParams,
    arrival_time_exact,
    arrival_time_limit,
    arrival_time_residual,
    evolve,
    fixed_point_drift,
    gaussian_bump,
    h_evolution_check,
    hs_identity_residual,
    normalized_convergence,
    radial_state,
    reparametrization_check,
    reparametrization_transitivity,
    solve_translator,
    translator_residual,
    write_trajectory,
)
from .graph_solver import (
    BoundaryData,
    comparison_ordering,
    disk_residual,
    e_minimality_check,
    latitude_epsilon_comparison,
    latitude_leaf_mean_curvature,
    latitude_residual,
    linear_exactness_check,
    nested_band_check,
    random_boundary_pair,
    rotational_consistency,
    solve_dirichlet_disk,
    solve_latitude_band,
    uniqueness_estimate_check,
    weighted_area,
    write_field_csv,
    write_field_svg,
    write_latitude_csv,
    write_latitude_svg,
)
from .models import ArtifactFile, CertificateRecord, Manifest
from .reports import CertificateReport
from .spectral import (
    ConeEigendata,
    SpectralParams,
    gamma_identity_check,
    instability_scan,
    l0_order_check,
    simons_flip,
    spectral_row,
    stability_classify,
    write_spectral_csv,
)

console = Console()
logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

MANIFEST_NAME = "manifest.json"

# Boundary data selectable with ``dirichlet --data``; all but linear ignore kappa
BOUNDARY_DATA: dict[str, Callable[[float], BoundaryData]] = {
    "cone": BoundaryData.cone,
    "linear": lambda kappa: BoundaryData.linear(kappa, 0.0),
    "abs_x1": lambda _kappa: BoundaryData.abs_x1(),
    "max_blend": lambda _kappa: BoundaryData.max_blend(),
}


# =============================================================================
# RUN CONTEXT
# =============================================================================


@dataclass
class RunContext:
    """Artifacts and certificates collected while one command runs.

    Attributes:
        config: The resolved configuration.
        files: Files written so far, relative to the output directory.
        certificates: Certified properties in the order they were produced.
    """

    config: ExperimentConfig
    files: list[ArtifactFile] = field(default_factory=list)
    certificates: list[CertificateReport] = field(default_factory=list)

    @property
    def params(self) -> dict[str, Any]:
        """Resolved command parameters."""
        return self.config.parameters

    @property
    def tolerances(self) -> Tolerances:
        """Tolerances in force."""
        return self.config.tolerances

    def wants(self, fmt: str) -> bool:
        """Whether an artifact format was requested."""
        return fmt in self.config.formats

    def path(self, name: str) -> Path:
        """Destination of an artifact inside the output directory."""
        return self.config.output_dir / name

    def record(self, path: Path, description: str) -> None:
        """Add a written file to the manifest."""
        relative = Path(path).relative_to(self.config.output_dir).as_posix()
        fmt = Path(path).suffix.lstrip(".")
        self.files.append(ArtifactFile(path=relative, format=fmt, description=description))

    def certify(self, *reports: CertificateReport) -> None:
        """Add certificates to the manifest."""
        self.certificates.extend(reports)

    def nodes(self, count: int) -> int:
        """Node count, halved (keeping the endpoints) in quick mode."""
        return (count - 1) // 2 + 1 if self.config.quick else count

    def manifest(self) -> Manifest:
        """Build the run manifest."""
        return Manifest(
            version=__version__,
            command=self.config.command.value,
            config=self.config.to_dict(),
            tolerances=self.tolerances.to_dict(),
            files=self.files,
            certificates=[
                CertificateRecord(**report.to_dict()) for report in self.certificates
            ],
        )


def _write_results_json(ctx: RunContext, stem: str, payload: Any = None) -> None:
    """Write the certificates (and optional rows) of a command as JSON."""
    if not ctx.wants("json"):
        return
    body = {"certificates": [report.to_dict() for report in ctx.certificates]}
    if payload is not None:
        body["results"] = payload
    ctx.record(write_json(ctx.path(f"{stem}.json"), body), "Certificates and results")


def _asymptotic_report(profile: RadialProfile, tolerance: float) -> CertificateReport:
    """lim r(φ − κr) against (n−1)κ."""
    report = CertificateReport(name=f"asymptotic_constant_n{profile.n}_kappa{profile.kappa:g}")
    expected = (profile.n - 1) * profile.kappa
    try:
        value = asymptotic_constant(profile)
    except FitError as e:
        report.check(False, str(e))
        return report
    relative = abs(value - expected) / expected
    report.details.update(value=value, expected=expected, relative_error=relative)
    report.check(
        relative <= tolerance,
        f"constant {value:.6g} differs from {expected:g} by {relative:.2%} (> {tolerance:.0%})",
    )
    return report


def _residual_report(name: str, value: float, tolerance: float) -> CertificateReport:
    report = CertificateReport(name=name)
    report.details.update(residual=value, tolerance=tolerance)
    report.check(value <= tolerance, f"residual {value:.3e} > {tolerance:.1e}")
    return report


# =============================================================================
# COMMAND RUNNERS
# =============================================================================


def _run_solve_rotational(ctx: RunContext) -> None:
    p, tol = ctx.params, ctx.tolerances
    profile = solve_rotational(
        p["n"], p["kappa"], p["R"], nodes=ctx.nodes(p["nodes"]), barrier_slack=tol.barrier_slack
    )
    ctx.certify(
        profile_certificate(
            profile,
            residual_tol=tol.residual,
            barrier_slack=tol.barrier_slack,
            monotone_slack=tol.monotone_slack,
        )
    )
    if profile.n >= 3 and profile.R >= 20:
        ctx.certify(_asymptotic_report(profile, tol.asymptotic_relative))
    stem = f"profile_n{profile.n}_kappa{profile.kappa:g}"
    if ctx.wants("csv"):
        ctx.record(write_profile_csv(profile, ctx.path(f"{stem}.csv")), "r, u, u', H, |A|^2")
    if ctx.wants("svg"):
        ctx.record(write_profile_svg(profile, ctx.path(f"{stem}.svg")), "Profile against barriers")
    _write_results_json(ctx, stem)


def _run_solve_1d(ctx: RunContext) -> None:
    p, tol = ctx.params, ctx.tolerances
    profile = solve_1d(
        p["kappa"], p["R"], nodes=ctx.nodes(p["nodes"]), barrier_slack=tol.barrier_slack
    )
    ctx.certify(
        profile_certificate(
            profile,
            residual_tol=tol.residual,
            barrier_slack=tol.barrier_slack,
            monotone_slack=tol.monotone_slack,
        )
    )
    decay = CertificateReport(name="decay_order")
    try:
        decay.details.update(fit_decay_order(profile).to_dict())
    except ExpanderLabError as e:
        decay.details["unavailable"] = str(e)
    ctx.certify(decay)
    stem = f"curve_kappa{profile.kappa:g}"
    if ctx.wants("csv"):
        ctx.record(write_profile_csv(profile, ctx.path(f"{stem}.csv")), "y, u, u', k, k^2")
    if ctx.wants("svg"):
        ctx.record(write_profile_svg(profile, ctx.path(f"{stem}.svg")), "Curve against barriers")
    _write_results_json(ctx, stem)


def _run_dirichlet(ctx: RunContext) -> None:
    p, tol = ctx.params, ctx.tolerances
    try:
        boundary = BOUNDARY_DATA[p["data"]](p["kappa"])
    except KeyError:
        msg = f"unknown boundary data {p['data']!r}; choose from {', '.join(BOUNDARY_DATA)}"
        raise ConfigError(msg) from None
    disk = solve_dirichlet_disk(
        boundary,
        p["R"],
        radial_nodes=ctx.nodes(p["radial_nodes"]),
        angular_nodes=p["angular_nodes"],
    )
    ctx.certify(_residual_report("disk_residual", disk_residual(disk), tol.disk_residual))
    if disk.R >= 10:
        ctx.certify(uniqueness_estimate_check(disk, slack=tol.uniqueness_slack))
    area = weighted_area(disk)
    stem = f"dirichlet_{boundary.label}"
    if ctx.wants("csv"):
        ctx.record(write_field_csv(disk, ctx.path(f"{stem}.csv")), "x1, x2, u on the polar grid")
    if ctx.wants("svg"):
        ctx.record(write_field_svg(disk, ctx.path(f"{stem}.svg")), "Contour plot of u")
    _write_results_json(
        ctx, stem, {"log_weighted_area": area.log_value, "log_space": area.log_space}
    )


def _run_latitude(ctx: RunContext) -> None:
    p, tol = ctx.params, ctx.tolerances
    band = (p["theta1"], p["theta2"])
    resolution = ctx.nodes(p["nodes"])
    epsilons = [p["epsilon"]] if math.isinf(p["epsilon"]) else [p["epsilon"], math.inf]
    fields = [solve_latitude_band(eps, band, p["n"], resolution) for eps in epsilons]
    for solved in fields:
        label = f"latitude_residual_eps{solved.epsilon:g}"
        ctx.certify(_residual_report(label, latitude_residual(solved), tol.latitude_residual))
    curvature = CertificateReport(name="latitude_leaf_mean_curvature")
    leaf = latitude_leaf_mean_curvature(fields[0])
    curvature.details.update(minimum=float(leaf.min()), gradient_sup=fields[0].gradient_sup)
    if math.isfinite(fields[0].epsilon):
        curvature.check(bool(np.all(leaf > 0)), "leaf mean curvature is not positive")
    ctx.certify(curvature)
    if len(fields) > 1:
        comparison = latitude_epsilon_comparison(
            epsilons, band, p["n"], resolution, slack=tol.ordering_slack
        )
        ctx.certify(comparison)
    if ctx.wants("csv"):
        for solved in fields:
            path = ctx.path(f"latitude_eps{solved.epsilon:g}.csv")
            ctx.record(write_latitude_csv(solved, path), f"theta, U for eps={solved.epsilon:g}")
    if ctx.wants("svg"):
        ctx.record(write_latitude_svg(fields, ctx.path("latitude.svg")), "Latitude solutions")
    _write_results_json(ctx, "latitude")


def _run_flow(ctx: RunContext) -> None:
    p, tol = ctx.params, ctx.tolerances
    nodes = ctx.nodes(p["nodes"])
    oracle_nodes = 10 * (nodes - 1) + 1
    ctx.certify(
        normalized_convergence(
            p["kappa"],
            p["R"],
            p["T"],
            nodes,
            n=p["n"],
            oracle_nodes=oracle_nodes,
            tol=tol.convergence_error,
        )
    )
    if ctx.wants("csv"):
        trace = SelfSimilarTrace(p["n"], p["kappa"], 4.0 * p["R"], oracle_nodes)
        state = radial_state(
            lambda r: trace(r, 0.0),
            n=p["n"],
            R=p["R"],
            nodes=nodes,
            dt=0.05,
            scheme=FlowScheme.SEMI_IMPLICIT,
            boundary=lambda t: trace(p["R"], t),
            kappa=p["kappa"],
        )
        steps = max(1, math.ceil(p["T"] / state.dt))
        trajectory = evolve(state, p["T"], keep_every=max(1, steps // 10))
        for path in write_trajectory(trajectory, ctx.config.output_dir, svg=ctx.wants("svg")):
            ctx.record(path, "Flow from the cone")
    _write_results_json(ctx, "flow")


def _run_reparam(ctx: RunContext) -> None:
    p, tol = ctx.params, ctx.tolerances
    common = {"n": p["n"], "R": p["R"], "nodes": ctx.nodes(p["nodes"]), "dt": p["dt"]}
    ctx.certify(
        reparametrization_check(p["s"], p["T"], min_ratio=tol.flow_refinement_ratio, **common)
    )
    if p["s"] > 0:
        ctx.certify(reparametrization_transitivity((0.5 * p["s"], p["s"]), p["T"], **common))
    if ctx.wants("csv"):
        state = radial_state(gaussian_bump(), s=p["s"], **common)
        steps = max(1, math.ceil(p["T"] / p["dt"]))
        trajectory = evolve(state, p["T"], keep_every=max(1, steps // 10))
        written = write_trajectory(
            trajectory, ctx.config.output_dir, stem="sflow", svg=ctx.wants("svg")
        )
        for path in written:
            ctx.record(path, f"s-flow of a Gaussian bump, s={p['s']:g}")
    _write_results_json(ctx, "reparam")


def _run_translator(ctx: RunContext) -> None:
    p, tol = ctx.params, ctx.tolerances
    params = TranslatorParams(epsilon=p["epsilon"], lambda_=p["lambda"], rho0=p["rho0"], n=p["n"])
    resolution = ctx.nodes(p["nodes"])
    profile = solve_translator(params, resolution)
    ctx.certify(
        _residual_report(
            "translator_residual", translator_residual(profile, params), tol.translator_residual
        ),
        _residual_report("hs_identity", hs_identity_residual(profile, params), tol.hs_identity),
        arrival_time_limit(p["epsilon"], p["lambdas"], resolution, n=p["n"], rho0=p["rho0"]),
    )
    window = (params.rho0 / 4.0, 3.0 * params.rho0 / 4.0)
    arrival = profile.values / params.lambda_
    columns = {"r": profile.r, "phi": profile.values, "v": arrival}
    if params.n >= 3:
        columns["v_exact"] = arrival_time_exact(profile.r, params.epsilon, params.rho0, params.n)
    stem = f"translator_eps{params.epsilon:g}_lambda{params.lambda_:g}"
    if ctx.wants("csv"):
        ctx.record(write_columns_csv(ctx.path(f"{stem}.csv"), columns), "r, phi, v = phi/lambda")
    if ctx.wants("svg"):
        curves = [(profile.r, arrival, f"phi/lambda, lambda={params.lambda_:g}")]
        if "v_exact" in columns:
            curves.append((profile.r, columns["v_exact"], "arrival time"))
        path = write_curves_svg(
            ctx.path(f"{stem}.svg"), curves, xlabel="r", ylabel="v", title="translator"
        )
        ctx.record(path, "Translator against the arrival time")
    _write_results_json(
        ctx, stem, {"arrival_time_residual": arrival_time_residual(profile, params, window)}
    )


def _run_spectral(ctx: RunContext) -> None:
    p, tol = ctx.params, ctx.tolerances
    params = SpectralParams(
        n=p["n"], lambda1=p["lambda1"], eps=p["eps"], delta=p["delta"], R=p["R"]
    )
    ctx.certify(gamma_identity_check(params, tol=tol.gamma_identity))
    row = spectral_row(params)
    label = stability_classify(ConeEigendata(params.n, params.lambda1))
    logger.info("Cone classified", n=params.n, lambda1=params.lambda1, stability=label.value)
    if ctx.wants("csv"):
        ctx.record(write_spectral_csv([row], ctx.path("spectral.csv")), "I0 table")
    _write_results_json(ctx, "spectral", [row.model_dump()])


def _run_density_table(ctx: RunContext) -> None:
    p = ctx.params
    rows, report = sqrt2_table(p["k_max"])
    ctx.certify(report)
    if ctx.wants("csv"):
        ctx.record(write_density_csv(rows, ctx.path("density_table.csv")), "sqrt(2) table")
    if ctx.wants("svg"):
        k = np.array([row.k for row in rows], dtype=float)
        curves = [
            (k, np.array([row.theta_simons for row in rows]), "Simons cone density"),
            (k, np.array([row.d_k for row in rows]), "d_k"),
            (k, np.full_like(k, SQRT2), "sqrt(2)"),
        ]
        path = write_curves_svg(
            ctx.path("density_table.svg"), curves, xlabel="k", ylabel="value", title="sqrt(2) gap"
        )
        ctx.record(path, "Densities and entropies against sqrt(2)")
    _write_results_json(ctx, "density_table", [row.model_dump() for row in rows])


# =============================================================================
# VERIFICATION SUITES
# =============================================================================


@dataclass(frozen=True)
class VerificationSuite:
    """A group of acceptance checks run as one unit of work.

    Attributes:
        name: Suite identifier.
        run: Callable from (tolerances, quick) to certificates.
    """

    name: str
    run: Callable[[Tolerances, bool], list[CertificateReport]]


def _suite_densities(tol: Tolerances, quick: bool) -> list[CertificateReport]:
    rotational = CertificateReport(name="rotational_cone_density")
    for n, kappa in ((2, 1.0), (3, 0.5), (5, 2.0)):
        density = rotational_cone_density(n, kappa)
        gap = abs(density.quadrature - density.closed_form)
        rotational.details[f"n={n},kappa={kappa:g}"] = gap
        rotational.check(gap <= tol.density, f"n={n}, kappa={kappa:g}: gap {gap:.3e}")
    _, table = sqrt2_table(10)
    return [
        entropy_chain_check(),
        simons_density_check(gaussian_tol=tol.density),
        gaussian_density_identity(product_cone_spec(1, 5), tol.density),
        table,
        rotational,
    ]


def _suite_rotational(tol: Tolerances, quick: bool) -> list[CertificateReport]:
    nodes = 2001 if quick else 4001
    reports = []
    for n in (3, 5, 7):
        for kappa in (0.5, 1.0, 2.0):
            profile = solve_rotational(n, kappa, 20.0, nodes=nodes, barrier_slack=tol.barrier_slack)
            reports.append(
                profile_certificate(
                    profile,
                    residual_tol=tol.residual,
                    barrier_slack=tol.barrier_slack,
                    monotone_slack=tol.monotone_slack,
                )
            )
            reports.append(_asymptotic_report(profile, tol.asymptotic_relative))
    step = 0.02 if quick else 0.01
    reports.append(entire_limit_bounds(3, 1.0, [5.0, 10.0, 20.0], step=step))
    reports.append(initial_guess_uniqueness(3, 1.0, 20.0, nodes=nodes))
    return reports


def _suite_curves(tol: Tolerances, quick: bool) -> list[CertificateReport]:
    nodes = 1001 if quick else 2001
    reports = [
        profile_certificate(
            solve_1d(kappa, 10.0, nodes=nodes, barrier_slack=tol.barrier_slack),
            residual_tol=tol.residual,
            barrier_slack=tol.barrier_slack,
            monotone_slack=tol.monotone_slack,
        )
        for kappa in (1.0, 3.0)
    ]
    reports.append(initial_guess_uniqueness(1, 1.0, 10.0, nodes=nodes))
    return reports


def _instability_samples() -> list[tuple[int, float]]:
    """Twenty (n, λ₁) pairs strictly inside the unstable range."""
    return [
        (n, -((n - 2) ** 2) / 4.0 - depth)
        for n in (3, 4, 5, 6, 7)
        for depth in (0.05, 0.3, 1.0, 3.0)
    ]


def _l0_samples() -> list[tuple[int, float, float, float]]:
    """Ten (n, τ, s, r) points for the operator identities."""
    return [
        (n, tau, s, r)
        for n, (tau, s, r) in zip(
            (3, 3, 4, 4, 5, 5, 6, 6, 7, 7),
            [
                (0.5, 0.0, 1.0),
                (2.0, 0.5, 2.5),
                (1.5, -0.5, 1.5),
                (3.0, 1.0, 3.0),
                (0.0, 0.25, 0.8),
                (4.0, -1.0, 2.0),
                (2.5, 2.0, 1.2),
                (1.0, 0.0, 3.5),
                (3.5, -0.25, 0.9),
                (6.0, 0.75, 2.2),
            ],
            strict=True,
        )
    ]


def _suite_spectral(tol: Tolerances, quick: bool) -> list[CertificateReport]:
    triples = ((3, -0.25, 0.05), (5, -2.25, 0.1), (7, -6.0, 0.2))
    reports = [
        gamma_identity_check(SpectralParams(n=n, lambda1=lam, eps=eps), tol=tol.gamma_identity)
        for n, lam, eps in triples
    ]
    reports.append(instability_scan(_instability_samples()))
    reports.append(simons_flip())
    reports.append(l0_order_check(_l0_samples(), min_order=tol.l0_order))
    return reports


def _suite_dirichlet(tol: Tolerances, quick: bool) -> list[CertificateReport]:
    radial_nodes = 101 if quick else 201
    pairs = 12 if quick else 50
    bumps = 30 if quick else 100
    reports = [
        rotational_consistency(
            1.0, 20.0, radial_nodes=radial_nodes, tol=tol.rotational_crosscheck
        ),
        linear_exactness_check(
            0.6, -0.3, 20.0, radial_nodes=radial_nodes, tol=tol.linear_exactness
        ),
    ]
    disk = solve_dirichlet_disk(BoundaryData.abs_x1(), 20.0, radial_nodes=radial_nodes)
    reports.append(uniqueness_estimate_check(disk, slack=tol.uniqueness_slack))
    reports.append(e_minimality_check(disk, bumps=bumps, slack=tol.e_minimality))
    ordering = CertificateReport(name="comparison_ordering_sweep")
    rng = np.random.default_rng(0)
    for _ in range(pairs):
        lower, upper = random_boundary_pair(rng)
        ordering.merge(
            comparison_ordering(lower, upper, 10.0, radial_nodes=41, slack=tol.ordering_slack)
        )
    ordering.details["pairs"] = pairs
    reports.append(ordering)
    return reports


def _suite_latitude(tol: Tolerances, quick: bool) -> list[CertificateReport]:
    resolution = 401 if quick else 801
    return [
        latitude_epsilon_comparison(
            [0.5, 1.0, math.inf], (0.5, 2.0), 3, resolution, slack=tol.ordering_slack
        ),
        nested_band_check(1.0, (0.6, 1.8), (0.5, 2.0), 3, resolution),
    ]


def _suite_flow(tol: Tolerances, quick: bool) -> list[CertificateReport]:
    nodes = 401 if quick else 801
    ratio = tol.flow_refinement_ratio
    return [
        fixed_point_drift(min_ratio=ratio),
        reparametrization_check(min_ratio=ratio),
        h_evolution_check(min_ratio=ratio),
        normalized_convergence(
            1.0, 40.0, 25.0, nodes, oracle_nodes=10 * (nodes - 1) + 1, tol=tol.convergence_error
        ),
    ]


def _suite_translators(tol: Tolerances, quick: bool) -> list[CertificateReport]:
    resolution = 501 if quick else 1001
    params = TranslatorParams(epsilon=1.0, lambda_=10.0)
    profile = solve_translator(params, resolution)
    return [
        _residual_report(
            "translator_residual", translator_residual(profile, params), tol.translator_residual
        ),
        _residual_report("hs_identity", hs_identity_residual(profile, params), tol.hs_identity),
        arrival_time_limit(1.0, (10.0, 100.0, 1000.0), resolution),
    ]


def _suite_monotonicity(tol: Tolerances, quick: bool) -> list[CertificateReport]:
    profile = solve_rotational(3, 1.0, 20.0, nodes=2001 if quick else 4001)
    return [
        monotonicity_identity_check(
            profile,
            [2.0, 4.0, 8.0],
            tol=tol.monotonicity_mismatch,
            refinement_step=0.08,
            min_reduction=tol.refinement_ratio,
        )
    ]


VERIFICATION_SUITES: tuple[VerificationSuite, ...] = (
    VerificationSuite("densities", _suite_densities),
    VerificationSuite("rotational_expanders", _suite_rotational),
    VerificationSuite("curve_expanders", _suite_curves),
    VerificationSuite("stability_functional", _suite_spectral),
    VerificationSuite("dirichlet_disk", _suite_dirichlet),
    VerificationSuite("latitude_bands", _suite_latitude),
    VerificationSuite("flows", _suite_flow),
    VerificationSuite("translators", _suite_translators),
    VerificationSuite("monotonicity", _suite_monotonicity),
)


def _run_suite(suite: VerificationSuite, tol: Tolerances, quick: bool) -> list[CertificateReport]:
    """Run one suite; a numerical failure becomes a failed certificate."""
    log = logger.bind(suite=suite.name)
    log.info("Suite started")
    try:
        reports = suite.run(tol, quick)
    except ExpanderLabError as e:
        failed = CertificateReport(name=suite.name)
        failed.check(False, f"{type(e).__name__}: {e}")
        log.warning("Suite aborted", error=str(e))
        return [failed]
    for report in reports:
        report.details.setdefault("suite", suite.name)
    log.info("Suite finished", passed=all(r.passed for r in reports))
    return reports


def run_verification(
    tolerances: Tolerances,
    *,
    quick: bool,
    workers: int = 1,
    suites: Sequence[VerificationSuite] = VERIFICATION_SUITES,
) -> list[CertificateReport]:
    """Run acceptance suites concurrently, keeping the suite order in the output.

    Args:
        tolerances: Thresholds for every check.
        quick: Reduced resolutions.
        workers: Worker-pool size.
        suites: Suites to run.

    Returns:
        Every certificate, grouped by suite.
    """
    with ThreadPoolExecutor(max_workers=max(1, min(workers, len(suites)))) as pool:
        futures = [pool.submit(_run_suite, suite, tolerances, quick) for suite in suites]
        return [report for future in futures for report in future.result()]


def _run_verify_all(ctx: RunContext) -> None:
    workers = resolve_thread_count()
    reports = run_verification(ctx.tolerances, quick=ctx.config.quick, workers=workers)
    ctx.certify(*reports)
    if ctx.wants("csv"):
        rows = (
            (report.details.get("suite", ""), report.name, report.passed, len(report.failures))
            for report in reports
        )
        header = ["suite", "certificate", "passed", "failures"]
        path = write_csv(ctx.path("verify_all.csv"), header, rows)
        ctx.record(path, "Certificate summary")
    _write_results_json(ctx, "verify_all")


COMMAND_RUNNERS: dict[CommandName, Callable[[RunContext], None]] = {
    CommandName.SOLVE_ROTATIONAL: _run_solve_rotational,
    CommandName.SOLVE_1D: _run_solve_1d,
    CommandName.DIRICHLET: _run_dirichlet,
    CommandName.LATITUDE: _run_latitude,
    CommandName.FLOW: _run_flow,
    CommandName.REPARAM: _run_reparam,
    CommandName.TRANSLATOR: _run_translator,
    CommandName.SPECTRAL: _run_spectral,
    CommandName.DENSITY_TABLE: _run_density_table,
    CommandName.VERIFY_ALL: _run_verify_all,
}


# =============================================================================
# ORCHESTRATION
# =============================================================================


def execute(config: ExperimentConfig) -> tuple[int, Manifest | None]:
    """Run one experiment and write its manifest.

    Args:
        config: Resolved configuration.

    Returns:
        (exit status, manifest); the manifest is None on usage errors.
    """
    ctx = RunContext(config)
    try:
        config.output_dir.mkdir(parents=True, exist_ok=True)
        COMMAND_RUNNERS[config.command](ctx)
    except ConfigError as e:
        console.print(f"[red]Error: {e}[/]", highlight=False)
        return EXIT_USAGE, None
    except ExpanderLabError as e:
        failed = CertificateReport(name=config.command.value)
        failed.check(False, f"{type(e).__name__}: {e}")
        ctx.certify(failed)
        console.print(f"[red]Error: {e}[/]", highlight=False)
    except ValueError as e:
        # argument validation in dataclass __post_init__
        console.print(f"[red]Error: {e}[/]", highlight=False)
        return EXIT_USAGE, None
    except OSError as e:
        console.print(f"[red]Error: cannot write output: {e}[/]", highlight=False)
        return EXIT_USAGE, None
    manifest = ctx.manifest()
    write_json(config.output_dir / MANIFEST_NAME, manifest.model_dump(mode="json"))
    logger.info(
        "Run finished",
        command=config.command.value,
        files=len(manifest.files),
        passed=manifest.passed,
    )
    return (EXIT_OK if manifest.passed else EXIT_FAILURE), manifest


def run(config: ExperimentConfig) -> int:
    """Run one experiment.

    Args:
        config: Resolved configuration.

    Returns:
        0 on success, 1 on a numerical failure or failed certificate,
        2 on a usage error.
    """
    code, _ = execute(config)
    return code


def _print_summary(manifest: Manifest) -> None:
    """Render the certificates as a rich table."""
    table = Table(title=f"expanderlab {manifest.command}")
    table.add_column("Certificate", style="cyan")
    table.add_column("Status")
    table.add_column("First failure", overflow="fold")
    for record in manifest.certificates:
        status = "[green]PASSED[/]" if record.passed else "[red]FAILED[/]"
        table.add_row(record.name, status, record.failures[0] if record.failures else "")
    console.print(table)
    console.print(f"Files written: {len(manifest.files)} (+ {MANIFEST_NAME})")


# =============================================================================
# ARGUMENT PARSING
# =============================================================================

_COMMAND_HELP: dict[CommandName, tuple[str, str]] = {
    CommandName.SOLVE_ROTATIONAL: (
        "Solve the rotational self-expander over a cone",
        "expanderlab solve-rotational --n 3 --kappa 1 --R 20",
    ),
    CommandName.SOLVE_1D: (
        "Solve the expanding curve over a pair of rays",
        "expanderlab solve-1d --kappa 3 --R 10",
    ),
    CommandName.DIRICHLET: (
        "Solve the graphical Dirichlet problem on a disk",
        "expanderlab dirichlet --data abs_x1 --R 20 --formats csv,svg",
    ),
    CommandName.LATITUDE: (
        "Solve the latitude band problem on a sphere",
        "expanderlab latitude --epsilon 0.5 --theta1 0.5 --theta2 2.0",
    ),
    CommandName.FLOW: (
        "Flow a cone and certify convergence to its expander",
        "expanderlab flow --kappa 1 --R 40 --T 25",
    ),
    CommandName.REPARAM: (
        "Compare an s-flow with the rescaled mean curvature flow",
        "expanderlab reparam --s 0.5 --T 0.5",
    ),
    CommandName.TRANSLATOR: (
        "Solve the elliptic regularization and its arrival-time limit",
        "expanderlab translator --epsilon 1 --lambda 100",
    ),
    CommandName.SPECTRAL: (
        "Evaluate the stability functional over a cone",
        "expanderlab spectral --n 5 --lambda1 -2.25 --eps 0.1",
    ),
    CommandName.DENSITY_TABLE: (
        "Tabulate Simons cone densities and sphere entropies against sqrt(2)",
        "expanderlab density-table --k-max 10 --formats csv",
    ),
    CommandName.VERIFY_ALL: (
        "Run every acceptance check",
        "expanderlab verify-all --quick",
    ),
}


def _parse_formats(raw: str) -> frozenset[str]:
    formats = frozenset(part.strip() for part in raw.split(",") if part.strip())
    unknown = sorted(formats - SUPPORTED_FORMATS)
    if unknown or not formats:
        msg = f"formats must be a comma-separated subset of {sorted(SUPPORTED_FORMATS)}"
        raise argparse.ArgumentTypeError(msg)
    return formats


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config",
        type=Path,
        help="JSON file mirroring the experiment configuration; flags override it",
    )
    parser.add_argument(
        "-o",
        "--output-dir",
        type=Path,
        help="Directory receiving every artifact (default: output)",
    )
    parser.add_argument(
        "--formats",
        type=_parse_formats,
        help="Comma-separated artifact formats: csv, json, svg (default: csv,json)",
    )
    parser.add_argument(
        "--quick",
        action="store_true",
        default=None,
        help="Reduced resolution with relaxed tolerances",
    )
    parser.add_argument(
        "--json",
        action="store_true",
        help="Print the manifest as JSON instead of the summary table",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="store_true",
        help="Log solver progress to stderr",
    )


def _create_command_parser(
    subparsers: argparse._SubParsersAction, command: CommandName
) -> None:
    """Create a subcommand parser with one flag per parameter.

    Args:
        subparsers: Subparsers action from the main parser.
        command: Command whose parameters become flags.
    """
    summary, example = _COMMAND_HELP[command]
    parser = subparsers.add_parser(
        command.value,
        help=summary,
        description=summary,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=f"""
Example:
  {example}
        """,
    )
    for name, default in DEFAULT_PARAMETERS[command].items():
        flag = "--" + name.replace("_", "-")
        if isinstance(default, list):
            parser.add_argument(
                flag, dest=name, type=float, nargs="+", help=f"(default: {default})"
            )
        else:
            parser.add_argument(
                flag, dest=name, type=type(default), help=f"(default: {default})"
            )
    _add_common_arguments(parser)


def build_parser() -> argparse.ArgumentParser:
    """Build the top-level parser."""
    parser = argparse.ArgumentParser(
        prog="expanderlab",
        description="Numerical laboratory for self-expanders of mean curvature flow",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  expanderlab solve-rotational --n 3 --kappa 1 --R 20
  expanderlab density-table --k-max 10 --formats csv
  expanderlab verify-all --quick

Exit status:
  0  every certificate passed
  1  numerical failure or failed certificate
  2  usage error

Environment variables:
  EXPANDERLAB_THREADS  - Worker cap for verify-all (positive integer)
        """,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", help="Experiment to run")
    for command in CommandName:
        _create_command_parser(subparsers, command)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """Merge a config file (if any) with the flags given on the command line.

    Raises:
        ConfigError: If the file disagrees with the subcommand or is invalid.
    """
    command = CommandName(args.command)
    if args.config is not None:
        base = ExperimentConfig.from_json(args.config)
        if base.command is not command:
            msg = f"config file is for {base.command.value}, not {command.value}"
            raise ConfigError(msg)
    else:
        base = ExperimentConfig(command=command)
    overrides = {
        name: getattr(args, name)
        for name in DEFAULT_PARAMETERS[command]
        if getattr(args, name, None) is not None
    }
    return ExperimentConfig(
        command=command,
        parameters={**base.parameters, **overrides},
        output_dir=args.output_dir if args.output_dir is not None else base.output_dir,
        formats=args.formats if args.formats is not None else base.formats,
        quick=args.quick if args.quick is not None else base.quick,
    )


def _configure_logging(verbose: bool) -> None:
    """Send structlog events to stderr, INFO with --verbose and WARNING otherwise."""
    level = logging.INFO if verbose else logging.WARNING
    logging.basicConfig(level=level, stream=sys.stderr, format="%(message)s")
    structlog.configure(
        wrapper_class=structlog.make_filtering_bound_logger(level),
        logger_factory=structlog.PrintLoggerFactory(sys.stderr),
    )


def main(argv: Sequence[str] | None = None) -> None:
    """Run the expanderlab CLI.

    Args:
        argv: Arguments (defaults to ``sys.argv[1:]``).
    """
    load_dotenv()

    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        raise SystemExit(EXIT_USAGE)

    _configure_logging(args.verbose)
    try:
        config = config_from_args(args)
    except ConfigError as e:
        console.print(f"[red]Error: {e}[/]", highlight=False)
        raise SystemExit(EXIT_USAGE) from None

    try:
        code, manifest = execute(config)
    except KeyboardInterrupt:
        console.print("\n[yellow]Run interrupted by user[/]")
        raise SystemExit(EXIT_FAILURE) from None

    if manifest is not None:
        if args.json:
            sys.stdout.write(manifest.model_dump_json(indent=2) + "\n")
        else:
            _print_summary(manifest)
    raise SystemExit(code)


if __name__ == "__main__":
    main()
