"""Pytest configuration and shared test fixtures.

This module provides small solved profiles, fields and output directories
shared across the expanderlab tests.
"""

from __future__ import annotations

from pathlib import Path

import pytest

from expanderlab.config import Tolerances

# =============================================================================
# TOLERANCE FIXTURES
# =============================================================================


@pytest.fixture
def tolerances() -> Tolerances:
    """Provide the full-resolution tolerance preset."""
    return Tolerances.full()


@pytest.fixture
def quick_tolerances() -> Tolerances:
    """Provide the relaxed preset used by quick runs."""
    return Tolerances.quick()


# =============================================================================
# SOLVED PROFILE FIXTURES
# =============================================================================


@pytest.fixture(scope="session")
def rotational_profile():
    """Provide the n=3, κ=1 rotational expander on [0, 20].

    Returns:
        RadialProfile solved on 2001 nodes.
    """
    from expanderlab.expander_ode import solve_rotational

    return solve_rotational(3, 1.0, 20.0, nodes=2001)


@pytest.fixture(scope="session")
def planar_profile():
    """Provide the n=2, κ=1 rotational expander on [0, 10]."""
    from expanderlab.expander_ode import solve_rotational

    return solve_rotational(2, 1.0, 10.0, nodes=1001)


@pytest.fixture(scope="session")
def curve_profile():
    """Provide the κ=1 curve expander on [0, 10] with the reflection condition."""
    from expanderlab.expander_ode import solve_1d

    return solve_1d(1.0, 10.0, nodes=1001)


# =============================================================================
# DISK AND LATITUDE FIXTURES
# =============================================================================


@pytest.fixture(scope="session")
def cone_field():
    """Provide the disk solve of V = |x| on B_10.

    Returns:
        GraphField on 41 radial nodes and 16 angles.
    """
    from expanderlab.graph_solver import BoundaryData, solve_dirichlet_disk

    return solve_dirichlet_disk(BoundaryData.cone(1.0), 10.0, radial_nodes=41, angular_nodes=16)


@pytest.fixture(scope="session")
def latitude_field():
    """Provide the ε=0.5 latitude solution on (0.5, 2.0) in S³."""
    from expanderlab.graph_solver import solve_latitude_band

    return solve_latitude_band(0.5, (0.5, 2.0), n=3, resolution=401)


# =============================================================================
# OUTPUT FIXTURES
# =============================================================================


@pytest.fixture
def output_dir(tmp_path: Path) -> Path:
    """Provide an empty output directory for CLI and export tests."""
    path = tmp_path / "output"
    path.mkdir()
    return path
