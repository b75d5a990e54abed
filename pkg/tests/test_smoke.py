"""Smoke tests for the expanderlab package.

Verifies the package can be imported and key symbols are accessible.
"""

from __future__ import annotations


def test_package_import() -> None:
    """Verify the package imports without errors."""
    import expanderlab

    assert hasattr(expanderlab, "__version__")


def test_version_is_string() -> None:
    """Verify the version is a valid string."""
    from expanderlab import __version__

    assert isinstance(__version__, str)
    assert len(__version__) > 0


def test_core_exports_available() -> None:
    """Verify key public symbols are importable."""
    from expanderlab import (
        BoundaryData,
        CertificateReport,
        ExperimentConfig,
        I0_closed_form,
        solve_rotational,
        solve_translator,
    )

    assert BoundaryData is not None
    assert CertificateReport is not None
    assert ExperimentConfig is not None
    assert callable(I0_closed_form)
    assert callable(solve_rotational)
    assert callable(solve_translator)


def test_all_exports_resolve() -> None:
    """Verify every name in __all__ exists on the package."""
    import expanderlab

    missing = [name for name in expanderlab.__all__ if not hasattr(expanderlab, name)]
    assert missing == []


def test_cli_entry_point_importable() -> None:
    """Verify the console script target exists."""
    from expanderlab.cli import main

    assert callable(main)


def test_exception_hierarchy() -> None:
    """Verify input errors are also ValueErrors and share the package base."""
    from expanderlab import ConfigError, ConvergenceError, DomainError, ExpanderLabError

    assert issubclass(DomainError, ValueError)
    assert issubclass(ConfigError, ValueError)
    assert issubclass(DomainError, ExpanderLabError)
    assert issubclass(ConvergenceError, ExpanderLabError)
    assert not issubclass(ConvergenceError, ValueError)
