"""CSV, JSON and SVG artifact writers.

Numbers are written with 17 significant digits and a ``.`` decimal
separator independent of locale, so re-running a command reproduces the
CSV bytes exactly. SVG plots go through matplotlib's Agg/SVG backends with
a fixed hash salt and no date metadata.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
import csv
import json
from pathlib import Path
from typing import Any

import matplotlib as mpl

mpl.use("Agg")

from matplotlib.figure import Figure  # noqa: E402
import numpy as np  # noqa: E402
import structlog  # noqa: E402

from .config import CSV_SIGNIFICANT_DIGITS  # noqa: E402

logger = structlog.get_logger(__name__)

_SVG_RC = {
    "svg.hashsalt": "expanderlab",
    "svg.fonttype": "none",
    "font.family": "DejaVu Sans",
    "axes.grid": True,
    "grid.alpha": 0.3,
}


def format_number(value: Any) -> str:
    """Format one CSV cell.

    Floats use 17 significant digits; integers, booleans and strings are
    written as-is.
    """
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), f".{CSV_SIGNIFICANT_DIGITS}g")
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write an RFC-4180 CSV file with a header row.

    Args:
        path: Destination file; parent directories are created.
        header: Column names.
        rows: Row values.

    Returns:
        The written path.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        count = 0
        for row in rows:
            writer.writerow([format_number(v) for v in row])
            count += 1
    logger.debug("Wrote CSV", path=str(path), rows=count)
    return path


def write_columns_csv(path: Path, columns: dict[str, np.ndarray]) -> Path:
    """Write equal-length named columns as CSV."""
    names = list(columns)
    arrays = [np.asarray(columns[name]) for name in names]
    return write_csv(path, names, zip(*arrays, strict=True))


def write_json(path: Path, payload: Any) -> Path:
    """Write JSON with sorted keys and a trailing newline."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _save_svg(fig: Figure, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with mpl.rc_context(_SVG_RC):
        fig.savefig(path, format="svg", metadata={"Date": None})
    logger.debug("Wrote SVG", path=str(path))
    return path


def write_curves_svg(
    path: Path,
    curves: Sequence[tuple[np.ndarray, np.ndarray, str]],
    *,
    xlabel: str,
    ylabel: str,
    title: str = "",
) -> Path:
    """Plot one or more polylines on shared axes.

    Args:
        path: Destination SVG file.
        curves: (x, y, label) triples.
        xlabel: Horizontal axis label.
        ylabel: Vertical axis label.
        title: Optional title.

    Returns:
        The written path.
    """
    with mpl.rc_context(_SVG_RC):
        fig = Figure(figsize=(6.4, 4.0))
        ax = fig.add_subplot()
        for x, y, label in curves:
            ax.plot(x, y, linewidth=1.2, label=label or None)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if any(label for _, _, label in curves):
            ax.legend(fontsize="small")
        fig.tight_layout()
    return _save_svg(fig, path)


def write_contour_svg(
    path: Path,
    x: np.ndarray,
    y: np.ndarray,
    z: np.ndarray,
    *,
    title: str = "",
    levels: int = 16,
) -> Path:
    """Filled contour plot of scattered samples (triangulated).

    Args:
        path: Destination SVG file.
        x: First coordinates of the samples.
        y: Second coordinates of the samples.
        z: Sampled values.
        title: Optional title.
        levels: Number of contour levels.

    Returns:
        The written path.
    """
    with mpl.rc_context(_SVG_RC):
        fig = Figure(figsize=(5.0, 4.4))
        ax = fig.add_subplot()
        filled = ax.tricontourf(np.ravel(x), np.ravel(y), np.ravel(z), levels=levels)
        ax.tricontour(
            np.ravel(x), np.ravel(y), np.ravel(z), levels=levels, colors="k", linewidths=0.3
        )
        fig.colorbar(filled, ax=ax)
        ax.set_aspect("equal")
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
        if title:
            ax.set_title(title)
        fig.tight_layout()
    return _save_svg(fig, path)
