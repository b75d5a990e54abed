"""Tests for certificate reports and artifact writers."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from expanderlab.export import (
    format_number,
    write_columns_csv,
    write_csv,
    write_curves_svg,
    write_json,
)
from expanderlab.reports import CertificateReport


class TestCertificateReport:
    """Tests for CertificateReport."""

    def test_check_records_failures(self) -> None:
        report = CertificateReport(name="demo")
        assert report.check(True, "never stored")
        assert not report.check(False, "gap too large")
        assert not report.passed
        assert report.failures == ["gap too large"]

    def test_merge_prefixes_failures(self) -> None:
        parent = CertificateReport(name="parent")
        child = CertificateReport(name="child")
        child.check(False, "bad")
        parent.merge(child)
        assert not parent.passed
        assert parent.failures == ["child: bad"]
        assert parent.details["child"]["passed"] is False

    def test_merge_of_passing_report(self) -> None:
        parent = CertificateReport(name="parent")
        parent.merge(CertificateReport(name="child", details={"x": 1.0}))
        assert parent.passed
        assert parent.details["child"]["details"] == {"x": 1.0}

    def test_to_dict_is_json_compatible(self) -> None:
        """Verify numpy values and non-finite floats serialize."""
        report = CertificateReport(
            name="demo",
            details={
                "nan": math.nan,
                "inf": np.inf,
                "count": np.int64(3),
                "flag": np.bool_(True),
                "array": np.array([1.0, -np.inf]),
            },
        )
        data = report.to_dict()
        assert data["details"] == {
            "nan": "nan",
            "inf": "inf",
            "count": 3,
            "flag": True,
            "array": [1.0, "-inf"],
        }
        json.dumps(data)

    def test_to_markdown(self) -> None:
        report = CertificateReport(name="demo", details={"gap": 0.5, "rows": [1, 2]})
        report.check(False, "gap too large")
        markdown = report.to_markdown()
        assert markdown.startswith("## demo")
        assert "**Status:** FAILED" in markdown
        assert "| gap | 0.5 |" in markdown
        assert "rows" not in markdown
        assert "### Failures" in markdown
        assert "- gap too large" in markdown


class TestFormatNumber:
    """Tests for CSV cell formatting."""

    @pytest.mark.parametrize(
        ("value", "expected"),
        [
            (True, "true"),
            (np.bool_(False), "false"),
            (7, "7"),
            (np.int32(-2), "-2"),
            (0.1, "0.10000000000000001"),
            (2.0, "2"),
            ("stable", "stable"),
        ],
    )
    def test_format(self, value: object, expected: str) -> None:
        assert format_number(value) == expected


class TestWriters:
    """Tests for CSV, JSON and SVG writers."""

    def test_csv_uses_crlf_and_creates_parents(self, tmp_path) -> None:
        path = write_csv(tmp_path / "a" / "b.csv", ["x", "y"], [(1, 0.5), (2, 1.5)])
        assert path.read_bytes() == b"x,y\r\n1,0.5\r\n2,1.5\r\n"

    def test_columns_csv(self, tmp_path) -> None:
        path = write_columns_csv(
            tmp_path / "c.csv", {"r": np.array([0.0, 1.0]), "u": np.array([1.0, 2.0])}
        )
        assert path.read_text(encoding="utf-8").splitlines() == ["r,u", "0,1", "1,2"]

    def test_columns_csv_rejects_ragged_columns(self, tmp_path) -> None:
        with pytest.raises(ValueError):
            write_columns_csv(tmp_path / "c.csv", {"r": np.zeros(2), "u": np.zeros(3)})

    def test_json_sorted_with_newline(self, tmp_path) -> None:
        path = write_json(tmp_path / "d.json", {"b": 1, "a": 2})
        text = path.read_text(encoding="utf-8")
        assert text.endswith("}\n")
        assert text.index('"a"') < text.index('"b"')

    def test_svg_is_reproducible(self, tmp_path) -> None:
        """Verify two renders of the same curves give identical bytes."""
        x = np.linspace(0.0, 1.0, 11)
        curves = [(x, x**2, "square")]
        first = write_curves_svg(tmp_path / "a.svg", curves, xlabel="x", ylabel="y")
        second = write_curves_svg(tmp_path / "b.svg", curves, xlabel="x", ylabel="y")
        assert first.read_bytes() == second.read_bytes()
        assert b"<svg" in first.read_bytes()
