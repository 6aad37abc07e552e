# ABOUTME: Tests for artifact persistence: hash-stamped CSV tables, summaries and manifests
# ABOUTME: Uses tmp_path output directories

import json
import math

from cocyclelab.experiments.artifacts import ArtifactWriter, format_cell
from cocyclelab.experiments.verdict import at_most


class TestFormatCell:
    """Tests for CSV cell formatting."""

    def test_floats_round_trip(self):
        """Floats keep 17 significant digits."""
        assert float(format_cell(0.1)) == 0.1
        assert format_cell(1 / 3) == "0.33333333333333331"

    def test_special_values(self):
        """NaN, booleans and None have fixed spellings."""
        assert format_cell(math.nan) == "nan"
        assert format_cell(True) == "true"
        assert format_cell(False) == "false"
        assert format_cell(None) == ""

    def test_integers_and_strings(self):
        """Integers and strings pass through."""
        assert format_cell(42) == "42"
        assert format_cell("be") == "be"


class TestArtifactWriter:
    """Tests for ArtifactWriter."""

    def test_csv_layout(self, tmp_path):
        """The hash comment comes first, then header and rows with LF endings."""
        writer = ArtifactWriter(tmp_path / "out", "abc123", "estimate")
        path = writer.write_csv("table.csv", ["n", "value"], [(1, 0.5), (2, math.nan)])
        raw = path.read_bytes()
        assert b"\r" not in raw
        assert raw.decode().splitlines() == ["# config_hash=abc123", "n,value", "1,0.5", "2,nan"]

    def test_empty_table_keeps_header(self, tmp_path):
        """Tables without rows still have the hash and the header."""
        writer = ArtifactWriter(tmp_path, "h", "spectrum")
        path = writer.write_csv("zeta.csv", ["t", "zeta"], [])
        assert path.read_text().splitlines() == ["# config_hash=h", "t,zeta"]

    def test_summary(self, tmp_path):
        """summary.txt has one line per criterion."""
        writer = ArtifactWriter(tmp_path, "h", "verify kernel")
        writer.write_summary([at_most("a", 0.5, 1.0), at_most("b", 2.0, 1.0)])
        lines = (tmp_path / "summary.txt").read_text().splitlines()
        assert lines[0].startswith("PASS a")
        assert lines[1].startswith("FAIL b")

    def test_manifest(self, tmp_path):
        """The manifest lists outputs, timings and the hash."""
        writer = ArtifactWriter(tmp_path, "h", "estimate")
        with writer.timed("estimate.lyapunov"):
            writer.write_csv("estimates.csv", ["quantity"], [("gamma",)])
        manifest = json.loads(writer.write_manifest().read_text())
        assert manifest["config_hash"] == "h"
        assert manifest["command"] == "estimate"
        assert manifest["outputs"] == {"estimates": "estimates.csv"}
        assert "estimate.lyapunov" in manifest["timings_seconds"]
        assert "created_utc" in manifest

    def test_timestamps_stay_out_of_tables(self, tmp_path):
        """Two writers with the same rows produce identical CSV bytes."""
        first = ArtifactWriter(tmp_path / "a", "h", "estimate")
        second = ArtifactWriter(tmp_path / "b", "h", "estimate")
        rows = [(1, 0.25), (2, 0.125)]
        assert (
            first.write_csv("t.csv", ["n", "v"], rows).read_bytes()
            == second.write_csv("t.csv", ["n", "v"], rows).read_bytes()
        )
