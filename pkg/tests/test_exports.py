"""Output writers: provenance, spreadsheet layout, JSON-lines trajectories."""

import sys, os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

import json
from fractions import Fraction

import pandas as pd
from openpyxl import load_workbook

from lamespec import __version__
from lamespec.services import continuation as cont
from lamespec.services import exports
from lamespec.services.perturbation import expand_many
from lamespec.services.trig_basis import ModelParams


CONFIG = {"trunc_K": 200, "series": {"m": [0, 1]}}


# ── helpers ──────────────────────────────────────────────────

def _series():
    return expand_many([0, 1], 3, ModelParams(1))


def _trajectory():
    series = expand_many([0], 12, ModelParams(1))[0]
    state = cont.init_state(0, 0.1, series)
    return cont.continue_along(state, cont.PathSpec.polyline([0.1, 0.11]))


# ── tests ────────────────────────────────────────────────────

class TestSeriesFiles:
    def test_csv_starts_with_provenance(self, tmp_path):
        exports.write_series(str(tmp_path), _series(), {0: None, 1: None}, CONFIG, xlsx=False)
        text = (tmp_path / "series.csv").read_text()
        head = text.splitlines()[0]
        assert head.startswith(f"# lamespec {__version__} config=")
        df = pd.read_csv(tmp_path / "series.csv", comment="#")
        assert list(df.columns) == ["n", "m", "k", "power", "numerator", "denominator", "float"]
        assert len(df) == 8

    def test_json_document(self, tmp_path):
        exports.write_series(str(tmp_path), _series(), {0: 0.749, 1: None}, CONFIG, xlsx=False)
        doc = json.loads((tmp_path / "series.json").read_text())
        assert doc["version"] == __version__
        assert doc["config"] == CONFIG
        assert doc["series"][0]["radius"] == 0.749
        assert doc["series"][1]["coeffs"][0] == "25/3"

    def test_xlsx_layout(self, tmp_path):
        paths = exports.write_series(str(tmp_path), _series(), {}, CONFIG, xlsx=True)
        assert str(tmp_path / "series.xlsx") in paths
        wb = load_workbook(tmp_path / "series.xlsx")
        assert wb.sheetnames == ["coefficients", "config"]
        ws = wb["coefficients"]
        assert ws["A1"].value == "n"
        assert all(cell.font.bold for cell in ws[1])
        assert wb["config"]["B2"].value == __version__

    def test_table_text(self):
        text = exports.series_table(_series(), {0: 0.749}, terms=2)
        first, second = text.splitlines()
        assert first == "E_0(q) = pi^2 (10/3 + 80/3 q^2 + ...)  |  radius 0.749"
        assert second.endswith("radius n/a")

    def test_frac_str(self):
        assert exports.frac_str(Fraction(20)) == "20/1"
        assert exports.frac_str(Fraction(-8, 3)) == "-8/3"


class TestTrajectoryFile:
    def test_header_then_nodes(self, tmp_path):
        traj = _trajectory()
        path = exports.write_trajectory(str(tmp_path / "t.jsonl"), traj, CONFIG, {"index": 0})
        lines = [json.loads(l) for l in open(path)]
        assert lines[0]["type"] == "header"
        assert lines[0]["index"] == 0
        assert lines[0]["config"] == CONFIG
        assert len(lines) == len(traj.path.nodes) + 1
        assert lines[1]["s"] == 0.0
        assert abs(complex(*lines[-1]["q"]) - 0.11) < 1e-15


class TestPermutationFile:
    def test_document(self, tmp_path):
        r = cont.PermutationResult(0.3 + 0.6j, [0, 2], {0: 2, 2: 0}, 0.02)
        exports.write_permutations(str(tmp_path), [r], CONFIG, evidence=[[0, 2]])
        doc = json.loads((tmp_path / "permutations.json").read_text())
        assert doc["permutations"][0]["cycles"] == "(0 2)"
        assert doc["connectivity_evidence"] == [[0, 2]]
        assert "compatibility" not in doc
