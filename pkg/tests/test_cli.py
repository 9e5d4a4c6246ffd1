import json

import numpy as np
import pytest

import isosolve as iso
from isosolve.cli import main
from isosolve.fieldfile import read_field


@pytest.fixture
def f3_inputs(tmp_path):
    assert main(["catalog", "--emit", "f3", "--dir", str(tmp_path)]) == 0
    return tmp_path / "f3.map", tmp_path / "f3.dg.json"


class TestCheck:
    def test_catalog_example1(self, capsys):
        assert main(["check", "--catalog", "example1"]) == 0
        out = capsys.readouterr().out
        assert "ADMISSIBLE" in out and "alpha0" in out

    def test_catalog_f3_alpha0(self, tmp_path):
        report = tmp_path / "rep.json"
        assert main(["check", "--catalog", "f3", "--out", str(report)]) == 0
        doc = json.loads(report.read_text())
        assert doc["verdict"] is True and doc["alpha0"] == 2

    def test_rank_deficient_exit1(self, tmp_path, capsys):
        mp = tmp_path / "bad.map"
        mp.write_text("m=2,q=4; x1; x2; x1^2; x1^2\n")
        assert main(["check", "--map", str(mp)]) == 1
        out = capsys.readouterr().out
        assert "rank deficient at node" in out

    def test_parse_error_exit2(self, tmp_path):
        mp = tmp_path / "bad.map"
        mp.write_text("m=2,q=4; x1; x2\n")
        assert main(["check", "--map", str(mp)]) == 2


class TestSolve:
    def test_f3_end_to_end(self, f3_inputs, tmp_path):
        mp, dgp = f3_inputs
        out = tmp_path / "df.json"
        assert main(["solve", "--map", str(mp), "--dg", str(dgp),
                     "--out", str(out)]) == 0
        ff = read_field(out)
        grid = ff.grid
        y = grid.nodes()[..., 1]
        exact = np.zeros(grid.shape + (4,))
        exact[..., 1] = (y + 1) / 2
        assert np.max(np.abs(ff.data - exact)) <= 50 * grid.spacing[0] ** 2
        # h file written alongside for the critical branch
        h = read_field(tmp_path / "df_h.json")
        assert h.kind == "scalar"
        assert np.max(np.abs(h.values() - (y + 1) / 2)) <= 1e-10

    def test_dg_expr(self, tmp_path):
        out = tmp_path / "df.json"
        assert main(["solve", "--catalog", "f3", "--dg-expr", "0;0;1",
                     "--out", str(out)]) == 0

    def test_free_branch(self, tmp_path, capsys):
        out = tmp_path / "df.json"
        assert main(["solve", "--catalog", "canonical-free",
                     "--out", str(out), "--json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["branch"] == "free"
        assert doc["max_residual"] <= 1e-8

    def test_not_admissible_exit1(self, tmp_path):
        out = tmp_path / "df.json"
        assert main(["solve", "--catalog", "rank-deficient",
                     "--out", str(out)]) == 1

    def test_alpha0_override(self, tmp_path, capsys):
        out = tmp_path / "df.json"
        assert main(["solve", "--catalog", "example1", "--alpha0", "2",
                     "--out", str(out), "--json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["alpha0"] == 2

    def test_determinism(self, f3_inputs, tmp_path):
        mp, dgp = f3_inputs
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        for out in (out1, out2):
            assert main(["solve", "--map", str(mp), "--dg", str(dgp),
                         "--out", str(out)]) == 0
        a = out1.read_text().replace("a.json", "X").replace("a_h.json", "XH")
        b = out2.read_text().replace("b.json", "X").replace("b_h.json", "XH")
        assert a == b


class TestVerify:
    def test_f3_pass(self, f3_inputs, tmp_path):
        mp, dgp = f3_inputs
        out = tmp_path / "df.json"
        main(["solve", "--map", str(mp), "--dg", str(dgp), "--out", str(out)])
        assert main(["verify", "--map", str(mp), "--df", str(out),
                     "--dg", str(dgp)]) == 0

    def test_zero_df_fails(self, f3_inputs, tmp_path):
        from isosolve.fieldfile import make_field, write_field

        mp, dgp = f3_inputs
        grid = read_field(dgp).grid
        zero = tmp_path / "zero.json"
        write_field(zero, make_field("vector", grid,
                                     np.zeros(grid.shape + (4,)), q=4))
        assert main(["verify", "--map", str(mp), "--df", str(zero),
                     "--dg", str(dgp)]) == 1

    def test_grid_mismatch_exit2(self, f3_inputs, tmp_path):
        from isosolve.fieldfile import make_field, write_field

        mp, dgp = f3_inputs
        other = iso.Grid(bounds=((-1, 1), (-1, 1)), shape=(9, 9))
        small = tmp_path / "small.json"
        write_field(small, make_field("vector", other,
                                      np.zeros(other.shape + (4,)), q=4))
        assert main(["verify", "--map", str(mp), "--df", str(small),
                     "--dg", str(dgp)]) == 2

    def test_richardson_reported(self, f3_inputs, tmp_path, capsys):
        mp, dgp = f3_inputs
        out = tmp_path / "df.json"
        main(["solve", "--map", str(mp), "--dg", str(dgp), "--out", str(out)])
        capsys.readouterr()
        assert main(["verify", "--map", str(mp), "--df", str(out),
                     "--dg", str(dgp), "--richardson", "--json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        ratios = doc["richardson"]["ratios"]
        assert all(3.2 <= r <= 4.8 for r in ratios)


class TestCatalog:
    def test_list_names(self, capsys):
        assert main(["catalog", "--list"]) == 0
        out = capsys.readouterr().out
        for name in ("example1", "f1", "f2", "f3", "canonical-free",
                     "fpi-m3", "rank-deficient"):
            assert name in out

    def test_emit_f2(self, tmp_path):
        assert main(["catalog", "--emit", "f2", "--dir", str(tmp_path)]) == 0
        text = (tmp_path / "f2.map").read_text()
        spec = iso.parse_map_spec(text)
        assert spec.component_text == ("x1", "x2", "x1^2", "x2^2")

    def test_emit_unknown_exit2(self):
        assert main(["catalog", "--emit", "no-such-map"]) == 2

    def test_emit_fpi_parametric(self, tmp_path):
        assert main(["catalog", "--emit", "fpi-m2", "--dir", str(tmp_path)]) == 0
        spec = iso.parse_map_spec((tmp_path / "fpi-m2.map").read_text())
        assert spec.m == 2 and spec.q == 4
        rep = iso.admissibility(spec, iso.Grid(bounds=((-1, 1), (-1, 1)),
                                               shape=(9, 9)))
        assert rep.verdict
