import csv
import subprocess
import sys

import numpy as np
import pytest

from algebroid import catalog
from algebroid.chartfile import dumps_chart
from algebroid.cli import main
from algebroid.metric import MetricField


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def read_report(out_dir):
    report = {}
    for line in (out_dir / "report.txt").read_text().splitlines():
        key, _, value = line.partition("=")
        report[key] = value
    return report


class TestValidateVerb:
    def test_catalog_entry_passes(self, tmp_path, capsys):
        rc = main(["validate", "--catalog", "so3_biinv", "--out", str(tmp_path)])
        capsys.readouterr()
        assert rc == 0
        rows = read_csv(tmp_path / "validate.csv")
        axioms = {r["axiom"]: float(r["residual"]) for r in rows}
        assert axioms["antisymmetry"] < 1e-12
        assert axioms["anchor_morphism"] < 1e-12
        assert axioms["jacobi"] < 1e-12

    def test_mutants_fail_with_unit_residual(self, tmp_path, capsys):
        metric = MetricField.identity(3, 2)
        for name, chart in catalog.mutants().items():
            f = tmp_path / f"{name}.chart"
            f.write_text(dumps_chart(chart, metric))
            out = tmp_path / name
            rc = main(["validate", "--chart", str(f), "--out", str(out)])
            capsys.readouterr()
            assert rc == 1
            report = read_report(out)
            assert report["overall_pass"] == "false"
            assert float(report["check.anchor_morphism.residual"]) >= 0.9
        bad_bracket_report = read_report(tmp_path / "bad_bracket")
        assert float(bad_bracket_report["check.jacobi.residual"]) >= 0.9

    def test_malformed_chart_exits_2(self, tmp_path, capsys):
        f = tmp_path / "bad.chart"
        f.write_text("[algebroid]\nn = 2\nr = oops\n")
        rc = main(["validate", "--chart", str(f), "--out", str(tmp_path / "o")])
        captured = capsys.readouterr()
        assert rc == 2
        assert "line 3" in captured.err

    def test_requires_exactly_one_source(self, tmp_path, capsys):
        rc = main(["validate", "--out", str(tmp_path)])
        capsys.readouterr()
        assert rc == 2


class TestGeodesicVerb:
    def test_flat_line(self, tmp_path, capsys):
        rc = main(
            ["geodesic", "--catalog", "euclidean2", "--x", "0,0", "--mu", "1,2",
             "--out", str(tmp_path)]
        )
        capsys.readouterr()
        assert rc == 0
        rows = read_csv(tmp_path / "geodesic.csv")
        last = rows[-1]
        assert float(last["x1"]) == pytest.approx(1.0, abs=1e-10)
        assert float(last["x2"]) == pytest.approx(2.0, abs=1e-10)

    def test_domain_exit_exits_1_keeps_partial_csv(self, tmp_path, capsys):
        rc = main(
            ["geodesic", "--catalog", "euclidean2", "--x", "0,0", "--mu", "10,0",
             "--out", str(tmp_path)]
        )
        capsys.readouterr()
        assert rc == 1
        rows = read_csv(tmp_path / "geodesic.csv")
        assert 0 < len(rows) < 1001
        report = read_report(tmp_path)
        assert "domain_exit_time" in report


class TestHamcheckVerb:
    def test_affine_algebra(self, tmp_path, capsys):
        rc = main(
            ["hamcheck", "--catalog", "aff2", "--samples", "100", "--out", str(tmp_path)]
        )
        capsys.readouterr()
        assert rc == 0
        rows = read_csv(tmp_path / "hamcheck.csv")
        assert len(rows) == 100
        assert max(float(r["equivalence_residual"]) for r in rows) < 1e-8

    def test_determinism_byte_identical(self, tmp_path, capsys):
        a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
        for out in (a, b):
            rc = main(["hamcheck", "--catalog", "sphere_chart", "--samples", "30",
                       "--seed", "5", "--out", str(out)])
            assert rc == 0
        rc = main(["hamcheck", "--catalog", "sphere_chart", "--samples", "30",
                   "--seed", "6", "--out", str(c)])
        capsys.readouterr()
        assert rc == 0
        assert (a / "hamcheck.csv").read_bytes() == (b / "hamcheck.csv").read_bytes()
        assert (a / "hamcheck.csv").read_bytes() != (c / "hamcheck.csv").read_bytes()


class TestDivergenceVerb:
    def test_affine_algebra_pinned_point(self, tmp_path, capsys):
        rc = main(
            ["divergence", "--catalog", "aff2", "--samples", "50", "--mu", "1,0",
             "--out", str(tmp_path)]
        )
        capsys.readouterr()
        assert rc == 0
        rows = read_csv(tmp_path / "divergence.csv")
        assert len(rows) == 51  # pinned point plus samples
        assert float(rows[0]["total"]) == pytest.approx(1.0, abs=1e-6)

    def test_rotation_algebra_divergence_free(self, tmp_path, capsys):
        rc = main(["divergence", "--catalog", "so3_biinv", "--samples", "50",
                   "--out", str(tmp_path)])
        capsys.readouterr()
        assert rc == 0
        rows = read_csv(tmp_path / "divergence.csv")
        assert max(abs(float(r["total"])) for r in rows) < 1e-9


class TestOtherVerbs:
    def test_transport(self, tmp_path, capsys):
        rc = main(["transport", "--catalog", "sphere_chart", "--x", "1.5707963267948966,0.2",
                   "--mu", "0,1", "--s0", "1,0", "--out", str(tmp_path)])
        capsys.readouterr()
        assert rc == 0
        rows = read_csv(tmp_path / "transport.csv")
        assert float(rows[-1]["s1"]) == pytest.approx(1.0, abs=1e-8)

    def test_jacobi(self, tmp_path, capsys):
        rc = main(["jacobi", "--catalog", "sphere_chart", "--x", "1.5707963267948966,0.2",
                   "--mu", "0,1", "--dbeta0", "1,0", "--out", str(tmp_path)])
        capsys.readouterr()
        assert rc == 0
        report = read_report(tmp_path)
        assert report["check.scaling_solution.pass"] == "true"
        assert report["check.dexp_vs_fd.pass"] == "true"

    def test_curvature(self, tmp_path, capsys):
        rc = main(["curvature", "--catalog", "heisenberg_central", "--out", str(tmp_path)])
        capsys.readouterr()
        assert rc == 0
        rows = read_csv(tmp_path / "curvature.csv")
        table = {
            (r["i"], r["j"], r["k"], r["l"]): float(r["value"]) for r in rows
        }
        assert table[("1", "2", "1", "2")] == pytest.approx(0.75)
        gam = read_csv(tmp_path / "christoffel.csv")
        gtab = {(r["i"], r["j"], r["k"]): float(r["value"]) for r in gam}
        assert gtab[("1", "2", "3")] == pytest.approx(0.5)

    def test_oneill(self, tmp_path, capsys):
        rc = main(["oneill", "--catalog", "heisenberg_central", "--out", str(tmp_path)])
        capsys.readouterr()
        assert rc == 0
        report = read_report(tmp_path)
        assert report["check.curvature_horizontal.pass"] == "true"
        assert report["anchor_rank"] == "2"

    def test_exp(self, tmp_path, capsys):
        rc = main(["exp", "--catalog", "euclidean2", "--x", "0,0", "--mu", "1,2",
                   "--out", str(tmp_path)])
        capsys.readouterr()
        assert rc == 0
        rows = read_csv(tmp_path / "exp.csv")
        assert float(rows[0]["exp1"]) == pytest.approx(1.0, abs=1e-10)

    def test_catalog_verb_writes_loadable_chart(self, tmp_path, capsys):
        rc = main(["catalog", "--name", "heisenberg_central", "--out", str(tmp_path)])
        out = capsys.readouterr().out
        assert rc == 0
        assert "sphere_chart" in out
        from algebroid.chartfile import load_chart_file

        chart, metric = load_chart_file(tmp_path / "heisenberg_central.chart")
        assert chart.r == 3

    def test_variation_check_flat(self, tmp_path, capsys):
        rc = main(["variation-check", "--catalog", "euclidean2", "--out", str(tmp_path)])
        capsys.readouterr()
        assert rc == 0
        rows = read_csv(tmp_path / "variation-check.csv")
        checks = {r["check"] for r in rows}
        assert "pencil_vs_jacobi_ode" in checks
        assert "commutation_residual" in checks


def test_console_script_help():
    out = subprocess.run(
        [sys.executable, "-m", "algebroid.cli", "--help"],
        capture_output=True,
        text=True,
    )
    assert out.returncode == 0
    assert "validate" in out.stdout
