import csv
import io
import json
import math

import pytest

from extrobin import ball, cli


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(line for line in io.StringIO(text) if not line.startswith("#")))


def test_ball_threshold_example(capsys):
    code, out, _ = run(["ball", "--d", "3", "--R", "1", "--alpha", "-1"], capsys)
    assert code == 0
    assert out.startswith("# command: extrobin ball")
    assert "# seed: 0" in out and "# version: " in out
    (r,) = rows(out)
    assert float(r["lambda1"]) == 0.0 and float(r["alpha_star"]) == -1.0 and r["is_discrete"] == "false"


def test_twelve_significant_digits(capsys):
    _, out, _ = run(["ball", "--alpha", "-1"], capsys)
    (r,) = rows(out)
    assert r["lambda1"] == f"{ball.solve(2, 1.0, -1.0).lambda1:.12g}"


def test_json_mirrors_csv(capsys):
    _, out_csv, _ = run(["ball", "--alpha", "-1,-2,-3"], capsys)
    _, out_json, _ = run(["ball", "--alpha", "-1,-2,-3", "--format", "json"], capsys)
    data = json.loads(out_json)
    assert data["provenance"]["seed"] == 0
    assert [r["lambda1"] for r in data["rows"]] == [float(r["lambda1"]) for r in rows(out_csv)]
    assert data["columns"] == list(rows(out_csv)[0].keys())


def test_asymptotics_column_decreasing(capsys):
    code, out, _ = run(["asymptotics", "--d", "2", "--R", "1", "--alpha-grid", "-10,-20,-40"], capsys)
    assert code == 0
    ratio = [float(r["remainder_ratio"]) for r in rows(out)]
    assert ratio == sorted(ratio, reverse=True) and ratio[-1] <= 0.1


def test_sharpness_table():
    t = cli.emit_sharpness_example(1.0, 2.0, [-1.0, -10.0, -100.0])
    assert all(r["reversed"] for r in t.rows)
    assert all(r["predictor_difference"] == pytest.approx(-r["alpha"] * 0.5) for r in t.rows)
    t = cli.emit_sharpness_example(1.0, 1.0, [-5.0, -50.0])
    assert all(r["predictor_difference"] == 0.0 and not r["reversed"] for r in t.rows)
    t = cli.emit_sharpness_example(1.0, 1.1, [-100.0])
    assert t.rows[0]["predictor_difference"] == pytest.approx(100.0 * (1 - 1 / 1.1))
    with pytest.raises(ValueError):
        cli.emit_sharpness_example(2.0, 1.0, [-1.0])


def test_scan_thm1_example(capsys):
    code, out, _ = run(["scan-thm1", "--perimeter", "6.2831853", "--alphas", "-0.5,-1,-2",
                        "--shapes", "ellipse:1.5,ellipse:2", "--n-s", "64", "--n-t", "160"], capsys)
    assert code == 0
    table = rows(out)
    assert len(table) == 6
    for r in table:
        assert float(r["margin"]) >= -1e-4
        # margin recomputable from the other columns
        assert float(r["margin"]) == pytest.approx(float(r["ball_ref"]) - float(r["validator"]),
                                                   abs=1e-11 * max(1.0, abs(float(r["ball_ref"]))))


def test_scan_thm1_multicomponent_without_validator(capsys):
    code, out, _ = run(["scan-thm1", "--alphas", "-1", "--shapes", "disks:3"], capsys)
    (r,) = rows(out)
    assert code == 0 and r["validator"] == ""
    assert float(r["margin"]) == pytest.approx(float(r["ball_ref"]) - float(r["bound"]), abs=1e-12)


def test_scan_thm2(capsys):
    code, out, _ = run(["scan-thm2", "--alphas", "-2,-4", "--shapes", "spheroid:1.5,sphere,perturbed:2"], capsys)
    assert code == 0
    for r in rows(out):
        assert float(r["constraint"]) == pytest.approx(1.0, rel=1e-10)
        assert float(r["margin"]) >= -1e-6
        assert float(r["margin"]) == pytest.approx(float(r["ball_ref"]) - float(r["bound"]),
                                                   abs=1e-11 * max(1.0, abs(float(r["ball_ref"]))))


def test_violation_exit_code(monkeypatch, capsys):
    def fake_cell(cell):
        return {"shape": cell[0], "alpha": cell[2], "constraint": 1.0, "bound": -0.5, "validator": -0.3,
                "ball_ref": -0.5, "margin": -0.2}
    monkeypatch.setattr(cli, "_thm1_cell", fake_cell)
    code, _, err = run(["scan-thm1", "--alphas", "-1", "--shapes", "disk"], capsys)
    assert code == 2 and "violation" in err


def test_effective_and_geometry(capsys):
    code, out, _ = run(["effective", "--shapes", "disk,spheroid:1.5", "--alphas", "-1"], capsys)
    assert code == 0
    r = rows(out)
    assert float(r[0]["lambda_eff"]) == pytest.approx(ball.solve(2, 1.0, -1.0).lambda1, rel=1e-5)
    code, out, _ = run(["geometry", "--shapes", "ellipse:2,spheroid:1.5"], capsys)
    assert code == 0
    vals = {(r["shape"], r["quantity"]): float(r["value"]) for r in rows(out)}
    assert vals[("ellipse:2", "total_curvature[0]")] == pytest.approx(2 * math.pi, abs=1e-8)
    assert vals[("spheroid:1.5", "gauss_kronecker_defect")] == pytest.approx(0.0, abs=1e-8)


def test_validate2d(capsys):
    code, out, _ = run(["validate2d", "--shape", "disk", "--alphas", "-1", "--n-s", "8", "--n-t", "100"], capsys)
    assert code == 0
    assert len(rows(out)) == 8


@pytest.mark.parametrize("argv", [["bogus"], ["ball"], ["ball", "--alpha", "x"], [],
                                  ["scan-thm1", "--alphas", "-1", "--shapes", "hexagon"],
                                  ["ball", "--alpha", "-1", "--plot", "p.py"]])
def test_usage_errors(argv, capsys):
    code, _, _ = run(argv, capsys)
    assert code == 1


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "scan.geom"
    cfg.write_text("[run]\nalphas = -1, -2\nshapes = oval\nn_s = 32\nn_t = 100\n\n[curve oval]\nshape = ellipse:1.3\n")
    code, out, _ = run(["scan-thm1", "--config", str(cfg)], capsys)
    assert code == 0 and len(rows(out)) == 2
    code, out, _ = run(["scan-thm1", "--config", str(cfg), "--alphas", "-3"], capsys)
    assert code == 0 and [float(r["alpha"]) for r in rows(out)] == [-3.0]


def test_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.geom"
    bad.write_text("[curve a]\nshape = ellipse:2\nfoo\n")
    code, _, err = run(["geometry", "--config", str(bad), "--shapes", "a"], capsys)
    assert code == 1 and "line 3" in err
    bad.write_text("[run]\nnot_an_option = 1\n")
    code, _, err = run(["ball", "--config", str(bad), "--alpha", "-1"], capsys)
    assert code == 1 and "not_an_option" in err
    code, _, _ = run(["ball", "--config", str(tmp_path / "missing.geom"), "--alpha", "-1"], capsys)
    assert code == 1


def test_deterministic_output_and_plot(tmp_path, capsys, monkeypatch):
    out1, out2 = tmp_path / "a.csv", tmp_path / "a.csv"
    argv = ["scan-thm2", "--alphas", "-2", "--shapes", "perturbed,spheroid:0.8", "--seed", "11",
            "-o", str(out1), "--plot", str(tmp_path / "plot.py")]
    assert cli.main(argv) == 0
    first = out1.read_bytes()
    monkeypatch.setenv("EXTROBIN_THREADS", "2")
    assert cli.main(argv) == 0
    assert out2.read_bytes() == first
    assert b"# seed: 11" in first
    script = (tmp_path / "plot.py").read_text()
    compile(script, "plot.py", "exec")
    assert str(out1) in script


def test_seed_changes_perturbed_shape(capsys):
    _, a, _ = run(["geometry", "--shapes", "perturbed", "--seed", "1"], capsys)
    _, b, _ = run(["geometry", "--shapes", "perturbed", "--seed", "2"], capsys)
    assert rows(a) != rows(b)


def test_bad_thread_env(monkeypatch, capsys):
    monkeypatch.setenv("EXTROBIN_THREADS", "many")
    code, _, _ = run(["effective", "--shapes", "disk,disk", "--alphas", "-1"], capsys)
    assert code == 1
