import csv
import io
import json
import math

import pytest

from dplab import save_shape
from dplab.cli import fmt, main, parse_grid, parse_window
from dplab.potential import PiecewisePolynomial

from conftest import half_psi, odd_phi, well


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name, shape in (("well", well()), ("psi", half_psi()), ("phi", odd_phi())):
        paths[name] = tmp_path / f"{name}.json"
        save_shape(shape, paths[name])
    return paths


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_parse_grid():
    assert parse_grid("0:1:0.25") == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert parse_grid("0:1:0.3") == pytest.approx([0.0, 0.3, 0.6, 0.9])
    assert parse_grid("1,2.5,-3") == [1.0, 2.5, -3.0]
    assert len(parse_grid("0:25:0.02")) == 1251
    for bad in ("", "1:0:0.1", "0:1:0", "0:1"):
        with pytest.raises(ValueError):
            parse_grid(bad)
    assert parse_window("-1:30") == (-1.0, 30.0)


def test_fmt_round_trips():
    for x in (0.1, -2.5e-300, math.pi, 1e22):
        assert float(fmt(x)) == x
    assert fmt(-0.0) == "0.0"


def test_moments(capsys, files):
    code, out, _ = run(capsys, "moments", "--phi", files["phi"], "--psi", files["psi"])
    assert code == 0
    rep = json.loads(out)
    assert rep["classification"] == "DeltaPrimeDeltaLimit"
    assert rep["m1_phi"] == pytest.approx(-1.0)


def test_resonances_negative_window(capsys, files):
    code, out, _ = run(capsys, "resonances", "--phi", files["well"], "--psi", files["psi"], "--window", "-1:30", "--step", "0.05")
    assert code == 0
    table = rows(out)
    assert table[0] == ["alpha", "theta", "kappa", "residual"]
    alphas = [float(r[0]) for r in table[1:]]
    assert alphas == pytest.approx([0.0, 2.4674011, 9.8696044, 22.2066099], abs=1e-6)


def test_scatter_json(capsys, files):
    code, out, _ = run(capsys, "scatter", "--phi", files["well"], "--psi", files["psi"], "--alpha", "2.4674011002723395", "--beta", "1", "--eps", "0.01", "--k", "1")
    assert code == 0
    rep = json.loads(out)
    assert rep["limit"]["resonant"] is True
    assert rep["limit"]["theta"] == pytest.approx(-1.0, abs=1e-8)
    assert rep["flux_defect"] <= 1e-8
    assert abs(rep["T2"] - rep["limit"]["T2"]) < 0.05


def test_sweep_csv_and_determinism(capsys, files, tmp_path, monkeypatch):
    argv = ["sweep", "--phi", files["well"], "--alpha", "0:3:0.5", "--eps", "0.1,0.01", "--k", "1,2"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    monkeypatch.setenv("DPLAB_THREADS", "1")
    assert run(capsys, *argv, "--out", a)[0] == 0
    monkeypatch.setenv("DPLAB_THREADS", "4")
    assert run(capsys, *argv, "--out", b)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    table = rows(a.read_text())
    assert table[0] == ["alpha", "k", "eps", "ReR", "ImR", "ReT", "ImT", "T2"]
    assert len(table) == 1 + 7 * 2 * 2
    assert [float(x) for x in table[1][:3]] == [0.0, 1.0, 0.1]


def test_converge_csv(capsys, files):
    code, out, _ = run(capsys, "converge", "--phi", files["well"], "--alpha", "1", "--k", "1")
    assert code == 0
    table = rows(out)
    assert table[0] == ["eps", "errR", "errT", "fitted_order"]
    assert len(table) == 8
    assert 0.8 <= float(table[1][3]) <= 1.2


def test_resolve_with_traces(capsys, files, tmp_path):
    trace = tmp_path / "traces"
    code, out, _ = run(
        capsys, "resolve", "--phi", files["well"], "--alpha", "1", "--eps", "0.25,0.125", "--zeta", "2j", "--trace-dir", trace
    )
    assert code == 0
    table = rows(out)
    assert table[0] == ["eps", "h", "error_L2", "fitted_order"]
    assert float(table[1][2]) > float(table[2][2])
    assert sorted(p.name for p in trace.iterdir()) == ["eps_0.csv", "eps_1.csv", "limit.csv"]
    assert rows((trace / "limit.csv").read_text())[0] == ["x", "ReY", "ImY"]


def test_resolve_custom_f(capsys, files, tmp_path):
    f = tmp_path / "f.json"
    f.write_text(json.dumps(PiecewisePolynomial.constant(1.0, -2.0, -1.0).to_dict()))
    code, out, _ = run(capsys, "resolve", "--phi", files["well"], "--alpha", "1", "--eps", "0.25,0.125", "--f", f)
    assert code == 0 and len(rows(out)) == 3


@pytest.mark.parametrize(
    "argv",
    [
        ["resonances", "--phi", "missing.json"],
        ["bogus"],
        ["scatter", "--phi", "{well}", "--alpha", "1", "--eps", "0", "--k", "1"],
        ["sweep", "--phi", "{well}", "--alpha", "3:1:0.5", "--eps", "0.1", "--k", "1"],
        ["resonances", "--phi", "{well}", "--window", "5:1"],
    ],
)
def test_invalid_input_exit_code(capsys, files, argv):
    argv = [a.format(well=files["well"]) for a in argv]
    code, _, err = run(capsys, *argv)
    assert code == 2
    if argv[0] != "bogus":
        assert "invalid input" in err


def test_zero_shape_is_invalid_for_scan(capsys, tmp_path):
    z = tmp_path / "z.json"
    z.write_text('{"label": "z", "pieces": []}')
    code, _, err = run(capsys, "resonances", "--phi", z)
    assert code == 2
    assert "scan_resonances" in err


def test_numerical_failure_exit_code(capsys, files):
    code, _, err = run(capsys, "scatter", "--phi", files["well"], "--alpha", "-1e7", "--eps", "0.1", "--k", "1")
    assert code == 3
    assert "scatter_finite failed" in err
