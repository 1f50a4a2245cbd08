import csv
import json

import pytest

from lctdelay.cli import main


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_transform(tmp_path, capsys):
    assert run(tmp_path, "transform", "--builtin", "logistic") == 0
    data = json.loads((tmp_path / "transform.json").read_text())
    assert data["r"] == 7
    assert capsys.readouterr().out.count("\n") == 1


def test_equilibrium_single_and_grid(tmp_path):
    assert run(tmp_path, "equilibrium", "--builtin", "logistic", "--epsilon", "0.5") == 0
    data = json.loads((tmp_path / "equilibrium.json").read_text())
    assert data["closed_form"]["x_e"][0] == pytest.approx(0.93727348759409)
    assert data["max_difference"] < 1e-10
    assert run(tmp_path, "equilibrium", "--builtin", "logistic", "--sigma-range", "0.5:2",
               "--eps-range", "0:1", "--grid", "3x2") == 0
    rows = read_csv(tmp_path / "equilibria.csv")
    assert rows[0] == ["sigma", "epsilon", "x_e", "residual"] and len(rows) == 7


def test_stability_columns(tmp_path):
    assert run(tmp_path, "stability", "--builtin", "logistic", "--sigma", "2", "--epsilon", "0.1") == 0
    rows = read_csv(tmp_path / "stability.csv")
    assert rows[0] == ["sigma", "epsilon", *[f"D{j}" for j in range(1, 8)], "verdict"]
    assert rows[1][-1] == "AsymptoticallyStable"
    assert run(tmp_path, "stability", "--builtin", "logistic", "--sigma", "0.5") == 0
    assert read_csv(tmp_path / "stability.csv")[1][-1] == "Unstable"


def test_hopf(tmp_path):
    assert run(tmp_path, "hopf", "--builtin", "logistic", "--eps-range", "0:0.5", "--steps", "5", "--plot") == 0
    rows = read_csv(tmp_path / "hopf_locus.csv")
    assert rows[0] == ["epsilon", "sigma", "transversality", "frequency"]
    assert float(rows[1][1]) == pytest.approx(1.0, abs=1e-8)
    assert (tmp_path / "hopf_locus.svg").exists()


def test_phase_diagram(tmp_path, capsys):
    assert run(tmp_path, "phase-diagram", "--builtin", "logistic", "--grid", "6x4", "--plot", "--threads", "1") == 0
    rows = read_csv(tmp_path / "phase_diagram.csv")
    assert rows[0][:3] == ["sigma", "epsilon", "class"] and len(rows) == 25
    assert {r[2] for r in rows[1:]} <= {"Stable", "Unstable", "Critical", "Singular"}
    assert (tmp_path / "phase_diagram.svg").read_text().count("polyline") == 1
    assert "Stable=" in capsys.readouterr().out


@pytest.mark.parametrize("method", ["rk4", "rk45", "direct"])
def test_simulate(tmp_path, method):
    assert run(tmp_path, "simulate", "--builtin", "logistic", "--T", "2", "--method", method) == 0
    rows = read_csv(tmp_path / "trajectory.csv")
    assert rows[0][:2] == ["t", "x"] and float(rows[-1][0]) == pytest.approx(2.0)
    assert float(rows[1][1]) == pytest.approx(1.05)


def test_continuity(tmp_path):
    assert run(tmp_path, "continuity", "--builtin", "logistic", "--epsilon", "0.5", "--T", "5") == 0
    data = json.loads((tmp_path / "continuity.json").read_text())
    assert data["satisfied"] and data["delta_T"] <= data["bound"]


def test_verify(tmp_path, capsys):
    assert run(tmp_path, "verify", "--suite", "appendix-b", "--seed", "42") == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 6 and "FAIL" not in out


def test_input_spec(tmp_path):
    spec = {
        "D": 1, "d": 1, "c": [1.0],
        "kernels": [{"order": 1, "sigma": 2.0}],
        "rhs": 'linear:{"A": [[-1]], "B": [[0.5]]}',
        "history": "constant:[1.0]",
    }
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec))
    assert run(tmp_path, "transform", "--input", str(path)) == 0
    assert run(tmp_path, "equilibrium", "--input", str(path)) == 0
    assert run(tmp_path, "stability", "--input", str(path)) == 0
    assert run(tmp_path, "simulate", "--input", str(path), "--T", "1") == 0
    assert read_csv(tmp_path / "stability.csv")[1][-1] == "AsymptoticallyStable"


def test_validation_errors(tmp_path, capsys):
    assert run(tmp_path, "stability", "--builtin", "logistic", "--set", "foo=1") == 1
    assert run(tmp_path, "stability", "--builtin", "logistic", "--sigma", "-1") == 1
    assert run(tmp_path, "phase-diagram", "--builtin", "logistic", "--grid", "ax3") == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"D": 1}))
    assert run(tmp_path, "transform", "--input", str(bad)) == 1
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 4 and all(line.startswith("lctdelay: error[validation]:") for line in err)
    assert "field 'd': missing" in err[-1]


def test_numerical_error_exit_code(tmp_path, capsys):
    code = run(tmp_path, "hopf", "--builtin", "logistic", "--sigma-range", "1.5:3")
    assert code == 2
    assert capsys.readouterr().err.startswith("lctdelay: error[numerical]:")


def test_singular_equilibrium_is_numerical(tmp_path):
    assert run(tmp_path, "equilibrium", "--builtin", "logistic", "--Omega", "1.7320508075688772",
               "--epsilon", "8") == 2


def test_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv("LCT_THREADS", "2")
    assert run(tmp_path, "phase-diagram", "--builtin", "logistic", "--grid", "3x2") == 0


def test_critical_line_simulation_keeps_amplitude(tmp_path):
    assert run(tmp_path, "simulate", "--builtin", "logistic", "--sigma", "1.0", "--epsilon", "0.0", "--T", "200") == 0
    rows = read_csv(tmp_path / "trajectory.csv")[1:]
    t = [float(r[0]) for r in rows]
    x = [float(r[1]) - 1.0 for r in rows]
    n = len(x) // 10
    early = max(abs(v) for v in x[n : 2 * n])
    late = max(abs(v) for v in x[-n:])
    assert t[-1] == pytest.approx(200.0)
    assert 0.5 < late / early < 2.0
