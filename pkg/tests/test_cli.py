import csv
import json

import numpy as np
import pytest

from idmdp.cli import main, parse_overrides
from idmdp.documents import load_model


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def toy_file(tmp_path, capsys):
    path = tmp_path / "toy.json"
    assert run(["example", "--name", "toy", "--out", path], capsys)[0] == 0
    return path


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_example_overrides(tmp_path, capsys):
    path = tmp_path / "s.json"
    code, _, _ = run(["example", "--name", "sigmoidal", "--X", "51",
                      "--discount", "0.8", "--out", path], capsys)
    assert code == 0
    m = load_model(path)
    assert m.num_states == 51 and m.discount == 0.8


def test_example_errors(capsys):
    assert run(["example", "--name", "nope"], capsys)[0] == 2
    assert run(["example", "--name", "toy", "--colour", "1"], capsys)[0] == 2
    assert run(["example", "--name", "toy", "--discount"], capsys)[0] == 2


def test_parse_overrides():
    assert parse_overrides(["--theta", "[1, 2]", "--name=x", "--swap-costs",
                            "false"]) == {"theta": [1, 2], "name": "x",
                                          "swap_costs": False}


def test_solve(toy_file, tmp_path, capsys):
    out = tmp_path / "sol"
    code, stdout, _ = run(["solve", "--input", toy_file, "--out", out], capsys)
    assert code == 0
    assert json.loads(stdout)["policy_stage0"] == [1, 2, 2, 3]
    q = read_csv(out / "q.csv")
    assert len(q) == 100 * 4 * 3
    v = read_csv(out / "values.csv")
    assert v[0]["mu"] == "1" and v[-1]["mu"] == ""
    # floats are written with full precision
    assert float(v[0]["V"]) == pytest.approx(219.27705827270032, abs=1e-9)


def test_solve_value_iteration(toy_file, tmp_path, capsys):
    code, stdout, _ = run(["solve", "--input", toy_file, "--tol", "1e-10",
                           "--out", tmp_path / "vi"], capsys)
    assert code == 0
    assert len(read_csv(tmp_path / "vi" / "values.csv")) == 4


def test_solve_horizon_zero(toy_file, tmp_path, capsys):
    run(["solve", "--input", toy_file, "--horizon", "0", "--out", tmp_path / "h"],
        capsys)
    rows = read_csv(tmp_path / "h" / "values.csv")
    assert [float(r["V"]) for r in rows] == [0.0] * 4
    assert read_csv(tmp_path / "h" / "q.csv") == []


def test_solve_allocation(tmp_path, capsys):
    path = tmp_path / "r.json"
    run(["example", "--name", "ross-i", "--out", path], capsys)
    code, stdout, _ = run(["solve", "--input", path, "--out", tmp_path / "o"], capsys)
    assert code == 0 and json.loads(stdout)["stages"] == 20


@pytest.mark.parametrize("theorem", ["1", "cor1", "2", "cor5", "cor3"])
def test_check_runs(toy_file, tmp_path, capsys, theorem):
    out = tmp_path / "rep.json"
    code, _, _ = run(["check", "--input", toy_file, "--theorem", theorem,
                      "--out", out], capsys)
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["verdict"] in ("MONOTONE-CERTIFIED", "NOT-CERTIFIED")


def test_check_toy_schedule(toy_file, capsys):
    code, stdout, _ = run(["check", "--input", toy_file, "--theorem", "1"], capsys)
    rep = json.loads(stdout)
    assert rep["verdict"] == "MONOTONE-CERTIFIED"
    assert rep["schedule"]["gamma"] == pytest.approx([1 / 6, 1.0], abs=1e-12)


def test_check_thm3(tmp_path, capsys):
    path = tmp_path / "r.json"
    run(["example", "--name", "ross-ii", "--out", path], capsys)
    code, stdout, _ = run(["check", "--input", path, "--theorem", "thm3"], capsys)
    rep = json.loads(stdout)
    assert code == 0 and rep["verdict"] == "MONOTONE-CERTIFIED"
    assert rep["qbar_submodular"] is False


def test_check_thm3_needs_allocation(toy_file, capsys):
    assert run(["check", "--input", toy_file, "--theorem", "thm3"], capsys)[0] == 2


def test_tolerance_env(toy_file, capsys, monkeypatch):
    monkeypatch.setenv("IDMDP_TOL", "abc")
    assert run(["check", "--input", toy_file, "--theorem", "1"], capsys)[0] == 2


def test_oracle(toy_file, capsys):
    code, stdout, _ = run(["oracle", "--input", toy_file], capsys)
    rep = json.loads(stdout)
    assert rep["num_evaluated"] == 81 and [1, 2, 2, 3] in rep["optimal_policies"]
    code, _, err = run(["oracle", "--input", toy_file, "--guard", "80"], capsys)
    assert code == 4 and "81" in err


def test_figure(tmp_path, capsys):
    out = tmp_path / "fig.csv"
    code, _, err = run(["figure", "--name", "ex3", "--out", out], capsys)
    assert code == 0
    rows = read_csv(out)
    assert list(rows[0]) == ["x", "Q2-Q1"] and len(rows) == 6
    assert json.loads(err)["monotone_columns"] == [False]


def test_figure_deterministic(tmp_path, capsys):
    run(["figure", "--name", "tridiag", "--out", tmp_path / "a.csv"], capsys)
    run(["figure", "--name", "tridiag", "--out", tmp_path / "b.csv"], capsys)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_rl_commands(toy_file, tmp_path, capsys):
    out = tmp_path / "q"
    code, _, _ = run(["rl", "--input", toy_file, "--algo", "qlearn", "--seed", "1",
                      "--steps", "2000", "--project", "--out", out], capsys)
    assert code == 0
    pol = json.loads((out / "policy.json").read_text())
    assert len(pol["policy"]) == 4 and "projected_policy" in pol
    assert read_csv(out / "curve.csv")[0]["step"] == "0"
    out2 = tmp_path / "t"
    code, _, _ = run(["rl", "--input", toy_file, "--algo", "threshold",
                      "--budget", "50000", "--lambda", "2", "--out", out2], capsys)
    assert code == 0
    assert json.loads((out2 / "policy.json").read_text())["method"] == "lattice"


def test_input_errors(tmp_path, capsys):
    missing = tmp_path / "missing.json"
    assert run(["solve", "--input", missing, "--out", tmp_path], capsys)[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "mdp"}))
    code, _, err = run(["check", "--input", bad, "--theorem", "1"], capsys)
    assert code == 2 and "input error" in err


def test_unknown_flag(toy_file, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--input", str(toy_file), "--out", "x", "--bogus", "1"])
    assert exc.value.code == 2
