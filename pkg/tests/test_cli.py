import csv
import json

import numpy as np
import pytest

from nonlip import cli
from nonlip.alm import TRACE_COLUMNS


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(p)


E51 = {"schema_version": 1, "family": "builtin:example-5-1"}
QP = {"schema_version": 1, "family": "builtin:convex-qp", "params": {"seed": 2}}


def test_solve_convex_qp(tmp_path, capsys):
    inst = write(tmp_path, "qp.json", QP)
    out = tmp_path / "out"
    assert cli.main(["solve", "--instance", inst, "--out", str(out)]) == cli.EXIT_OK
    rep = json.loads((out / "report.json").read_text())
    assert rep["result"]["status"] == "Converged"
    assert rep["result"]["inner_residual"] <= 1e-6
    assert rep["defaults"]["alm"]["theta0"] == 10.0
    assert set(rep["timings"]) == {"build", "solve", "certify"}
    # report numbers come from the last trace row
    rows = list(csv.DictReader((out / "trace.csv").open()))
    assert tuple(rows[0]) == TRACE_COLUMNS
    last = rows[-1]
    assert float(last["feasibility"]) == rep["result"]["feasibility"]
    assert float(last["theta"]) == rep["result"]["theta_final"]
    assert len(rows) == rep["result"]["outer_iterations"]
    assert rep["certificate"]["residual"] <= 1e-6


def test_solve_example_5_1_exit_and_multipliers(tmp_path):
    inst = write(tmp_path, "e.json", E51)
    out = tmp_path / "o"
    code = cli.main(["solve", "--instance", inst, "--out", str(out), "--theta-max", "1e8"])
    assert code in (cli.EXIT_INFEASIBLE, cli.EXIT_LIMIT)
    lam = [float(r["lambda_inf"]) for r in csv.DictReader((out / "trace.csv").open())]
    assert all(b > a for a, b in zip(lam[-6:], lam[-5:]))


def test_exit_code_for_each_status(tmp_path):
    inst = write(tmp_path, "e.json", E51)
    assert cli.main(["solve", "--instance", inst, "--out", str(tmp_path / "a")]) == cli.EXIT_INFEASIBLE
    assert cli.main(["solve", "--instance", inst, "--out", str(tmp_path / "b"), "--k-max", "3"]) == cli.EXIT_LIMIT
    assert cli.main(["solve", "--instance", inst, "--out", str(tmp_path / "c"), "--tol-stat", "1e-30",
                     "--theta-max", "1e3"]) == cli.EXIT_LIMIT
    qp = write(tmp_path, "q.json", QP)
    assert cli.main(["solve", "--instance", qp, "--out", str(tmp_path / "d")]) == cli.EXIT_OK


def test_missing_file(tmp_path, capsys):
    path = str(tmp_path / "nope.json")
    assert cli.main(["solve", "--instance", path, "--out", str(tmp_path)]) == cli.EXIT_ERROR
    assert path in capsys.readouterr().err


@pytest.mark.parametrize("doc,needle", [
    ({"schema_version": 1, "family": "builtin:convex-qp", "parms": {}}, "parms"),
    ({"schema_version": 1, "family": "builtin:convex-qp", "params": {"sed": 1}}, "params.sed"),
    ({"schema_version": 1, "family": "builtin:convex-qp", "config": {"theta_0": 1}}, "config.theta_0"),
    ({"schema_version": 2, "family": "builtin:convex-qp"}, "schema_version"),
    ({"schema_version": 1, "family": "builtin:qp"}, "family"),
])
def test_strict_schema(tmp_path, capsys, doc, needle):
    inst = write(tmp_path, "bad.json", doc)
    assert cli.main(["solve", "--instance", inst, "--out", str(tmp_path / "o")]) == cli.EXIT_ERROR
    assert needle in capsys.readouterr().err


def test_parse_error_names_line(tmp_path, capsys):
    inst = write(tmp_path, "bad.json", '{"schema_version": 1,\n "family": "builtin:convex-qp",\n "params": {,}}')
    assert cli.main(["solve", "--instance", inst, "--out", str(tmp_path / "o")]) == cli.EXIT_ERROR
    assert "bad.json:3:" in capsys.readouterr().err


def test_trace_determinism(tmp_path):
    for doc in (QP, E51, {"schema_version": 1, "family": "sparse-control", "params": {"n": 31}}):
        inst = write(tmp_path, "i.json", doc)
        texts = []
        for name in ("r1", "r2"):
            cli.main(["solve", "--instance", inst, "--out", str(tmp_path / name)])
            texts.append((tmp_path / name / "trace.csv").read_bytes())
        assert texts[0] == texts[1]


def test_custom_quadratic_and_overrides(tmp_path):
    doc = {"schema_version": 1, "family": "custom-quadratic",
           "params": {"Q": [[1, 0], [0, 1]], "c": [-2, -2], "A": [[1, 1]], "b": [1],
                      "lower": ["-inf", 0], "upper": ["inf", "inf"]},
           "config": {"tol_feas": 1e-9, "tol_stat": 1e-9}}
    inst = write(tmp_path, "c.json", doc)
    out = tmp_path / "o"
    assert cli.main(["solve", "--instance", inst, "--out", str(out), "--theta0", "100"]) == cli.EXIT_OK
    rep = json.loads((out / "report.json").read_text())
    np.testing.assert_allclose(rep["result"]["x"], [0.5, 0.5], atol=1e-6)
    assert rep["config"]["theta0"] == 100.0 and rep["config"]["tol_feas"] == 1e-9


def test_verify_roundtrip(tmp_path, capsys):
    out = tmp_path / "o"
    cli.main(["solve", "--instance", write(tmp_path, "s.json",
              {"schema_version": 1, "family": "sparse-control", "params": {"n": 31}}), "--out", str(out)])
    assert cli.main(["verify", str(out / "certificate.json")]) == cli.EXIT_OK
    doc = json.loads((out / "certificate.json").read_text())
    doc["certificate"]["residual"] = 123.0
    bad = write(tmp_path, "bad.json", doc)
    assert cli.main(["verify", bad]) == cli.EXIT_ERROR


def test_control_commands(tmp_path, capsys):
    assert cli.main(["control", "--target", "zero", "--out", str(tmp_path / "z")]) == cli.EXIT_OK
    assert "support=0 " in capsys.readouterr().out
    assert cli.main(["control", "--operator", "identity", "--sigma", "0", "--target", "sine",
                     "--tol-res", "1e-8", "--out", str(tmp_path / "i")]) == cli.EXIT_OK
    capsys.readouterr()
    assert cli.main(["control", "--n", "127", "--p", "0.5", "--target", "hat", "--operator", "laplace1d",
                     "--out", str(tmp_path / "h")]) == cli.EXIT_OK
    text = capsys.readouterr().out
    frac = float(text.split("support_fraction=")[1].split()[0])
    assert 0 < frac < 1 and "verifier PASS" in text
    assert (tmp_path / "h" / "solution.csv").exists() and (tmp_path / "h" / "verify.txt").exists()
    assert cli.main(["control", "--p", "1.5", "--out", str(tmp_path / "x")]) == cli.EXIT_ERROR


@pytest.mark.parametrize("ex", ["3.1", "3.2", "4.2", "5.1"])
def test_demos_pass(ex, capsys):
    assert cli.main(["demo", ex]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert out.rstrip().endswith("PASS")


def test_demo_texts(capsys):
    cli.main(["demo", "3.1"])
    assert "lhs=0.0 rhs=1.0" in capsys.readouterr().out
    cli.main(["demo", "3.2"])
    out = capsys.readouterr().out
    assert "FAIL-as-expected" in out
    cli.main(["demo", "5.1"])
    out = capsys.readouterr().out
    for k, eps in ((1, "0.5"), (10, "0.05"), (100, "0.005")):
        assert any(line.split()[:2] == [str(k), eps] for line in out.splitlines())
    assert cli.main(["demo", "9.9"]) == cli.EXIT_ERROR


def test_bench(tmp_path, capsys):
    for s in range(5):
        write(tmp_path, f"qp{s}.json", {"schema_version": 1, "family": "builtin:convex-qp", "params": {"seed": s}})
    write(tmp_path, "e51.json", E51)
    suite = write(tmp_path, "suite.json", [f"qp{s}.json" for s in range(5)] + ["e51.json", "missing.json"])
    assert cli.main(["bench", suite, "--jobs", "3", "--out", str(tmp_path / "b")]) == cli.EXIT_OK
    rows = list(csv.DictReader((tmp_path / "b" / "bench.csv").open()))
    assert [r["name"] for r in rows] == [f"qp{s}.json" for s in range(5)] + ["e51.json", "?"]
    assert [r["status"] for r in rows[:5]] == ["Converged"] * 5
    assert rows[5]["status"] != "Converged"
    assert rows[6]["status"].startswith("Error")
    empty = write(tmp_path, "empty.json", [])
    capsys.readouterr()
    assert cli.main(["bench", empty]) == cli.EXIT_OK
    assert capsys.readouterr().out == ",".join(cli.BENCH_COLUMNS) + "\n"


def test_lab_command(tmp_path, capsys):
    path = tmp_path / "cloud.csv"
    assert cli.main(["lab", "--csv", str(path), "--h", "0.5"]) == cli.EXIT_OK
    assert "witness=(" in capsys.readouterr().out
    assert path.read_text().startswith("x,y,")


def test_log_level_env(monkeypatch, capsys):
    monkeypatch.setenv("NONLIP_LOG", "loud")
    cli.main(["demo", "3.1"])
    assert "NONLIP_LOG" in capsys.readouterr().err
