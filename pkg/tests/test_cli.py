import csv
import io
import json
import math
import os

import jsonschema
import pytest

from expfamdiv import cli

from conftest import load_schema


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def div(capsys, *extra):
    code, out, _ = run(capsys, "div", "--family", "exponential", "--theta1", "1", "--theta2", "2", *extra)
    return code, json.loads(out)


def test_div_unnormalized_kl_with_oracle(capsys):
    code, rep = div(capsys, "--kind", "kl", "--unnormalized", "--oracle")
    jsonschema.validate(rep, load_schema("report"))
    assert code == 0
    assert rep["closed_form"] == 0.5 and rep["verdict"] == "pass"
    assert rep["abs_err"] <= 1e-6


def test_div_alpha_without_oracle(capsys):
    code, rep = div(capsys, "--kind", "alpha", "--alpha", "0.5", "--unnormalized")
    jsonschema.validate(rep, load_schema("report"))
    assert code == 0 and rep["verdict"] == "oracle-skipped" and rep["oracle"] is None
    assert abs(rep["closed_form"] - 1.0 / 3.0) <= 1e-15


def test_div_hellinger_identical(capsys):
    code, out, _ = run(capsys, "div", "--family", "exponential", "--theta1", "1", "--theta2", "1",
                       "--kind", "hellinger", "--oracle")
    rep = json.loads(out)
    assert code == 0 and rep["closed_form"] == 0.0 and rep["verdict"] == "pass"


@pytest.mark.parametrize("family,t1,t2", [
    ("poisson", "0.3", "-0.5"), ("bernoulli", "1", "-2"), ("normal1d", "1,0.2", "2,-1"),
    ('{"kind": "CenteredNormalND", "dim": 2}', "2,0.3,1", "1,-0.2,1.5"),
])
@pytest.mark.parametrize("kind,alpha", [
    ("kl", None), ("alpha", "0.3"), ("hellinger", None), ("bhattacharyya", "0.7"), ("renyi", "0.4"),
    ("alpha", "0"), ("bhattacharyya", "1"),
])
@pytest.mark.parametrize("mode", [[], ["--unnormalized"]])
def test_div_closed_form_agrees_with_oracle(capsys, family, t1, t2, kind, alpha, mode):
    argv = ["div", "--family", family, "--theta1", t1, "--theta2", t2, "--kind", kind, "--oracle", *mode]
    if alpha is not None:
        argv += ["--alpha", alpha]
    code, out, err = run(capsys, *argv)
    assert code == 0, err or out
    assert json.loads(out)["verdict"] == "pass"


def test_div_source_parameters(capsys):
    code, out, _ = run(capsys, "div", "--family", "centerednormal1d", "--theta1", "1", "--theta2", "4",
                       "--source-param", "--kind", "hellinger", "--unnormalized", "--oracle")
    rep = json.loads(out)
    assert code == 0
    assert rep["request"]["theta2"] == [0.25]
    assert abs(rep["closed_form"] - 0.58928) <= 1e-5


def test_div_family_json_supplies_theta1(capsys):
    code, out, _ = run(capsys, "div", "--family", '{"kind": "Exponential", "dim": 1, "theta": [1]}',
                       "--theta2", "2", "--kind", "kl", "--unnormalized")
    assert code == 0 and json.loads(out)["closed_form"] == 0.5


def test_div_fail_exit_code(capsys):
    code, rep = div(capsys, "--kind", "renyi", "--alpha", "0.5", "--oracle", "--tolerance", "1e-300")
    assert rep["verdict"] in ("pass", "fail")
    assert code == (2 if rep["verdict"] == "fail" else 0)


@pytest.mark.parametrize("argv", [
    ["div", "--family", "exponential", "--theta1", "1", "--theta2", "2"],
    ["div", "--family", "gamma", "--theta1", "1", "--theta2", "2", "--kind", "kl"],
    ["div", "--family", "exponential", "--theta1", "-1", "--theta2", "2", "--kind", "kl"],
    ["div", "--family", "exponential", "--theta1", "1", "--theta2", "2", "--kind", "alpha"],
    ["div", "--family", "exponential", "--theta1", "1", "--theta2", "2", "--kind", "renyi", "--alpha", "1"],
    ["div", "--family", "exponential", "--theta1", "a", "--theta2", "2", "--kind", "kl"],
    ["frobnicate"],
    [],
])
def test_usage_errors_exit_one(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1
    assert err


def test_seed_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("EXPFAM_SEED", "17")
    _, rep = div(capsys, "--kind", "kl")
    assert rep["request"]["seed"] == 17
    _, rep = div(capsys, "--kind", "kl", "--seed", "3")
    assert rep["request"]["seed"] == 3
    monkeypatch.setenv("EXPFAM_SEED", "x")
    code, _, _ = run(capsys, "div", "--family", "exponential", "--theta1", "1", "--theta2", "2", "--kind", "kl")
    assert code == 1


def test_verify_identities_exponential(capsys):
    code, out, _ = run(capsys, "verify", "identities", "--family", "exponential")
    doc = json.loads(out)
    jsonschema.validate(doc, load_schema("verify"))
    assert code == 0 and doc["passed"]
    names = {c["name"] for c in doc["checks"]}
    assert {"eq12-bhattacharyya-jensen", "propZ-alpha-jensen", "klekl", "bz-decomposition"} <= names
    for c in doc["checks"]:
        if c["tolerance"] is not None and c["tolerance"] <= 1e-6:
            assert c["max_error"] < 1e-6


def test_verify_convexity_exponential(capsys):
    code, out, _ = run(capsys, "verify", "convexity", "--family", "exponential")
    doc = json.loads(out)
    assert code == 0
    assert any(c["name"] == "log-convexity-chain" and c["passed"] for c in doc["checks"])


def test_verify_legendre_names(capsys):
    code, out, _ = run(capsys, "verify", "legendre", "--family", "poisson")
    assert code == 0
    names = {c["name"] for c in json.loads(out)["checks"]}
    assert {"negentropy", "double-conjugate"} <= names


def test_verify_deterministic(capsys):
    first = run(capsys, "verify", "deformation", "--seed", "42")[1]
    second = run(capsys, "verify", "deformation", "--seed", "42")[1]
    assert first == second


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_sweep_exponential(tmp_path, capsys):
    path = tmp_path / "sweep.csv"
    code, _, _ = run(capsys, "sweep", "--family", "exponential", "--theta1", "1", "--theta2", "2",
                     "--output", str(path))
    assert code == 0
    rows = _rows(path.read_text())
    assert list(rows[0]) == list(cli.SWEEP_COLUMNS)
    assert len(rows) == 9
    assert all(float(r["err_F"]) < 1e-6 and float(r["err_Z"]) < 1e-6 for r in rows)
    assert [float(r["alpha"]) for r in rows] == pytest.approx([0.1 * i for i in range(1, 10)])


def test_sweep_degenerate_pair(capsys):
    code, out, _ = run(capsys, "sweep", "--family", "exponential", "--theta1", "1.5", "--theta2", "1.5",
                       "--endpoints")
    assert code == 0
    for r in _rows(out):
        for col in ("jensen_F_scaled", "jensen_Z_scaled", "bhattacharyya_oracle", "alpha_div_oracle"):
            assert abs(float(r[col])) <= 1e-9


def test_sweep_continuity_near_one(capsys):
    code, out, _ = run(capsys, "sweep", "--family", "exponential", "--theta1", "1", "--theta2", "2",
                       "--alpha-range", "0.999,0.999", "--steps", "1", "--endpoints")
    rows = _rows(out)
    assert [float(r["alpha"]) for r in rows] == [0.0, 0.999, 1.0]
    for col in ("jensen_F_scaled", "jensen_Z_scaled"):
        assert abs(float(rows[1][col]) - float(rows[2][col])) <= 1e-3


def test_sweep_output_is_atomic(tmp_path, capsys, monkeypatch):
    path = tmp_path / "sweep.csv"
    path.write_text("previous\n")

    def boom(*a, **k):
        raise cli.IntegrationError("forced")

    monkeypatch.setattr(cli, "sweep_rows", boom)
    code, _, _ = run(capsys, "sweep", "--family", "exponential", "--theta1", "1", "--theta2", "2",
                     "--output", str(path))
    assert code == 2
    assert path.read_text() == "previous\n"
    assert os.listdir(tmp_path) == ["sweep.csv"]


def test_write_atomic_cleans_up(tmp_path, monkeypatch):
    target = tmp_path / "out.csv"

    def fail(src, dst):
        raise OSError("disk full")

    monkeypatch.setattr(cli.os, "replace", fail)
    with pytest.raises(OSError):
        cli.write_atomic(str(target), "x")
    assert os.listdir(tmp_path) == []


def test_deform_sweep_flips_at_minus_one(tmp_path, capsys):
    path = tmp_path / "deform.csv"
    code, _, _ = run(capsys, "deform", "--family", "exponential", "--p-range=-2,3,0.25", "--output", str(path))
    assert code == 0
    rows = _rows(path.read_text())
    assert len(rows) == 21
    by_p = {float(r["p"]): r for r in rows}
    assert all(r["verdict"] == "not-convex" for p, r in by_p.items() if p < -1)
    assert all(r["verdict"] == "convex" for p, r in by_p.items() if p > -1)
    assert math.isfinite(float(by_p[0.0]["bregman"]))
    assert float(by_p[1.0]["bregman"]) == pytest.approx(0.25, abs=1e-12)
    assert by_p[-2.0]["bregman"] == ""


def test_deform_spec_json(capsys):
    code, out, _ = run(capsys, "deform", "--family", "exponential",
                       "--spec", '{"rho": {"tag": "identity"}, "tau": {"tag": "identity"}}')
    doc = json.loads(out)
    assert code == 0
    assert doc["rows"][0]["verdict"] == "convex"
    assert doc["rows"][0]["bregman"] == pytest.approx(0.25, abs=1e-7)


def test_deform_rejects_bad_grid(capsys):
    code, _, _ = run(capsys, "deform", "--family", "exponential", "--grid=-1,2,5")
    assert code == 1


def test_dumps_is_round_trip_safe():
    x = 0.1 + 0.2
    text = cli.dumps({"b": x, "a": [1, float("nan")], "c": None})
    assert json.loads(text) == {"a": [1, None], "b": x, "c": None}
    assert text.index('"a"') < text.index('"b"')
