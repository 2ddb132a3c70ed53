import csv
import io
import json
from fractions import Fraction
from importlib import resources

import jsonschema
import numpy as np
import pytest

from retrosim.channels import choi_of, random_kraus_channel
from retrosim.cli import main, parse_range
from retrosim.serialization import dumps, fmt_float, load_spec, matrix_from_json, matrix_to_json


@pytest.fixture(scope="module")
def schema():
    text = resources.files("retrosim").joinpath("schemas/result.schema.json").read_text()
    return json.loads(text)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_prob_identity_json(capsys, schema):
    code, out, _ = run(capsys, "prob", "--family", "identity", "--d", "3")
    assert code == 0
    rec = json.loads(out)
    jsonschema.validate(rec, schema)
    assert abs(rec["p_max"] - 1 / 9) < 1e-12 and rec["p_analytic"] == "1/9"
    rho0 = matrix_from_json(rec["rho0"])
    assert np.allclose(rho0, np.eye(3) / 3)


@pytest.mark.parametrize("argv", [
    ["prob", "--family", "trace", "--d", "2", "--N", "3", "--M", "1"],
    ["prob", "--family", "unot", "--d", "2", "--method", "generic"],
    ["prob", "--family", "erasure", "--d", "3"],
    ["prob", "--family", "cloning", "--d", "2", "--N", "1", "--M", "2", "--format", "csv"],
    ["curve", "--d", "2", "--M", "1", "--N", "1..20"],
    ["curve", "--d", "3", "--M", "2", "--N", "1..4", "--format", "json"],
    ["verify", "--suite", "linalg"],
    ["simulate", "--family", "identity", "--d", "2", "--trials", "20000", "--seed", "3"],
])
def test_outputs_are_byte_stable(capsys, argv):
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first[0] == 0 and first[1] == second[1]


def test_json_outputs_match_schema(capsys, schema):
    for argv in (["curve", "--d", "2", "--N", "1..5", "--format", "json"],
                 ["verify", "--suite", "symmetric"],
                 ["simulate", "--family", "trace", "--N", "2", "--M", "1", "--trials", "5000"],
                 ["prob", "--family", "classical", "--d", "4", "--timing"]):
        code, out, _ = run(capsys, *argv)
        assert code == 0
        jsonschema.validate(json.loads(out), schema)


def test_timing_flag_adds_wall_time(capsys):
    _, out, _ = run(capsys, "prob", "--family", "identity")
    assert "wall_time_s" not in json.loads(out)
    _, out, _ = run(capsys, "prob", "--family", "identity", "--timing")
    assert json.loads(out)["wall_time_s"] >= 0


def test_curve_values(capsys):
    code, out, _ = run(capsys, "curve", "--d", "2", "--M", "1", "--N", "1..20")
    assert code == 0
    data = [line for line in out.splitlines() if not line.startswith("#")]
    rows = list(csv.DictReader(io.StringIO("\n".join(data))))
    assert [int(r["N"]) for r in rows] == list(range(1, 21))
    for r in rows:
        n = int(r["N"])
        assert float(r["p_analytic"]) == float(Fraction(n, 2 * (n + 1)))
        if n < 15:
            assert abs(float(r["p_solver"]) - n / (2 * (n + 1))) < 1e-9
        else:
            assert r["p_solver"] == ""
        assert r["classical_limit"] == "0.5"


def test_curve_capacity_row(capsys):
    code, out, _ = run(capsys, "curve", "--d", "2", "--M", "1", "--N", "14..15")
    assert code == 0
    lines = out.splitlines()
    assert lines[-1].startswith("# ")
    assert lines[2].split(",")[2] == ""


def test_simulate_identity_frequency(capsys):
    code, out, _ = run(capsys, "simulate", "--family", "identity", "--d", "2",
                       "--trials", "100000", "--seed", "11", "--input-seed", "4")
    rec = json.loads(out)
    assert code == 0 and rec["within_3sigma"]
    assert rec["conditional_output_fidelity_min"] >= 1 - 1e-9
    assert sum(b["trials"] for b in rec["batches"]) == 100000


def test_simulate_workers_do_not_change_output(capsys):
    base = ["simulate", "--family", "estimation", "--trials", "40000", "--seed", "2"]
    assert run(capsys, *base)[1] == run(capsys, *base, "--workers", "3")[1]


def test_simulate_small_trial_warning(capsys):
    with pytest.warns(UserWarning):
        assert run(capsys, "simulate", "--family", "identity", "--trials", "10")[0] == 0


def test_verify_all_passes_and_fault_injection_fails(capsys):
    code, out, _ = run(capsys, "verify")
    rec = json.loads(out)
    assert code == 0 and rec["passed"] and rec["failures"] == 0
    code, out, _ = run(capsys, "verify", "--perturb-choi", "1e-3")
    rec = json.loads(out)
    assert code == 1 and not rec["passed"]
    failed = {c["name"] for c in rec["checks"] if not c["passed"]}
    assert any("duality" in name for name in failed)


def test_verify_csv(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "protocol", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["name", "passed", "residual"]
    assert all(r[1] == "true" for r in rows[1:])


@pytest.mark.parametrize("argv", [
    ["prob", "--family", "trace", "--d", "2"],
    ["prob", "--family", "identity", "--d", "1"],
    ["prob"],
    ["prob", "--family", "trace", "--N", "1", "--M", "3"],
    ["curve", "--N", "5..2"],
    ["verify", "--suite", "nope"],
    ["simulate", "--family", "identity", "--trials", "0"],
])
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "error" in err


def test_argparse_rejects_unknown_family(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["prob", "--family", "teleporter"])
    assert exc.value.code == 2


def test_covariant_method_on_plain_channel_exits_3(capsys, tmp_path):
    spec = random_kraus_channel(2, 2, 2, np.random.default_rng(0))
    path = tmp_path / "k.json"
    path.write_text(json.dumps({"kind": "kraus", "operators": [matrix_to_json(k) for k in spec.operators]}))
    code, _, err = run(capsys, "prob", "--spec", str(path), "--method", "covariant")
    assert code == 3 and "numerical failure" in err


def test_spec_file_round_trip(capsys, tmp_path):
    spec = random_kraus_channel(3, 2, 2, np.random.default_rng(1))
    path = tmp_path / "k.json"
    path.write_text(dumps({"kind": "kraus", "operators": [matrix_to_json(k) for k in spec.operators]}))
    loaded = load_spec(path)
    assert all(np.array_equal(a, b) for a, b in zip(loaded.operators, spec.operators))
    code, out, _ = run(capsys, "prob", "--spec", str(path), "--out", str(tmp_path / "r.json"))
    assert code == 0 and (tmp_path / "r.json").read_text() == out
    rec = json.loads(out)
    assert rec["p_analytic"] is None and rec["method"] == "generic-numeric"

    choi_path = tmp_path / "c.json"
    c = choi_of(spec)
    choi_path.write_text(dumps({"kind": "choi", "d_out": 2, "d_in": 3, "matrix": matrix_to_json(c.matrix)}))
    code, out2, _ = run(capsys, "prob", "--spec", str(choi_path))
    assert code == 0 and abs(json.loads(out2)["p_max"] - rec["p_max"]) < 1e-12


def test_invalid_spec_files_exit_2(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "choi", "d_out": 2, "d_in": 2,
                               "matrix": matrix_to_json(-np.eye(4))}))
    assert run(capsys, "prob", "--spec", str(bad))[0] == 2
    bad.write_text(json.dumps({"kind": "nothing"}))
    assert run(capsys, "prob", "--spec", str(bad))[0] == 2
    assert run(capsys, "prob", "--spec", str(tmp_path / "missing.json"))[0] == 2


def test_float_format_round_trips(rng):
    values = np.concatenate([rng.normal(size=200) * 10.0 ** rng.integers(-300, 300, size=200),
                             [0.0, -0.0, 1.0, 1 / 3, 5e-324, 1.7976931348623157e308]])
    for x in values:
        text = fmt_float(x)
        assert float(text) == x
        assert any(ch in text for ch in ".e")
    assert fmt_float(0.0) == "0.0" and fmt_float(0.5) == "0.5"
    assert json.loads(dumps({"x": 0.1 + 0.2}))["x"] == 0.1 + 0.2


def test_parse_range():
    assert parse_range("3") == range(3, 4)
    assert parse_range("1..20") == range(1, 21)
