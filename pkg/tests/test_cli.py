import csv
import io
import json
import subprocess
import sys

import pytest

from jnbellman.cli import main


def run(args):
    out, err = io.StringIO(), io.StringIO()
    old = sys.stdout, sys.stderr
    sys.stdout, sys.stderr = out, err
    try:
        code = main(args)
    except SystemExit as exc:
        code = exc.code
    finally:
        sys.stdout, sys.stderr = old
    return code, out.getvalue(), err.getvalue()


def test_constants_continuous():
    code, out, _ = run(["constants", "--setting", "continuous", "--eps", "0.5"])
    assert code == 0
    assert "C(eps) = 1.21306131942527" in out


def test_constants_dyadic_infinite():
    code, out, _ = run(["constants", "--setting", "dyadic", "--eps", "0.99"])
    assert code == 0
    assert "infinite (eps >= sqrt(2)*log(2))" in out


def test_constants_json_records():
    code, out, _ = run(["constants", "--setting", "conjectured", "--eps", "0.3", "--dim", "2",
                        "--format", "json"])
    doc = json.loads(out)
    assert code == 0
    assert all(r["conjectural"] for r in doc["records"])
    assert {"value", "units", "conjectural", "paper_eq"} <= set(doc["records"][0])


def test_eval_and_validation_errors():
    code, out, _ = run(["eval", "--setting", "dyadic", "--eps", "0.5", "--x1", "0", "--x2", "0.25"])
    assert code == 0 and "B+ = 1.21932921051448" in out
    assert run(["eval", "--eps", "0.5", "--x1", "0", "--x2", "0.9"])[0] == 1
    assert run(["eval", "--eps", "0.5", "--x1", "0"])[0] == 1
    assert run(["constants", "--eps", "-2"])[0] == 1
    assert run(["constants", "--eps", "0.5", "--sign", "sideways"])[0] == 1
    assert run(["nonsense"])[0] == 1
    assert run(["eval", "--setting", "conjectured", "--eps", "0.5", "--x1", "0", "--x2", "0.1"])[0] == 1


def test_sweep_schema():
    code, out, _ = run(["sweep", "--eps-min", "0.5", "--eps-max", "1.1", "--steps", "4", "--dim", "3"])
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["eps", "C_cont", "C_dyad", "delta_plus", "delta_minus", "conjectural_n", "C_conj"]
    last = rows[-1]
    assert last[1] == "" and last[2] == "" and last[3] == "" and last[4] != ""


def test_extremal_outputs(tmp_path):
    target = tmp_path / "phi.csv"
    code, out, _ = run(["extremal", "--eps", "0.5", "--x1", "0", "--x2", "0.1", "--samples", "16",
                        "--out", str(target)])
    assert code == 0 and out == ""
    rows = list(csv.reader(target.open()))
    assert rows[0] == ["t", "phi"] and len(rows) == 17
    code, out, _ = run(["extremal", "--setting", "dyadic", "--eps", "0.5", "--x1", "0", "--x2", "0.1",
                        "--format", "json", "--depth", "30"])
    doc = json.loads(out)
    vals = {r["name"]: r["value"] for r in doc["records"]}
    assert vals["exp_mean"] == pytest.approx(vals["bellman_value"], rel=1e-8)
    assert doc["function"]["type"] == "dyadic"


def test_verify_single_suite_deterministic():
    a = run(["verify", "--suite", "roots", "--seed", "7"])
    b = run(["verify", "--suite", "roots", "--seed", "7"])
    assert a == b and a[0] == 0 and "pass" in a[1]
    assert run(["verify", "--suite", "nope"])[0] == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "jnbellman", "constants", "--setting", "dyadic",
                          "--eps", "0.5", "--format", "csv"], capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.splitlines()[0] == "name,value,units,conjectural,paper_eq,note"
