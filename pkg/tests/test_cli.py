import json
import subprocess
import sys

import pytest

from logphg import LogPolyhomFn, SymbolExpansion, TrigPoly
from logphg.cli import main, resolve_threads, UsageError
from logphg.scalars import ExactScalar


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def model_symbol(tmp_path):
    A = SymbolExpansion.from_terms(1, -1, [(0, (0,), 1, 1)])
    return write(tmp_path, "q.json", A.to_json())


def test_res(capsys, model_symbol):
    code, out, _ = run(capsys, "res", "--symbol", model_symbol, "--k", "1")
    assert code == 0
    doc = json.loads(out)
    assert ExactScalar.from_json(doc["Res_k"]["exact"]) == ExactScalar.of(4)
    assert doc["Res_k"]["numeric"] == 4.0


def test_compose_round_trip(capsys, tmp_path):
    a = SymbolExpansion.from_terms(2, 1, [(0, (1, 0), 0, 1)])
    b = SymbolExpansion.from_terms(2, -1, [(0, (0, 0), 1, TrigPoly.exp((1, -1)))])
    code, out, _ = run(capsys, "compose", "--a", write(tmp_path, "a.json", a.to_json()),
                       "--b", write(tmp_path, "b.json", b.to_json()), "--depth", "-4")
    assert code == 0
    doc = json.loads(out)
    C = SymbolExpansion.from_json(doc)
    assert C.to_json() == doc
    from logphg import compose

    assert C == compose(a, b, -4)


def test_kv_trace(capsys, tmp_path):
    A = SymbolExpansion.from_terms(1, "-3/2", [(0, (0,), 0, 1)])
    code, out, _ = run(capsys, "kv-trace", "--symbol", write(tmp_path, "a.json", A.to_json()), "--quad-tol", "1e-10")
    assert code == 0
    doc = json.loads(out)
    assert set(doc) == {"TR", "density_modes"}
    assert doc["TR"]["numeric"] == pytest.approx(doc["density_modes"][0]["numeric"] * 2 * 3.141592653589793)


def test_kv_trace_integer_order_is_computation_error(capsys, model_symbol):
    code, out, err = run(capsys, "kv-trace", "--symbol", model_symbol)
    assert code == 1 and out == "" and "IntegerOrder" in err


def test_reg_int(capsys, tmp_path):
    f = LogPolyhomFn.monomial(1, -2)
    code, out, _ = run(capsys, "reg-int", "--fn", write(tmp_path, "f.json", f.to_json()))
    doc = json.loads(out)
    assert code == 0
    assert ExactScalar.from_json(doc["exact"]) == ExactScalar.of(2)
    assert doc["abs_err_bound"] < 1e-10


def test_heat_fit(capsys, tmp_path):
    model = {"n": 1, "q": {"terms": [{"degree": "-1", "log": 0, "coeff": 1.0}]},
             "p": {"kind": "poly", "coeffs": [1, 0, 1]}}
    path = write(tmp_path, "m.json", model)
    code, out, _ = run(capsys, "--threads", "2", "heat-fit", "--model", path)
    assert code == 0
    doc = json.loads(out)
    i = doc["basis"].index({"alpha": "0", "log": 1})
    assert doc["coefficients"][i] == pytest.approx(-1.0, rel=1e-6)
    assert doc["condition"] < 1e12

    basis = write(tmp_path, "b.json", [{"alpha": "0", "log": 0}, {"alpha": "0", "log": 1},
                                       {"alpha": "1", "log": 0}, {"alpha": "1", "log": 1}])
    code, out, _ = run(capsys, "heat-fit", "--model", path, "--basis", "explicit", "--basis-file", basis,
                       "--t-min", "1e-6", "--t-max", "1e-3", "--t-points", "20", "--source", "continuum")
    assert code == 0
    assert len(json.loads(out)["coefficients"]) == 4


def test_heat_fit_needs_basis_file(capsys, tmp_path):
    model = {"n": 1, "q": {"degree": "-1"}, "p": {"kind": "poly", "coeffs": [1, 0, 1]}}
    code, _, err = run(capsys, "heat-fit", "--model", write(tmp_path, "m.json", model), "--basis", "explicit")
    assert code == 2 and "--basis-file" in err


def test_verify_exact(capsys):
    code, out, err = run(capsys, "verify", "--suite", "exact", "--seed", "3")
    assert code == 0
    doc = json.loads(out)
    assert doc["passed"] and all(c["passed"] for c in doc["checks"])
    assert "PASS" in err


def test_verify_reproducible(capsys):
    _, first, _ = run(capsys, "verify", "--suite", "exact", "--seed", "11", "--json")
    _, second, _ = run(capsys, "verify", "--suite", "exact", "--seed", "11", "--json")
    assert first == second


@pytest.mark.parametrize("argv", [
    ["res", "--symbol", "x.json"],
    ["res", "--symbol", "x.json", "--k", "1", "--bogus"],
    ["frobnicate"],
    ["verify", "--suite", "nope"],
])
def test_usage_errors(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_unreadable_input(capsys, tmp_path):
    code, _, err = run(capsys, "res", "--symbol", str(tmp_path / "missing.json"), "--k", "0")
    assert code == 2 and "cannot read" in err
    bad = write(tmp_path, "bad.json", {"dim": 1})
    code, _, _ = run(capsys, "res", "--symbol", bad, "--k", "0")
    assert code == 2


def test_threads_resolution(monkeypatch):
    monkeypatch.delenv("LOGPHG_THREADS", raising=False)
    assert resolve_threads(None) == 1
    monkeypatch.setenv("LOGPHG_THREADS", "3")
    assert resolve_threads(None) == 3
    assert resolve_threads(5) == 5
    monkeypatch.setenv("LOGPHG_THREADS", "many")
    with pytest.raises(UsageError):
        resolve_threads(None)


def test_module_entry_point(model_symbol):
    proc = subprocess.run([sys.executable, "-m", "logphg", "res", "--symbol", model_symbol, "--k", "1"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["Res_k"]["numeric"] == 4.0
