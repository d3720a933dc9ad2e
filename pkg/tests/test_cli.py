import json
import re

import pytest

from qmono import cli
from qmono.cli import main, payload_json
from qmono.ensembles import Element, MultipartyEnsemble, build_case, reduce_to_pair, serialize_ensemble
from qmono.protocols import serialize_protocol, shifts_protocol
from qmono.qcore import ket
from qmono.reproduce import Report, Row


@pytest.fixture(autouse=True)
def no_env_seed(monkeypatch):
    monkeypatch.delenv(cli.SEED_ENV, raising=False)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "json")
    assert code == 0, err
    doc = json.loads(out)
    assert set(doc) == {"payload", "sidecar"}
    return doc["payload"]


@pytest.fixture
def shifts_files(tmp_path):
    pair = reduce_to_pair(build_case("V-shifts"), "B1")
    ens_path = tmp_path / "pair.json"
    ens_path.write_text(serialize_ensemble(pair))
    prot_path = tmp_path / "shifts.json"
    prot_path.write_text(serialize_protocol(shifts_protocol()))
    return str(ens_path), str(prot_path)


# ---------------------------------------------------------------- reproduce


def test_reproduce_case_i(capsys):
    code, out, _ = run(capsys, "reproduce", "--case", "I")
    assert code == 0
    assert "I(A:B1)" in out and "FAIL" not in out
    assert "all comparisons pass" in out


def test_reproduce_case_iii_with_n(capsys):
    payload = run_json(capsys, "reproduce", "--case", "III", "--n", "10")
    assert payload["passed"]
    rows = {r["quantity"]: r for r in payload["rows"]}
    assert rows["sum of pair lower bounds"]["computed"] == pytest.approx(10, abs=1e-6)
    assert rows["maximal"]["computed"] is True


def test_reproduce_mismatch_exits_one(capsys, monkeypatch):
    monkeypatch.setattr(cli, "reproduce", lambda sel, opts: Report(sel, [Row("x", "q", 1.0, 2.0, "=")]))
    code, out, _ = run(capsys, "reproduce", "--case", "I")
    assert code == 1
    assert "FAIL" in out and "MISMATCH" in out


@pytest.mark.parametrize(
    "argv",
    [
        ["reproduce", "--case", "VI"],
        ["reproduce", "--case", "I", "--n", "5"],
        ["reproduce", "--case", "II", "--theta", "0.2"],
        ["reproduce", "--case", "III", "--n", "40"],
        ["reproduce"],
        ["bounds", "--case", "II-E1", "--n", "3"],
        ["bounds", "--case", "IV-ET", "--theta", "0.1"],
        ["bounds"],
        ["bounds", "--case", "II-E1", "--pair", "A:B7"],
        ["bounds", "--case", "V-shifts", "--pair", "A:B1", "--samples", "5000"],
        ["optimize", "--case", "II-E1", "--pair", "A:B1"],
        ["monogamy", "--case", "IV-ET"],
        ["monogamy", "--case", "IV-ET", "--methods", "magic", "--seed", "1"],
        ["frobnicate"],
    ],
)
def test_usage_errors_exit_two(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert err


def test_missing_file_exits_two(capsys, tmp_path):
    code, _, err = run(capsys, "ensemble", "validate", "--ensemble", str(tmp_path / "nope.json"))
    assert code == 2 and "nope.json" in err


def test_malformed_file_exits_two(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    doc = json.loads(serialize_ensemble(build_case("II-E3")))
    doc["elements"][0]["p"] = 0.4
    bad.write_text(json.dumps(doc))
    code, _, err = run(capsys, "ensemble", "validate", "--ensemble", str(bad))
    assert code == 2 and "probabilities must sum to 1" in err


# ---------------------------------------------------------------- bounds


def test_bounds_ep_chi_three(capsys):
    payload = run_json(capsys, "bounds", "--case", "IV-EP")
    vals = {b["name"]: b["value"] for b in payload["bounds"]}
    assert vals["holevo_chi"] == pytest.approx(3, abs=1e-12)


def test_bounds_single_element_all_zero(capsys, tmp_path):
    ens = MultipartyEnsemble((2, 2), (Element(1.0, ket((2, 2), "01")),))
    path = tmp_path / "one.json"
    path.write_text(serialize_ensemble(ens))
    payload = run_json(capsys, "bounds", "--ensemble", str(path), "--samples", "2000", "--seed", "1")
    assert {b["name"] for b in payload["bounds"]} == {"cardinality", "holevo_chi", "jrw_lower", "chi_locc", "lambda_locc"}
    assert all(abs(b["value"]) < 1e-12 for b in payload["bounds"])


def test_bounds_shifts_pair_file(capsys, shifts_files):
    ens_path, _ = shifts_files
    payload = run_json(capsys, "bounds", "--ensemble", ens_path, "--samples", "20000", "--seed", "3")
    vals = {b["name"]: b for b in payload["bounds"]}
    assert vals["chi_locc"]["value"] == pytest.approx(2, abs=1e-9)
    lam = vals["lambda_locc"]
    assert lam["standard_error"] > 0 and lam["samples"] == 20000 and lam["seed"] == 3
    # the quadrature value of the printed formula
    assert abs(lam["value"] - 0.5369502) <= 3 * lam["standard_error"]


def test_seed_env_fallback(capsys, monkeypatch, shifts_files):
    ens_path, _ = shifts_files
    monkeypatch.setenv(cli.SEED_ENV, "3")
    a = run_json(capsys, "bounds", "--ensemble", ens_path, "--samples", "2000")
    monkeypatch.delenv(cli.SEED_ENV)
    b = run_json(capsys, "bounds", "--ensemble", ens_path, "--samples", "2000", "--seed", "3")
    assert payload_json(a) == payload_json(b)


def test_bad_env_seed(capsys, monkeypatch):
    monkeypatch.setenv(cli.SEED_ENV, "abc")
    code, _, err = run(capsys, "optimize", "--case", "II-E1", "--pair", "A:B1")
    assert code == 2 and cli.SEED_ENV in err


# ---------------------------------------------------------------- protocol, optimize, monogamy


def test_protocol_run_shifts(capsys, shifts_files):
    ens_path, prot_path = shifts_files
    code, out, _ = run(capsys, "protocol", "run", "--protocol", prot_path, "--ensemble", ens_path)
    assert code == 0
    assert "I(i:m) = 1.204434 bits" in out


def test_protocol_export_round_trips(capsys, tmp_path):
    path = tmp_path / "p.json"
    code, _, _ = run(capsys, "protocol", "export", "--case", "V-shifts", "--pair", "A:B2", "--out", str(path))
    assert code == 0
    payload = run_json(capsys, "protocol", "run", "--protocol", str(path), "--case", "V-shifts", "--pair", "A:B2")
    assert payload["mutual_information"] == pytest.approx(1.2044340029, abs=1e-9)


def test_optimize_e1_pair(capsys):
    code, out, _ = run(capsys, "optimize", "--case", "II-E1", "--pair", "A:B1", "--restarts", "8", "--seed", "1")
    assert code == 0
    assert re.search(r"^value\s+1\.000000$", out, re.M)


def test_optimize_global_template(capsys):
    payload = run_json(capsys, "optimize", "--case", "IV-nonorth", "--template", "global", "--restarts", "4", "--seed", "0")
    assert payload["certified"] == pytest.approx(0.9999942, abs=1e-6)


def test_optimize_one_way_needs_pair(capsys):
    code, _, err = run(capsys, "optimize", "--case", "V-shifts", "--seed", "1")
    assert code == 2 and "--pair" in err


def test_monogamy_et(capsys):
    code, out, _ = run(capsys, "monogamy", "--case", "IV-ET", "--seed", "0")
    assert code == 0
    assert re.search(r"^verdict\s+violated$", out, re.M)
    assert "3.169925" in out


def test_monogamy_explicit_only_needs_no_seed(capsys):
    payload = run_json(capsys, "monogamy", "--case", "V-shifts", "--methods", "explicit")
    assert payload["verdict"] == "violated"
    assert payload["sum_lower"] >= 2.40887 - 1e-5
    assert payload["relative_violation"] > 0.2


# ---------------------------------------------------------------- ensemble commands and output


def test_ensemble_export_and_validate(capsys, tmp_path):
    path = tmp_path / "cat.json"
    code, _, _ = run(capsys, "ensemble", "export", "--case", "III-cat(3)", "--out", str(path))
    assert code == 0
    payload = run_json(capsys, "ensemble", "validate", "--ensemble", str(path))
    assert payload["valid"] and payload["dims"] == [2, 2, 2, 2] and payload["cardinality"] == 2


def test_json_payload_is_byte_identical_across_runs_and_threads(capsys, shifts_files):
    ens_path, _ = shifts_files
    args = ["bounds", "--ensemble", ens_path, "--samples", "30000", "--seed", "9"]
    a = run_json(capsys, *args, "--threads", "1")
    b = run_json(capsys, *args, "--threads", "1")
    c = run_json(capsys, *args, "--threads", "8")
    assert payload_json(a) == payload_json(b) == payload_json(c)


def test_table_numbers_appear_in_json(capsys):
    _, table, _ = run(capsys, "bounds", "--case", "V-shifts", "--pair", "A:B1")
    payload = run_json(capsys, "bounds", "--case", "V-shifts", "--pair", "A:B1")
    shown = re.findall(r"-?\d+\.\d{6}", table)
    expected = []
    for b in payload["bounds"]:
        expected += [f"{b['value']:.6f}", f"{b['standard_error']:.6f}"]
    assert shown == expected


def test_out_file(capsys, tmp_path):
    path = tmp_path / "r.json"
    code, out, _ = run(capsys, "bounds", "--case", "II-E1", "--format", "json", "--out", str(path))
    assert code == 0 and out == ""
    assert "sidecar" in json.loads(path.read_text())
