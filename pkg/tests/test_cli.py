import json
import math
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from qmoments import cli
from qmoments.catalog import ghz as ghz_module
from qmoments.catalog.ghz import ghz_observables, ghz_state
from qmoments.io import dumps, load_schema, moment_file_from_state
from qmoments.moments import correlation_matrix, third_moments


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "json")
    return code, json.loads(out), err


REPORT = load_schema("inequality_report")


@pytest.mark.parametrize("check", ["ghz", "mermin-peres", "appendix-d", "tsirelson"])
def test_verify_checks_pass(capsys, check):
    code, data, _ = run_json(capsys, "verify", check)
    assert code == 0
    jsonschema.validate(data, REPORT)


def test_verify_mermin_peres_numbers(capsys):
    code, data, _ = run_json(capsys, "verify", "mermin-peres")
    assert code == 0
    assert data["lhs"] == pytest.approx(6, abs=1e-10)
    assert data["rhs"] == pytest.approx(3 * math.sqrt(3), abs=1e-10)
    assert data["violated"] is True


def test_verify_ghz_wrong_sign_exits_1(capsys, monkeypatch):
    monkeypatch.setattr(ghz_module, "ghz_observables", lambda: ghz_observables(b_sign=-1.0))
    code, out, err = run(capsys, "verify", "ghz")
    assert code == 1
    assert "premise failed" in err and "<(A+B)^2>" in err


def test_text_output(capsys):
    code, out, _ = run(capsys, "verify", "ghz")
    assert code == 0 and "VIOLATED" in out


def test_search_cutoff_10(capsys):
    code, data, _ = run_json(capsys, "search", "--cutoff", "10")
    assert code == 0
    assert data["lambda_min"] == pytest.approx(-0.00287931, abs=1e-8)
    assert len(data["vector"]) == 11
    assert data["det4M"] == "-21772303951061875"


def test_search_sweep_csv(capsys):
    code, out, _ = run(capsys, "search", "--sweep", "12", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "N,det4M_sign,lambda_min"
    assert lines[11].startswith("10,-1,")


def test_search_sweep_json_schema(capsys):
    code, data, _ = run_json(capsys, "search", "--sweep", "11")
    jsonschema.validate(data, load_schema("sweep"))
    assert data["first_negative_det"] == 10


def test_cfrd_variants(capsys):
    code, data, _ = run_json(capsys, "cfrd", "two-party", "--trials", "30")
    assert code == 0 and data["margin"] >= -1e-9
    code, data, _ = run_json(capsys, "cfrd", "tri", "--trials", "50")
    assert code == 0 and len(data) == 2
    code, data, _ = run_json(capsys, "cfrd", "quad")
    assert code == 0
    assert data[0]["lhs"] == pytest.approx(64) and data[1]["violated"]
    for rep in data:
        jsonschema.validate(rep, REPORT)


def test_cfrd_z_file(capsys, tmp_path):
    p = tmp_path / "z.txt"
    p.write_text("1 0 0")
    code, data, _ = run_json(capsys, "cfrd", "quad", "--z-file", str(p))
    assert code == 0 and data["violated"] is False
    p.write_text("[1, 2, x]")
    assert run(capsys, "cfrd", "quad", "--z-file", str(p))[0] == 2
    assert run(capsys, "cfrd", "quad", "--z-file", str(tmp_path / "none"))[0] == 2
    assert run(capsys, "cfrd", "quad", "--cutoff", "3")[0] == 2


def test_usage_errors(capsys):
    assert run(capsys, "bogus")[0] == 2
    assert run(capsys, "verify", "nothing")[0] == 2
    assert run(capsys, "cfrd", "two-party", "--trials", "0")[0] == 2
    assert run(capsys, "cfrd", "two-party", "--dim", "7")[0] == 2
    assert run(capsys, "search", "--cutoff", "-1")[0] == 2
    assert run(capsys, "search", "--cutoff", "3", "--sweep", "4")[0] == 2
    assert run(capsys, "verify", "ghz", "--format", "csv", "--seed", "-3")[0] == 2


def test_csv_needs_table(capsys, tmp_path):
    p = tmp_path / "m.json"
    p.write_text(dumps(moment_file_from_state(ghz_state(), ghz_observables())))
    assert run(capsys, "lhv", "fit", "--moments", str(p), "--format", "csv")[0] == 2


def test_lhv_fit_modes(capsys, tmp_path):
    p = tmp_path / "ghz.json"
    p.write_text(dumps(moment_file_from_state(ghz_state(), ghz_observables())))
    code, data, _ = run_json(capsys, "lhv", "fit", "--moments", str(p))
    assert code == 0 and data["success"]
    jsonschema.validate(data, load_schema("lhv_fit"))
    code, data, err = run_json(capsys, "lhv", "fit", "--moments", str(p), "--noncontextual")
    assert code == 1 and data["max_residual"] == pytest.approx(2, abs=1e-10)
    assert run(capsys, "lhv", "fit", "--moments", str(p), "--lambda", "abc")[0] == 2
    # an explicit lambda that is too small is a pipeline failure
    code, data, _ = run_json(capsys, "lhv", "fit", "--moments", str(p), "--lambda", "0.5")
    assert code == 1 and "error" in data


def test_lhv_fit_tabulated(capsys, tmp_path):
    st_, obs = ghz_state(), ghz_observables()
    data = {
        "format": "qmoments-moments",
        "version": 1,
        "observables": [{"label": list(lab)} for lab in obs.labels],
        "second": correlation_matrix(st_, obs).to_json(),
        "third": third_moments(st_, obs).to_json(),
    }
    p = tmp_path / "tab.json"
    p.write_text(json.dumps(data))
    assert run(capsys, "lhv", "fit", "--moments", str(p))[0] == 0


def test_lhv_fit_bad_file(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"format": "x"}')
    assert run(capsys, "lhv", "fit", "--moments", str(p))[0] == 2


def test_seed_precedence(monkeypatch):
    monkeypatch.delenv(cli.SEED_ENV, raising=False)
    assert cli.resolve_seed(None) == cli.DEFAULT_SEED == 20240917
    monkeypatch.setenv(cli.SEED_ENV, "5")
    assert cli.resolve_seed(None) == 5
    assert cli.resolve_seed(7) == 7
    monkeypatch.setenv(cli.SEED_ENV, "x")
    with pytest.raises(cli.UsageError):
        cli.resolve_seed(None)


def test_json_is_byte_identical(capsys, monkeypatch):
    monkeypatch.delenv(cli.SEED_ENV, raising=False)
    a = run(capsys, "cfrd", "two-party", "--trials", "25", "--format", "json")[1]
    b = run(capsys, "cfrd", "two-party", "--trials", "25", "--format", "json")[1]
    assert a == b
    c = run(capsys, "cfrd", "two-party", "--trials", "25", "--format", "json", "--seed", "1")[1]
    assert json.loads(c)["seed"] == 1 and a != c


def test_output_file(capsys, tmp_path):
    p = tmp_path / "out.json"
    code, out, _ = run(capsys, "verify", "appendix-d", "--format", "json", "-o", str(p))
    assert code == 0 and out == ""
    assert json.loads(p.read_text())["name"] == "appendix-d"


@pytest.mark.slow
def test_report_all(capsys):
    code, data, _ = run_json(capsys, "report", "all")
    assert code == 0
    assert data["seed"] == cli.DEFAULT_SEED
    for key in ("verify ghz", "cfrd quad", "search", "lhv ghz noncontextual", "weak positivity"):
        assert key in data["sections"]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "qmoments", "verify", "tsirelson"], capture_output=True, text=True)
    assert res.returncode == 0 and "tsirelson" in res.stdout
