import csv
import json
import subprocess
import sys

import pytest

from todamodular.cli import (
    EXIT_FAIL,
    EXIT_OK,
    EXIT_USAGE,
    ConfigError,
    RunConfig,
    load_state,
    main,
    preset_state,
)
from todamodular.reports import IdentityReport


def _verify(tmp_path, name, *extra):
    out = tmp_path / name
    code = main(["verify", *extra, "--out", str(out)])
    return code, out


# -- verify ------------------------------------------------------------------------

def test_verify_flaschka_n3(tmp_path):
    code, out = _verify(tmp_path, "f.json", "--chart", "flaschka", "--n", "3", "--level", "4")
    assert code == EXIT_OK
    records = json.loads(out.read_text())
    assert len(records) >= 30
    assert all(r["status"] == "pass" and r["witness"] == "0" and r["schema"] == 1 for r in records)
    assert {"jacobi", "main2", "theorem-iv", "corollary-b"} <= {r["identity"] for r in records}


def test_verify_natural_n2(tmp_path):
    code, out = _verify(tmp_path, "n.json", "--chart", "natural", "--n", "2", "--level", "4")
    assert code == EXIT_OK
    ids = {r["identity"] for r in json.loads(out.read_text())}
    assert {"conformal", "oevel", "main3", "pushforward-j", "d-z1"} <= ids


def test_verify_rejects_small_n(capsys):
    assert main(["verify", "--n", "1"]) == EXIT_USAGE
    assert "N must be >= 2" in capsys.readouterr().err


@pytest.mark.parametrize("flags", [["--level", "0"], ["--tol", "0"], ["--samples", "0"],
                                   ["--jobs", "0"]])
def test_verify_rejects_bad_config(flags):
    assert main(["verify", *flags]) == EXIT_USAGE


def test_exact_limits_need_force():
    assert main(["verify", "--n", "5"]) == EXIT_USAGE
    assert main(["verify", "--level", "6"]) == EXIT_USAGE
    RunConfig(N=5, force=True).validate()
    RunConfig(N=9, mode="numeric").validate()


def test_exact_reports_byte_identical(tmp_path):
    args = ("--chart", "natural", "--n", "2", "--level", "3")
    _, a = _verify(tmp_path, "a.json", *args)
    _, b = _verify(tmp_path, "b.json", *args, "--jobs", "2")
    assert a.read_bytes() == b.read_bytes()


def test_numeric_reports_carry_seed(tmp_path):
    code, out = _verify(tmp_path, "num.json", "--chart", "flaschka", "--n", "5", "--level", "3",
                        "--mode", "numeric", "--samples", "5", "--seed", "7")
    assert code == EXIT_OK
    records = json.loads(out.read_text())
    assert all(r["seed"] == 7 and r["residual"] < 1e-9 for r in records)


def test_csv_format(tmp_path):
    code, out = _verify(tmp_path, "r.csv", "--chart", "natural", "--n", "2", "--level", "2",
                        "--format", "csv")
    assert code == EXIT_OK
    rows = list(csv.DictReader(out.open()))
    assert rows and rows[0]["schema"] == "1" and all(r["status"] == "pass" for r in rows)


# -- integrate ---------------------------------------------------------------------------

def test_integrate_n2_symmetric(tmp_path, capsys):
    out = tmp_path / "traj.csv"
    code = main(["integrate", "--preset", "n2-symmetric", "--t-end", "10", "--dt", "1e-3",
                 "--out", str(out)])
    assert code == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["schema"] == 1 and summary["max_eigenvalue_drift"] < 1e-9
    header = out.read_text().splitlines()[0].split(",")
    assert header == ["t", "a1", "b1", "b2", "lambda1", "lambda2", "H1", "H2"]


def test_integrate_natural_rest(capsys):
    code = main(["integrate", "--preset", "natural-rest", "--n", "3", "--t-end", "10"])
    assert code == EXIT_OK
    assert json.loads(capsys.readouterr().out)["max_invariant_drift"]["H2"] < 1e-8


def test_integrate_json_output(tmp_path, capsys):
    out = tmp_path / "traj.json"
    assert main(["integrate", "--t-end", "0.1", "--out", str(out), "--format", "json"]) == EXIT_OK
    data = json.loads(out.read_text())
    assert data["columns"][0] == "t" and len(data["rows"]) == len(set(r[0] for r in data["rows"]))


def test_integrate_state_file(tmp_path, capsys):
    f = tmp_path / "s.json"
    f.write_text(json.dumps({"chart": "flaschka", "a": [0.4, 0.3], "b": [0.0, 0.5, -0.5]}))
    assert main(["integrate", "--state-file", str(f), "--t-end", "1"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["N"] == 3


def test_integrate_missing_state_file(tmp_path):
    assert main(["integrate", "--state-file", str(tmp_path / "nope.json")]) == EXIT_USAGE


def test_integrate_bad_arguments(tmp_path):
    assert main(["integrate", "--dt", "0"]) == EXIT_USAGE
    assert main(["integrate", "--record-every", "0"]) == EXIT_USAGE
    f = tmp_path / "s.json"
    f.write_text("{}")
    assert main(["integrate", "--state-file", str(f)]) == EXIT_USAGE
    assert main(["integrate", "--state-file", str(f), "--preset", "n2-symmetric"]) == EXIT_USAGE


def test_integrate_nan_exits_one(tmp_path, capsys):
    f = tmp_path / "blow.json"
    f.write_text(json.dumps({"q": [400.0, -400.0], "p": [0.0, 0.0]}))
    with pytest.warns(RuntimeWarning):
        code = main(["integrate", "--state-file", str(f), "--t-end", "1"])
    assert code == EXIT_FAIL
    cap = capsys.readouterr()
    assert "last good time" in cap.err
    assert json.loads(cap.out)["aborted"]


def test_presets_and_state_loader(tmp_path):
    assert preset_state("natural-rest", 4).N == 4
    assert preset_state("n8-spread").N == 8
    with pytest.raises(ConfigError):
        preset_state("nope")
    f = tmp_path / "c.json"
    f.write_text(json.dumps({"chart": "natural", "coords": [0, 0, 1, -1], "time": 2.0}))
    s = load_state(str(f))
    assert s.chart == "natural" and s.time == 2.0


# -- report --------------------------------------------------------------------------------

def _write(path, reports):
    path.write_text(json.dumps([{"schema": 1, **r.to_dict()} for r in reports]))
    return str(path)


def test_report_all_pass(tmp_path, capsys):
    a = _write(tmp_path / "a.json", [IdentityReport("jacobi", "", "flaschka", 3, (1,))])
    b = _write(tmp_path / "b.json", [IdentityReport("main3", "", "natural", 2, (2,))])
    assert main(["report", a, b]) == EXIT_OK
    assert capsys.readouterr().out.strip().endswith("ALL PASS (2 checks)")


def test_report_with_failure(tmp_path, capsys):
    bad = IdentityReport("jacobi", "", "flaschka", 3, (2,), status="fail", witness="3/1*a1")
    a = _write(tmp_path / "a.json", [IdentityReport("jacobi", "", "flaschka", 3, (1,)), bad])
    assert main(["report", a]) == EXIT_FAIL
    out = capsys.readouterr().out
    assert "3/1*a1" in out and "1 FAILED of 2 checks" in out


def test_report_malformed(tmp_path):
    f = tmp_path / "bad.json"
    f.write_text("{not json")
    assert main(["report", str(f)]) == EXIT_USAGE
    f.write_text(json.dumps([{"identity": "x"}]))
    assert main(["report", str(f)]) == EXIT_USAGE
    assert main(["report", str(tmp_path / "missing.json")]) == EXIT_USAGE


def test_report_needs_files():
    with pytest.raises(SystemExit) as exc:
        main(["report"])
    assert exc.value.code == EXIT_USAGE


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "todamodular", "verify", "--n", "1"],
                       capture_output=True, text=True)
    assert r.returncode == EXIT_USAGE and "error:" in r.stderr
