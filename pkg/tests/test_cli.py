import csv
import json
import subprocess
import sys

import pytest

from drumcert.cli import main


def _run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_no_command_is_config_error(capsys):
    assert _run([], capsys)[0] == 2


def test_unknown_flag_is_config_error(capsys):
    assert _run(["scan", "--bogus"], capsys)[0] == 2


def test_scan_bad_range(capsys):
    assert _run(["scan", "--e-range", "10:5"], capsys)[0] == 2
    assert _run(["scan", "--e-range", "abc"], capsys)[0] == 2


def test_scan_writes_csv_and_minima(tmp_path, capsys):
    out = tmp_path / "scan.csv"
    mins = tmp_path / "min.json"
    code, _, _ = _run(["scan", "--domain", "disk", "--e-range", "4:20", "--samples", "60",
                       "--n", "60", "--m", "120", "--jobs", "1", "--out", str(out),
                       "--minima-out", str(mins)], capsys)
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 60 and set(rows[0]) == {"E", "t", "t_s", "rank", "method"}
    summary = json.loads(mins.read_text())
    assert len(summary["minima"]) == 2


def test_scan_is_deterministic(tmp_path, capsys):
    args = ["scan", "--domain", "smooth3", "--e-range", "5:9", "--samples", "8", "--n", "40",
            "--m", "80", "--jobs", "1"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert _run(args + ["--out", str(a)], capsys)[0] == 0
    assert _run(args + ["--out", str(b)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"domain": "disk", "e_range": "4:8", "samples": 5, "n": 30, "m": 64, "jobs": 1}))
    out = tmp_path / "s.csv"
    assert _run(["scan", "--config", str(cfg), "--out", str(out), "--minima-out", str(tmp_path / "m.json")],
                capsys)[0] == 0
    assert len(list(csv.DictReader(out.open()))) == 5
    assert _run(["scan", "--config", str(cfg), "--samples", "7", "--out", str(out),
                 "--minima-out", str(tmp_path / "m.json")], capsys)[0] == 0
    assert len(list(csv.DictReader(out.open()))) == 7
    cfg.write_text(json.dumps({"nonsense": 1}))
    assert _run(["scan", "--config", str(cfg)], capsys)[0] == 2


def test_bad_domain_is_config_error(capsys):
    code, _, err = _run(["certify", "--domain", '{"fourier": [0.5, 1.0]}', "--e", "10", "--t", "1e-3",
                         "--e1", "5"], capsys)
    assert code == 2 and "error" in err


def test_solve_disk_ground_state(tmp_path, capsys):
    out, coeffs, grid = tmp_path / "solve.json", tmp_path / "c.json", tmp_path / "g.csv"
    code, _, _ = _run(["solve", "--domain", "disk", "--e-guess", "5.7", "--n", "100", "--m", "200",
                       "--e1", "5.783185962946785", "--out", str(out), "--coeffs-out", str(coeffs)], capsys)
    assert code == 0
    rep = json.loads(out.read_text())
    assert abs(rep["E"] - 5.783185962946785) < 1e-10
    assert rep["refinement"]["converged"]
    assert {iv["bound_kind"] for iv in rep["intervals"]} >= {"MolerPayne", "ThmB_allE"}
    assert _run(["eval-mode", "--coeffs", str(coeffs), "--h", "0.05", "--out", str(grid)], capsys)[0] == 0
    assert grid.read_text().startswith("x,y,u")


def test_solve_in_a_gap_is_numerical_failure(capsys):
    code, _, err = _run(["solve", "--domain", "disk", "--e-guess", "10.2", "--n", "60", "--m", "120",
                         "--e1", "5.78"], capsys)
    assert code == 3


def test_certify_reproduces_radii(tmp_path, capsys):
    out = tmp_path / "c.json"
    code, _, _ = _run(["certify", "--domain", "smooth3s", "--e", "10005.0213579739", "--t", "2.2e-12",
                       "--t-s", "2.5e-12", "--e1", "7.280538121272177", "--e-k", "10007.339",
                       "--out", str(out)], capsys)
    assert code == 0
    rep = json.loads(out.read_text())
    radii = {iv["bound_kind"]: iv["radius"] for iv in rep["intervals"]}
    assert radii["MolerPayne"] == pytest.approx(2.9e-8, rel=0.1)
    assert radii["ThmB_hf"] == pytest.approx(6.3e-10, rel=0.1)
    assert rep["eigenfunction_error"]["l2_error_bound"] == pytest.approx(2.7e-10, rel=0.1)


def test_eval_mode_empty_coefficients(tmp_path, capsys):
    p = tmp_path / "empty.json"
    p.write_text("")
    assert _run(["eval-mode", "--coeffs", str(p)], capsys)[0] == 2
    p.write_text(json.dumps({"basis": "mfs", "coeffs": []}))
    assert _run(["eval-mode", "--coeffs", str(p)], capsys)[0] == 2


def test_eval_mode_disk_modes(tmp_path, capsys):
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"basis": "disk_modes", "modes": [[0, 1, "cos"]], "coeffs": [1.0]}))
    out = tmp_path / "g.csv"
    assert _run(["eval-mode", "--coeffs", str(p), "--h", "0.1", "--out", str(out)], capsys)[0] == 0
    rows = list(csv.DictReader(out.open()))
    assert rows and all(float(r["x"]) ** 2 + float(r["y"]) ** 2 < 1 for r in rows)


def test_verify_suites(tmp_path, capsys):
    out = tmp_path / "v.jsonl"
    assert _run(["verify", "--suite", "window", "--e", "250", "500", "--out", str(out)], capsys)[0] == 0
    recs = [json.loads(line) for line in out.read_text().splitlines()]
    assert len(recs) == 2 and all(r["pass"] for r in recs)
    assert _run(["verify", "--suite", "rellich", "--modes", "10", "--out", str(out)], capsys)[0] == 0


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "drumcert", "scan"], capture_output=True, text=True)
    assert r.returncode == 2


def test_solve_intervals_contain_true_eigenvalue(tmp_path, capsys):
    out = tmp_path / "s.json"
    assert _run(["solve", "--domain", "disk", "--e-guess", "26.3", "--n", "100", "--m", "200",
                 "--e1", "5.783185962946785", "--out", str(out)], capsys)[0] == 0
    rep = json.loads(out.read_text())
    ref = 26.374616427163247
    for iv in rep["intervals"]:
        assert iv["lo"] <= ref <= iv["hi"]
