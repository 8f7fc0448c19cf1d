import csv
import json

import pytest

from stablelab.cli import CSV_HEADER, main


def _write(tmp_path, name, cfg):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


def _exit_cfg(n_paths=400):
    return {"experiment": "exit-time", "alphas": [1.0, 1.5],
            "n_paths": n_paths, "r_list": [0.2, 0.4], "seed": 11,
            "dt_steps": 16, "horizon_steps": 32}


def _read_rows(path):
    with path.open(newline="") as fh:
        return list(csv.reader(fh))


# ---------------------------------------------------------------------------
# validate command


def test_validate_clean_config(tmp_path, capsys):
    p = _write(tmp_path, "ok.json", _exit_cfg())
    assert main(["validate", str(p)]) == 0
    assert capsys.readouterr().out.strip() == "ok"


def test_validate_reports_every_problem(tmp_path, capsys):
    p = _write(tmp_path, "bad.json", {"experiment": "exit-time",
                                      "alphas": [2.5, 1.5], "bogus": 1})
    assert main(["validate", str(p)]) == 1
    captured = capsys.readouterr()
    assert "alphas" in captured.out
    assert "bogus" in captured.out
    assert "problem(s) found" in captured.err


def test_validate_missing_file(capsys):
    assert main(["validate", "/nonexistent/x.json"]) == 1
    assert "error:" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# run command


def test_run_writes_csv_and_sidecar(tmp_path, capsys):
    p = _write(tmp_path, "exit.json", _exit_cfg())
    out = tmp_path / "out"
    assert main(["run", str(p), "--out", str(out)]) == 0
    rows = _read_rows(out / "exit.csv")
    assert rows[0] == CSV_HEADER
    assert len(rows) == 4  # two radii plus the slope row
    assert [r[1] for r in rows[1:]] == ["r", "r", "slope"]
    assert rows[1][2] == "0.2" and rows[2][2] == "0.4"
    # the slope row has no param value and no censoring fraction
    assert rows[3][2] == "" and rows[3][8] == ""
    for row in rows[1:]:
        float(row[3]) and float(row[4])  # estimate and std_error parse

    doc = json.loads((out / "exit.json").read_text())
    assert set(doc) == {"version", "config", "results", "total_wall_time_s"}
    assert doc["config"]["experiment"] == "exit-time"
    assert doc["config"]["dt_steps"] == 16
    assert doc["results"]["slope"] == pytest.approx(float(rows[3][3]))
    printed = capsys.readouterr().out.splitlines()
    assert str(out / "exit.csv") in printed
    assert str(out / "exit.json") in printed


def test_run_is_reproducible_and_thread_invariant(tmp_path):
    p = _write(tmp_path, "exit.json", _exit_cfg())
    outs = []
    for sub, threads in (("a", None), ("b", None), ("c", "3")):
        out = tmp_path / sub
        argv = ["run", str(p), "--out", str(out)]
        if threads:
            argv += ["--threads", threads]
        assert main(argv) == 0
        outs.append(_read_rows(out / "exit.csv"))
    # every column except wall_time_s must match byte for byte
    trimmed = [[row[:-1] for row in rows] for rows in outs]
    assert trimmed[0] == trimmed[1] == trimmed[2]


def test_run_seed_flag_changes_estimates(tmp_path):
    p = _write(tmp_path, "exit.json", _exit_cfg())
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(p), "--out", str(a)]) == 0
    assert main(["run", str(p), "--out", str(b), "--seed", "77"]) == 0
    doc = json.loads((b / "exit.json").read_text())
    assert doc["config"]["seed"] == 77
    rows_a, rows_b = _read_rows(a / "exit.csv"), _read_rows(b / "exit.csv")
    assert [r[9] for r in rows_b[1:]] == ["77", "77", "77"]
    assert rows_a[1][3] != rows_b[1][3]


def test_run_plot_writes_svg(tmp_path):
    p = _write(tmp_path, "exit.json", _exit_cfg())
    out = tmp_path / "out"
    assert main(["run", str(p), "--out", str(out), "--plot"]) == 0
    svg = (out / "exit.svg").read_text()
    assert svg.lstrip().startswith("<svg")
    assert "</svg>" in svg


def test_run_out_env_fallback(tmp_path, monkeypatch):
    p = _write(tmp_path, "exit.json", _exit_cfg(n_paths=200))
    env_dir = tmp_path / "envout"
    monkeypatch.setenv("STABLELAB_OUT", str(env_dir))
    assert main(["run", str(p)]) == 0
    assert (env_dir / "exit.csv").is_file()
    # an explicit --out still wins
    flag_dir = tmp_path / "flagout"
    assert main(["run", str(p), "--out", str(flag_dir)]) == 0
    assert (flag_dir / "exit.csv").is_file()


def test_run_invalid_config_exits_1(tmp_path, capsys):
    p = _write(tmp_path, "bad.json", {"experiment": "exit-time",
                                      "alphas": [1.0, 1.5], "n_paths": 10,
                                      "r_list": [0.4, 0.4]})
    out = tmp_path / "out"
    assert main(["run", str(p), "--out", str(out)]) == 1
    assert "distinct radii" in capsys.readouterr().err
    assert not out.exists()


def test_run_runtime_failure_exits_2(tmp_path, capsys):
    # valid document, but far too few paths to resolve any value pair
    cfg = {"experiment": "holder", "alphas": [1.0, 1.5], "n_paths": 60,
           "domain": {"r": 1.0},
           "payoff": {"kind": "halfspace", "axis": 0, "threshold": 1.5},
           "grid_r": 0.3, "points_per_axis": 2, "seed": 1,
           "dt_steps": 16, "horizon_steps": 8}
    p = _write(tmp_path, "thin.json", cfg)
    assert main(["run", str(p), "--out", str(tmp_path / "out")]) == 2
    assert "runtime failure:" in capsys.readouterr().err


def test_run_driver_selftest(tmp_path):
    cfg = {"experiment": "driver-selftest", "gammas": [1.0],
           "xi_list": [1.0], "n_samples": 5000, "seed": 4}
    p = _write(tmp_path, "drv.json", cfg)
    out = tmp_path / "out"
    assert main(["run", str(p), "--out", str(out)]) == 0
    rows = _read_rows(out / "drv.csv")
    assert len(rows) == 2
    assert rows[1][1] == "cf[gamma=1]"
    doc = json.loads((out / "drv.json").read_text())
    assert doc["results"]["max_abs_z"] < 4.0


def test_version_flag():
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
