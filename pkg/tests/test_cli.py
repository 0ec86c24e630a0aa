import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from swarmgrad.cli import main


def _read_csv(path):
    with open(path) as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    return rows[0], rows[1:]


def _manifest(out, name):
    with open(os.path.join(out, f"{name}.manifest.json")) as fh:
        return json.load(fh)


def _bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_stationary_rerun_byte_identical(tmp_path):
    args = ["stationary", "--landscape", "single_cos", "--m", "0.25", "--beta", "5"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert _bytes(a / "stationary.csv") == _bytes(b / "stationary.csv")
    header, rows = _read_csv(a / "stationary.csv")
    assert header[0] == "x" and len(rows) == 2048
    m = _manifest(a, "stationary")
    assert m["exit_code"] == 0 and m["config"]["beta"] == 5.0 and "numpy" in m["versions"]
    assert m["files"] == ["stationary.csv"]


def test_csv_floats_round_trip(tmp_path):
    assert main(["stationary", "--beta", "2", "--n", "64", "--out", str(tmp_path)]) == 0
    _, rows = _read_csv(tmp_path / "stationary.csv")
    for r in rows:
        for v in r:
            assert repr(float(v)) == v


def test_pde_fixed_beta_monotone_energy(tmp_path):
    assert main(["pde", "--fixed-beta", "5", "--t-end", "50", "--n", "512", "--out", str(tmp_path)]) == 0
    header, rows = _read_csv(tmp_path / "pde.csv")
    col = header.index("I")
    values = np.array([float(r[col]) for r in rows])
    assert np.all(np.diff(values) <= 1e-12 * max(1.0, values[0]))
    assert values[-1] < 1e-8
    assert os.path.exists(tmp_path / "pde.manifest.json")


def test_swarm_per_seed_summary(tmp_path):
    args = ["swarm", "--schedule", "power", "--t-end", "0.05", "--N", "300", "--seeds", "2", "--out", str(tmp_path)]
    assert main(args) == 0
    header, rows = _read_csv(tmp_path / "swarm_summary.csv")
    assert "basin_fraction" in header and len(rows) == 2
    header, rows = _read_csv(tmp_path / "swarm.csv")
    assert header[0] == "seed"
    m = _manifest(tmp_path, "swarm")
    assert m["seeds"] == [0, 1]


def test_swarm_threads_do_not_change_output(tmp_path):
    base = ["swarm", "--t-end", "0.02", "--N", "200", "--seeds", "2"]
    assert main(base + ["--out", str(tmp_path / "a")]) == 0
    assert main(base + ["--threads", "2", "--out", str(tmp_path / "b")]) == 0
    for name in ("swarm.csv", "swarm_summary.csv"):
        assert _bytes(tmp_path / "a" / name) == _bytes(tmp_path / "b" / name)


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"beta": 3.0, "grid.n": 128, "landscape.name": "single_cos"}))
    assert main(["stationary", "--config", str(cfg), "--beta", "4", "--out", str(tmp_path)]) == 0
    m = _manifest(tmp_path, "stationary")
    assert m["config"]["beta"] == 4.0 and m["config"]["grid.n"] == 128
    assert m["config"]["landscape.name"] == "single_cos"


def test_unknown_key_rejected(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"betta": 3.0}))
    assert main(["stationary", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    err = json.loads((tmp_path / "error.json").read_text())
    assert err["error"] == "config" and err["exit_code"] == 2 and "betta" in err["message"]
    assert main(["stationary", "--set", "swarm.N=3", "--out", str(tmp_path)]) == 2


@pytest.mark.parametrize("args", [
    ["stationary", "--beta", "-1"],
    ["stationary", "--m", "0.7"],
    ["stationary", "--landscape", "nowhere"],
    ["stationary", "--n", "ten"],
    ["swarm", "--h", "0.9"],
    ["pde", "--set", "dt.method=leapfrog"],
])
def test_invalid_values_exit_2(tmp_path, args):
    assert main(args + ["--out", str(tmp_path)]) == 2
    assert not os.path.exists(tmp_path / "stationary.csv")


def test_numerical_abort_exit_3(tmp_path):
    assert main(["stationary", "--beta", "1e300", "--out", str(tmp_path)]) == 3
    err = json.loads((tmp_path / "error.json").read_text())
    assert err["error"] == "numerical"


def test_check_fi_assert_passes(tmp_path):
    base = ["check-fi", "--count", "5", "--set", "fi.betas=5", "--set", "fi.ms=0.25", "--n", "512"]
    assert main(base + ["--assert", "--out", str(tmp_path)]) == 0
    header, rows = _read_csv(tmp_path / "check_fi.csv")
    assert len(rows) == 5 and all(r[header.index("pass")] in ("True", "1", "true") for r in rows)
    assert main(base + ["--set", "fi.slack=-1", "--out", str(tmp_path)]) == 2


def test_check_fi_assert_failure_exit_4(tmp_path, monkeypatch):
    import dataclasses

    from swarmgrad import cli

    real = cli.sweep_functional_inequality

    def failing(*args, **kwargs):
        # flip the verdict of every record to exercise the failure path
        for rec in real(*args, **kwargs):
            yield dataclasses.replace(rec, result=dataclasses.replace(rec.result, passed=False))

    monkeypatch.setattr(cli, "sweep_functional_inequality", failing)
    base = ["check-fi", "--count", "2", "--set", "fi.betas=5", "--set", "fi.ms=0.25", "--n", "256"]
    assert main(base + ["--assert", "--out", str(tmp_path)]) == 4
    assert _manifest(tmp_path, "check_fi")["failures"] == 2
    assert main(base + ["--out", str(tmp_path)]) == 0


def test_schedule_validate_verdicts(tmp_path):
    assert main(["schedule-validate", "--out", str(tmp_path)]) == 0
    header, rows = _read_csv(tmp_path / "schedule_validate.csv")
    m = _manifest(tmp_path, "schedule_validate")
    assert m["verdict"] == "pass"
    assert main(["schedule-validate", "--gamma", "10.5", "--out", str(tmp_path)]) == 0
    assert _manifest(tmp_path, "schedule_validate")["verdict"] == "fail"


def test_lyapunov_and_talagrand(tmp_path):
    assert main(["lyapunov", "--t-end", "1e4", "--out", str(tmp_path)]) == 0
    _, rows = _read_csv(tmp_path / "lyapunov.csv")
    assert len(rows) > 10
    assert main(["talagrand", "--count", "3", "--set", "fi.betas=2", "--set", "fi.ms=0.25",
                 "--out", str(tmp_path)]) == 0
    assert _manifest(tmp_path, "talagrand")["pass_rate"] == 1.0


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "swarmgrad", "stationary", "--n", "32", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert os.path.exists(tmp_path / "stationary.manifest.json")
