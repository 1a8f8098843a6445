import json
import subprocess
import sys

import pytest

from spacings_lab.cli import main


def _run(argv, capsys):
    code = main(argv)
    return code, capsys.readouterr()


def test_constants_writes_header(tmp_path, capsys):
    out = tmp_path / "r"
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "constants_audit", "k_schedule": {"fixed": 1}, "N_list": [1],
                               "reps": 1, "seed": 1, "output_path": str(out), "k_list": [1, 2, 3]}))
    code, cap = _run(["constants", "--config", str(cfg), "--out", str(out)], capsys)
    assert code == 0, cap.err
    lines = (out / "constants.csv").read_text(encoding="utf-8").split("\n")
    assert lines[0] == "# schema=v1"
    assert lines[2] == "k,K_k,K0,abs_gap"
    assert (out / "constants.json").exists() and (out / "constants.timing.json").exists()


def test_missing_config_exit_1(tmp_path, capsys):
    code, cap = _run(["gc", "--config", str(tmp_path / "missing.json")], capsys)
    assert code == 1
    assert "configuration error" in cap.err


def test_bad_arguments_exit_1(capsys):
    assert _run(["nonsense"], capsys)[0] == 1
    assert _run(["gc", "--threads", "0"], capsys)[0] == 1
    assert _run(["gc", "--reps", "0"], capsys)[0] == 1


def test_config_for_other_command_exit_1(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "lil_check", "k_schedule": {"fixed": 1}, "N_list": [100],
                               "reps": 1, "seed": 1, "output_path": "o"}))
    assert _run(["gc", "--config", str(cfg)], capsys)[0] == 1


def test_runtime_error_exit_2(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "lil_check", "k_schedule": {"fixed": 1}, "N_list": [100],
                               "reps": 1, "seed": 1, "output_path": "o"}))
    code, cap = _run(["lil", "--config", str(cfg), "--out", str(blocker / "sub")], capsys)
    assert code == 2
    assert str(blocker) in cap.err


def _gc_config(tmp_path):
    cfg = tmp_path / "gc.json"
    cfg.write_text(json.dumps({"experiment": "gc_curve", "k_schedule": {"fixed": 2}, "N_list": [100, 1000, 5000],
                               "reps": 6, "seed": 1991, "output_path": "unused"}))
    return cfg


def test_threads_byte_identical(tmp_path, capsys):
    cfg = _gc_config(tmp_path)
    for t in ("1", "8"):
        assert _run(["gc", "--config", str(cfg), "--threads", t, "--out", str(tmp_path / t)], capsys)[0] == 0
    for name in ("gc.csv", "gc.json"):
        assert (tmp_path / "1" / name).read_bytes() == (tmp_path / "8" / name).read_bytes()


def test_threads_env_and_override(tmp_path, capsys, monkeypatch):
    cfg = _gc_config(tmp_path)
    monkeypatch.setenv("SPACINGS_LAB_THREADS", "4")
    assert _run(["gc", "--config", str(cfg), "--out", str(tmp_path / "env")], capsys)[0] == 0
    assert _run(["gc", "--config", str(cfg), "--threads", "1", "--out", str(tmp_path / "one")], capsys)[0] == 0
    assert (tmp_path / "env" / "gc.csv").read_bytes() == (tmp_path / "one" / "gc.csv").read_bytes()
    monkeypatch.setenv("SPACINGS_LAB_THREADS", "x")
    assert _run(["gc", "--config", str(cfg), "--out", str(tmp_path / "bad")], capsys)[0] == 1
    # the flag wins over a broken environment value
    assert _run(["gc", "--config", str(cfg), "--threads", "2", "--out", str(tmp_path / "flag")], capsys)[0] == 0


def test_seed_and_reps_flags_override(tmp_path, capsys):
    cfg = _gc_config(tmp_path)
    assert _run(["gc", "--config", str(cfg), "--seed", "5", "--reps", "2", "--out", str(tmp_path / "o")], capsys)[0] == 0
    echo = json.loads((tmp_path / "o" / "gc.csv").read_text(encoding="utf-8").split("\n")[1][len("# config="):])
    assert echo["seed"] == 5 and echo["reps"] == 2


def test_json_format(tmp_path, capsys):
    cfg = _gc_config(tmp_path)
    assert _run(["gc", "--config", str(cfg), "--format", "json", "--out", str(tmp_path / "o")], capsys)[0] == 0
    data = json.loads((tmp_path / "o" / "gc.records.json").read_text(encoding="utf-8"))
    assert data["schema"] == "v1" and len(data["records"]) == 18


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_simulate(tmp_path, capsys, fmt):
    code, _ = _run(["simulate", "--N", "50", "--k", "3", "--seed", "4", "--format", fmt, "--out", str(tmp_path)], capsys)
    assert code == 0
    if fmt == "csv":
        lines = (tmp_path / "sample.csv").read_text(encoding="utf-8").strip().split("\n")
        assert lines[0] == "# schema=v1" and lines[2] == "i,scaled_spacing,block_sum"
        assert len(lines) == 3 + 50
    else:
        data = json.loads((tmp_path / "sample.json").read_text(encoding="utf-8"))
        assert data["N"] == 50 and data["k"] == 3 and len(data["scaled"]) == 50


def test_simulate_rejects_bad_N(tmp_path, capsys):
    assert _run(["simulate", "--N", "0", "--out", str(tmp_path)], capsys)[0] == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "spacings_lab", "simulate", "--N", "10", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "sample.csv").exists()
