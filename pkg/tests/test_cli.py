import subprocess
import sys

import pytest
import yaml

from approxmem.cli import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_MISMATCH, EXIT_OK, main

TINY = {
    "workload": "canny",
    "workload_params": {"width": 48, "height": 32},
    "frames": 20,
    "inputs": {"scenes": [{"frames": 3, "seed": 1}]},
    "goal": {"schedule": [[0, 28]]},
    "oracle": {"frames": 2},
}


def _write(tmp_path, raw, name="s.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(raw))
    return str(p)


def test_run_then_replay(tmp_path, capsys):
    sc = _write(tmp_path, TINY)
    out = tmp_path / "out"
    assert main(["run", "--scenario", sc, "--seed", "7", "--out", str(out)]) == EXIT_OK
    assert (out / "trace.csv").exists() and (out / "summary.yaml").exists()
    summary = yaml.safe_load((out / "summary.yaml").read_text())
    assert summary["frames"] == 20
    assert main(["replay", "--trace", str(out / "trace.csv")]) == EXIT_OK
    assert "replay OK" in capsys.readouterr().out
    with open(out / "trace.csv", "a") as fh:
        fh.write("junk\n")
    assert main(["replay", "--trace", str(out / "trace.csv")]) == EXIT_MISMATCH


def test_config_errors_exit_2(tmp_path, capsys):
    bad = _write(tmp_path, {**TINY, "frames": 0})
    assert main(["run", "--scenario", bad, "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err
    assert main(["run", "--scenario", str(tmp_path / "missing.yaml"), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    unknown = _write(tmp_path, {**TINY, "goal": {"schedule": [[0, 28]], "deadline": 3}}, "u.yaml")
    assert main(["oracle", "--scenario", unknown, "--threshold", "28"]) == EXIT_CONFIG
    assert main(["replay", "--trace", str(tmp_path / "nothing.csv")]) == EXIT_CONFIG


def test_oracle_exit_codes(tmp_path, capsys):
    sc = _write(tmp_path, TINY)
    assert main(["oracle", "--scenario", sc, "--threshold", "255", "--table"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("median_q") == 65 and "feasible" in out

    noisy = {**TINY, "memory": {"inject_at_nominal": True}, "tables": {"sram_read_ber": {v: 1e-3 for v in (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)}}}
    sc2 = _write(tmp_path, noisy, "noisy.yaml")
    assert main(["oracle", "--scenario", sc2, "--threshold", "0"]) == EXIT_INFEASIBLE
    assert "INFEASIBLE" in capsys.readouterr().out


def test_sweep_to_file(tmp_path):
    sc = _write(tmp_path, {**TINY, "workload": "synthetic", "workload_params": {}, "inputs": {}, "goal": {"schedule": [[0, 5]]}})
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--kind", "invocation_period", "--scenario", sc, "--values", "1,5", "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "dimension,value,metric,result"
    assert len(lines) == 1 + 2 * 5


def test_bad_arguments_exit_via_argparse(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--kind", "voltage", "--scenario", "x"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        main(["run", "--scenario", "x", "--seed", "-1", "--out", "y"])


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "approxmem", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("run", "oracle", "sweep", "replay"):
        assert cmd in proc.stdout
