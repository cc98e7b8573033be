import subprocess
import sys

import pytest

from mrlbm.cli import fmt, main


def read(path):
    return path.read_bytes()


def test_number_format():
    assert fmt(0.1) == "1.00000000000e-01"
    assert fmt(3) == "3"
    assert fmt(None) == ""


def test_run_writes_csvs(tmp_path, capsys):
    assert main(["run", "--preset", "II", "--max-level", "6", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "errors.csv").read_text().splitlines()
    assert lines[0] == "n,t,e_h0,E_h0,compression,leaves"
    assert lines[-1].startswith("26,")
    sol = (tmp_path / "solution.csv").read_text().splitlines()
    assert sol[0] == "j,k,x_center,width,m0"
    assert b"\r" not in read(tmp_path / "errors.csv")
    assert "adaptive==reference false" in capsys.readouterr().out


def test_run_is_byte_identical(tmp_path):
    args = ["run", "--preset", "IV", "--max-level", "6", "--epsilon", "1e-3"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("errors.csv", "solution.csv"):
        assert read(tmp_path / "a" / name) == read(tmp_path / "b" / name)


def test_zero_threshold_flag(tmp_path, capsys):
    assert main(["run", "--preset", "I", "--epsilon", "0", "--max-level", "6", "--out", str(tmp_path)]) == 0
    assert "adaptive==reference true" in capsys.readouterr().out


def test_systems_leave_exact_columns_empty(tmp_path):
    assert main(["run", "--preset", "sw-d1q3", "--max-level", "5", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "errors.csv").read_text().splitlines()
    assert lines[0] == "n,t,e_h0,e_h1,E_h0,E_h1,compression,leaves"
    assert lines[1].split(",")[4:6] == ["", ""]


def test_sweep_footer(tmp_path):
    assert main(["sweep", "--preset", "II", "--max-level", "6", "--eps", "1e-2", "1e-3", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == "epsilon,e_final_h0,compression_final"
    assert len(lines) == 4 and lines[-1].startswith("# slope h0=")


def test_sweep_over_relaxation_rates(tmp_path):
    assert main(["sweep", "--preset", "I", "--max-level", "6", "--eps", "1e-2", "1e-3", "--s-list", "1.0", "1.5",
                 "--out", str(tmp_path)]) == 0
    assert {p.name for p in tmp_path.iterdir()} == {"sweep_s1.csv", "sweep_s1.5.csv"}


def test_decay_study(tmp_path, capsys):
    assert main(["decay-study", "--field", "1", "--max-level", "12", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "decay.csv").read_text().splitlines()
    assert rows[0] == "field,level,detail,ratio"
    assert "2.00" in capsys.readouterr().out


def test_compare_collision(tmp_path):
    assert main(["compare-collision", "--max-level", "6", "--eps", "1e-3", "1e-4", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "sweep_leaves.csv").exists() and (tmp_path / "sweep_reconstructed.csv").exists()


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("preset = II\nmax_level = 6\nepsilon = 1e-2\n")
    assert main(["run", "--config", str(cfg), "--epsilon", "1e-3", "--out", str(tmp_path / "o")]) == 0


@pytest.mark.parametrize("args", [
    ["run", "--preset", "I", "--epsilon", "-1"],
    ["run", "--preset", "I", "--min-level", "5", "--max-level", "4"],
    ["run", "--preset", "I", "--max-level", "25"],
    ["decay-study", "--max-level", "30"],
])
def test_validation_errors_exit_nonzero(args, tmp_path, capsys):
    assert main(args + ["--out", str(tmp_path)]) != 0
    assert "error" in capsys.readouterr().err


def test_unknown_preset_exits_nonzero():
    proc = subprocess.run([sys.executable, "-m", "mrlbm", "run", "--preset", "VII"], capture_output=True, text=True)
    assert proc.returncode != 0 and "invalid choice" in proc.stderr
