import subprocess
import sys

import pytest

from fxhekm.cli import main


def test_complexity(capsys):
    assert main(["complexity", "--L", "16", "--M", "7", "--p", "2", "--kind", "FXHEKM"]) == 0
    out = capsys.readouterr().out
    assert "FXHEKM" in out and "59" in out and "46" in out


def test_run_then_theory(tmp_path, capsys):
    out = tmp_path / "r"
    assert main(["run", "scenario1", "--trials", "2", "--iters", "400", "--seed", "7", "--out", str(out)]) == 0
    assert (out / "mse.csv").exists()
    assert "seed_base = 7" in (out / "manifest.txt").read_text()
    capsys.readouterr()
    assert main(["theory", str(out)]) == 0
    assert "j_inf_db" in capsys.readouterr().out


def test_sweep_and_identify(tmp_path):
    assert main(["sweep", "impulsive_sweep", "--param", "zeta", "--values", "0.1,0.3",
                 "--trials", "1", "--iters", "200", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "sweep_zeta" / "zeta=0.3" / "anr.csv").exists()
    assert main(["identify", "scenario2", "--out", str(tmp_path / "id")]) == 0
    assert len((tmp_path / "id" / "secondary_estimate.txt").read_text().splitlines()) == 7


def test_errors_return_nonzero(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing.ini")]) == 2
    assert "error" in capsys.readouterr().err
    assert main(["theory", str(tmp_path)]) == 2
    with pytest.raises(SystemExit):
        main(["sweep", "scenario1", "--param", "kappa", "--values", "1"])


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "fxhekm", "complexity", "--L", "4", "--M", "2"],
                         capture_output=True, text=True, check=True)
    assert "FXLMS" in out.stdout
