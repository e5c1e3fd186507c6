# tests/test_cli.py
"""
Tests for the command-line front end (`bin/main.py`) and the environment
settings it reads.

### Functions:
- `cli_env`:
    A fixture that points the log folder at a temporary directory.
- `test_ratios_prints_key_value_lines`:
    `ratios` prints every ratio with 17 significant digits.
- `test_argument_errors_exit_with_one`:
    Missing arguments and invalid values exit with code 1.
- `test_solve_exit_codes`:
    0 on completion, 2 on a Newton failure, 3 on F-ABM overflow.
- `test_weights_mlf_and_decay_commands`:
    Weight tables (`k,omega,delta`; QIA `j,mu`), Mittag-Leffler values and
    decay reports.
- `test_volterra_command`:
    The limit estimate matches c1 / (1 - rho) with rho read from the kernel.
- `test_experiment_and_sweep_commands`:
    Overrides reach the runner; unknown keys exit with 1.
- `test_settings_from_environment`:
    Defaults, overrides and rejected values of the FBDF_* variables.
"""

import sys
import pathlib

import numpy as np
import pytest
from scipy.special import zeta

# add src to sys.path
sys.path.append(str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from bin.main import main
from mod.weights import CapacityError, gl_weights, qia_weights
from utils.config import get_settings
from utils.csv_io import read_csv_table, read_manifest


@pytest.fixture
def cli_env(tmp_path, monkeypatch):
    monkeypatch.setenv("FBDF_LOG_DIR", str(tmp_path / "logs"))
    monkeypatch.delenv("FBDF_JOBS", raising=False)
    monkeypatch.delenv("FBDF_MAX_STEPS", raising=False)
    return tmp_path


def test_ratios_prints_key_value_lines(cli_env, capsys):
    """
    G-L at h = 1, lambda = -1, b = 1 gives rho1 = 1/3.
    """
    code = main(["--out", str(cli_env), "ratios", "--scheme", "gl", "--alpha", "0.5",
                 "--h", "1", "--lambda", "-1", "--b", "1"])
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    values = dict(line.split("=", 1) for line in lines)
    assert float(values["rho1"]) == pytest.approx(1.0 / 3.0, rel=1e-15)
    assert values["feasible"] == "True"
    assert (cli_env / "logs" / "main.log").exists()


def test_argument_errors_exit_with_one(cli_env):
    """
    argparse errors exit with 1, not 2; invalid orders return 1.
    """
    with pytest.raises(SystemExit) as excinfo:
        main(["ratios", "--scheme", "gl"])
    assert excinfo.value.code == 1
    with pytest.raises(SystemExit) as excinfo:
        main(["solve", "--problem", "heat", "--scheme", "gl", "--alpha", "0.5", "--h", "0.1", "--T", "1"])
    assert excinfo.value.code == 1

    code = main(["ratios", "--scheme", "gl", "--alpha", "1.5", "--h", "1", "--lambda", "-1", "--b", "1"])
    assert code == 1


def test_solve_exit_codes(cli_env):
    """
    Cubic completes; lambda = 1 with G-L at h = 1 makes the iteration matrix
    vanish; F-ABM on lambda = -50 overflows.
    """
    out = cli_env / "traj.csv"
    code = main(["--out", str(cli_env), "solve", "--problem", "cubic", "--scheme", "bdf2",
                 "--alpha", "0.6", "--h", "0.1", "--T", "2", "--csv", str(out)])
    assert code == 0
    frame = read_csv_table(out)
    assert list(frame.columns) == ["t", "x1"] and len(frame) == 21

    code = main(["--out", str(cli_env), "solve", "--problem", "linear", "--lam", "1", "--scheme", "gl",
                 "--alpha", "0.5", "--h", "1", "--T", "5"])
    assert code == 2

    code = main(["--out", str(cli_env), "solve", "--problem", "linear", "--lam", "-50", "--scheme", "fabm",
                 "--alpha", "0.5", "--h", "1", "--T", "200"])
    assert code == 3
    assert (cli_env / "linear_fabm_alpha0.5.csv").exists()


def test_weights_mlf_and_decay_commands(cli_env, capsys):
    """
    Smoke runs of the table, evaluation and index commands.
    """
    code = main(["--out", str(cli_env), "weights", "--scheme", "gl", "--alpha", "0.4", "--n", "400"])
    assert code == 0
    output = capsys.readouterr().out
    assert "nonpositive_tail=True" in output and "decay_exponent=" in output
    table = read_csv_table(cli_env / "weights_gl_alpha0.4.csv")
    assert list(table.columns) == ["k", "omega", "delta"] and len(table) == 401
    expected = gl_weights(0.4, 400)
    assert np.allclose(table["omega"], expected.conv[:401], rtol=1e-15)
    # delta_n is the x_0 coefficient of row n
    assert table["delta"].iloc[0] == 0.0
    assert table["delta"].iloc[5] == pytest.approx(-np.sum(expected.conv[:5]), rel=1e-12)

    csv = cli_env / "qia.csv"
    assert main(["--out", str(cli_env), "weights", "--scheme", "qia", "--alpha", "0.5", "--n", "40",
                 "--csv", str(csv)]) == 0
    capsys.readouterr()
    table = read_csv_table(csv)
    assert list(table.columns) == ["j", "mu"] and len(table) == 41
    assert np.allclose(table["mu"], qia_weights(0.5, 40), rtol=1e-15)
    assert abs(table["mu"].sum()) <= 1e-12

    assert main(["mlf", "--alpha", "0.5", "--z=-1,-4,-25"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3 and lines[2].endswith("method=asymptotic")

    code = main(["--out", str(cli_env), "decay", "--kind", "p", "--problem", "cubic", "--scheme", "gl",
                 "--alpha", "0.5", "--h", "0.5", "--T", "20", "--x0", "2", "--y0", "-1"])
    assert code == 0
    report = read_csv_table(cli_env / "cubic_gl_p_alpha0.5.csv")
    assert list(report.columns) == ["t", "e", "index"]
    assert report["index"].iloc[-1] > 0


def test_volterra_command(cli_env, capsys):
    """
    q_j = 0.1 (j+1)^-3/2 has mass 0.1 zeta(3/2); the printed estimate of
    lim n^1/2 x_n is within 5% of c1 / (1 - rho) at n = 20000.
    """
    code = main(["--out", str(cli_env), "volterra", "--alpha", "0.5", "--c1", "1", "--c2", "0.1",
                 "--n", "20000"])
    assert code == 0
    values = dict(line.split("=", 1) for line in capsys.readouterr().out.splitlines())
    rho = float(values["rho"])
    assert rho == pytest.approx(0.1 * zeta(1.5), rel=1e-3)
    expected = float(values["expected_limit"])
    assert expected == pytest.approx(1.0 / (1.0 - rho), rel=1e-12)
    assert abs(float(values["limit_estimate"]) / expected - 1.0) <= 0.05, f"❌ {values}"

    # --rho overrides the kernel amplitude; a mass of 1 has no finite limit
    assert main(["--out", str(cli_env), "volterra", "--rho", "0.5", "--n", "2000"]) == 0
    values = dict(line.split("=", 1) for line in capsys.readouterr().out.splitlines())
    assert float(values["expected_limit"]) == pytest.approx(2.0, rel=1e-3)
    assert main(["--out", str(cli_env), "volterra", "--c2", "0.5", "--n", "2000"]) == 1


def test_experiment_and_sweep_commands(cli_env):
    """
    `--set` overrides, unknown keys and a two-cell sweep.
    """
    code = main(["--out", str(cli_env), "experiment", "volterra_lemma_demo",
                 "--set", "n=1500", "--set", "resolvent_terms=100"])
    assert code == 0
    manifest = read_manifest(cli_env / "volterra_lemma_demo" / "manifest.json")
    assert manifest["parameters"]["n"] == 1500

    assert main(["--out", str(cli_env), "experiment", "cubic_tables", "--set", "gamma=2"]) == 1
    assert main(["--out", str(cli_env), "experiment", "cubic_tables", "--set", "alphas"]) == 1

    csv = cli_env / "sweep.csv"
    code = main(["--out", str(cli_env), "sweep", "--problem", "linear", "--lam", "-50",
                 "--schemes", "gl,fabm", "--alphas", "0.5", "--hs", "1", "--T", "100", "--csv", str(csv)])
    assert code == 0
    assert read_csv_table(csv)["status"].tolist() == ["completed", "overflow"]


def test_settings_from_environment(monkeypatch):
    """
    FBDF_* variables override the defaults; bad values raise ValueError.
    """
    for name in ("FBDF_OUT_DIR", "FBDF_JOBS", "FBDF_LOG_DIR", "FBDF_MAX_STEPS"):
        monkeypatch.delenv(name, raising=False)
    settings = get_settings()
    assert settings.out_dir == pathlib.Path("output") and settings.jobs == 1

    monkeypatch.setenv("FBDF_JOBS", "4")
    monkeypatch.setenv("FBDF_MAX_STEPS", "100")
    settings = get_settings()
    assert settings.jobs == 4 and settings.max_steps == 100
    with pytest.raises(CapacityError):
        gl_weights(0.5, 101)

    monkeypatch.setenv("FBDF_JOBS", "many")
    with pytest.raises(ValueError):
        get_settings()
    monkeypatch.setenv("FBDF_JOBS", "0")
    with pytest.raises(ValueError):
        get_settings()
