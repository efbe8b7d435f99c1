from __future__ import annotations

import subprocess
import sys

import numpy as np
import pytest

from fhi.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC, main, paper_config_path
from fhi.config import load_config
from fhi.gridio import read_fhig
from fhi.report import read_reports

SMALL = ["--L", "10", "--N-x", "40", "--T", "2", "--N-t", "200"]


def test_paper_config_ships():
    cfg = load_config(paper_config_path())
    assert cfg.values["alpha"] == 0.8 and cfg.values["N_t"] == 3000 and cfg.values["seed"] == 42


def test_ml_eval_prints_values(capsys):
    assert main(["ml-eval", "--alpha", "1", "--z", "1", "0", "--report", "/dev/null"]) == 0
    out = capsys.readouterr().out.split()
    assert float(out[0]) == pytest.approx(np.e, rel=1e-15)
    assert float(out[1]) == 1.0


def test_report_defaults_to_stderr(capsys):
    assert main(["ml-eval", "--alpha", "0.5", "--z", "-1"]) == 0
    assert '"command": "ml-eval"' in capsys.readouterr().err


def test_simulate_outputs(tmp_path, capsys):
    rc = main(["simulate", "--out-dir", str(tmp_path), "--export", "--dump-noise", *SMALL, "--seed", "4"])
    assert rc == 0
    assert "max|Y|" in capsys.readouterr().out
    Y = read_fhig(tmp_path / "field.fhig")
    assert Y.shape == (201, 41)
    csv = np.loadtxt(tmp_path / "field.csv", delimiter=",", skiprows=1)
    np.testing.assert_array_equal(csv[:, 1:], Y)
    assert sum(1 for _ in open(tmp_path / "field_figure.csv")) == 1 + 200 * 41
    assert read_fhig(tmp_path / "field_noise.fhig").shape == (200, 41)
    (rep,) = read_reports(tmp_path / "report.jsonl")
    assert rep["seed"] == 4 and rep["config"]["N_t"] == 200
    assert set(rep["outputs"]) == {"field_csv", "field_fhig", "figure_csv", "noise_fhig"}


def test_config_echo_reproduces_run(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--out-dir", str(a), *SMALL, "--sigma", "0.3", "--seed", "8"]) == 0
    echo = read_reports(a / "report.jsonl")[0]["diagnostics"]["config_text"]
    (tmp_path / "echo.cfg").write_text(echo)
    assert main(["simulate", "--out-dir", str(b), "--config", str(tmp_path / "echo.cfg")]) == 0
    assert (a / "field.fhig").read_bytes() == (b / "field.fhig").read_bytes()
    assert (a / "field.csv").read_bytes() == (b / "field.csv").read_bytes()


@pytest.mark.parametrize("argv, code", [
    (["simulate", "--alpha", "1.5"], EXIT_CONFIG),
    (["simulate", "--config", "/nonexistent/x.cfg"], EXIT_IO),
    (["simulate", "--L", "1", "--N-x", "10", "--T", "100", "--N-t", "10"], EXIT_CONFIG),
    (["simulate", "--sigma", "0", "--T", "30000", "--N-t", "200", "--override-stability"], EXIT_NUMERIC),
    (["ml-eval", "--alpha", "-1", "--z", "1"], EXIT_CONFIG),
    (["kernel", "--alpha", "2.5"], EXIT_CONFIG),
    (["mildness", "--alpha", "0.8", "--d", "0"], EXIT_CONFIG),
    (["ode-inclusion", "--kind", "reciprocal_type", "--value", "0.9", "--x-max", "2"], EXIT_NUMERIC),
])
def test_exit_codes(tmp_path, argv, code):
    extra = ["--out-dir", str(tmp_path)] if argv[0] == "simulate" else []
    assert main([*argv, *extra, "--report", str(tmp_path / "r.jsonl")]) == code


def test_caputo_check(tmp_path, capsys):
    out = tmp_path / "c.csv"
    assert main(["caputo-check", "--n", "32", "64", "--out", str(out), "--report", "/dev/null"]) == 0
    rows = np.loadtxt(out, delimiter=",", skiprows=1)
    assert rows.shape == (2, 5)
    assert rows[1, 4] < rows[0, 4]
    assert capsys.readouterr().out == out.read_text()


def test_kernel_dump(capsys):
    assert main(["kernel", "--what", "I1", "--alpha", "1", "--lags", "1,2", "--n-x", "5",
                 "--report", "/dev/null"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "lag,offset,value" and len(lines) == 11
    lag, x, v = (float(s) for s in lines[3].split(","))
    assert (lag, x) == (1.0, 0.0)
    assert v == pytest.approx(1 / np.sqrt(0.4 * np.pi), abs=1e-6)


@pytest.mark.parametrize("alpha, d, verdict", [(1.5, 2, "mild"), (1.0, 2, "not_mild"), (1.5, 3, "unknown_regime")])
def test_mildness_command(capsys, alpha, d, verdict):
    assert main(["mildness", "--alpha", str(alpha), "--d", str(d), "--report", "/dev/null"]) == 0
    out = capsys.readouterr().out
    assert out.startswith(f"verdict: {verdict}")
    assert "R,V(R),V(2R),V(2R)/V(R)-1" in out


def test_mildness_refinement_skip(capsys):
    main(["mildness", "--alpha", "1.5", "--d", "1", "--n-paths", "100", "--report", "/dev/null"])
    assert "grid refinement skipped" in capsys.readouterr().out


@pytest.mark.parametrize("kind", ["exp_type", "reciprocal_type", "sqrt_type"])
def test_ode_inclusion_command(tmp_path, capsys, kind):
    out = tmp_path / "o.csv"
    assert main(["ode-inclusion", "--kind", kind, "--selector", "random", "--seed", "3", "--out", str(out),
                 "--report", "/dev/null"]) == 0
    assert "verification passed" in capsys.readouterr().out
    assert out.read_text().splitlines()[0] == "x,f,lower_ok,upper_ok"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "fhi", "ml-eval", "--alpha", "2", "--z", "-1"],
                         capture_output=True, text=True, check=True)
    assert float(res.stdout) == pytest.approx(np.cos(1.0), rel=1e-14)
