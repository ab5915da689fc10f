"""Command-line front-end tests: exit codes, CSV/JSON schema, determinism."""
import json
import math
from types import SimpleNamespace

import numpy as np
import pytest

import ergoflux as ef
import ergoflux.cli as cli


def run(*argv):
    return cli.run(list(argv))


def test_scenario_pinned_row(capsys):
    assert run("scenario", "--case", "ii", "--p", "0", "--theta", "1.5708") == 0
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    assert lines[0] == "# units: energies in hbar*omega0, times in 1/gamma"
    assert lines[1] == "theta,p,work,yield,tau_opt,flag"
    assert lines[2] == "1.5708,0,0.249999999997,0.499998163397,nan,0"


def test_scenario_csv_roundtrip(tmp_path):
    out = tmp_path / "row.csv"
    assert run("scenario", "--case", "i", "--theta", "2.0", "--ndot", "4.0", "--out", str(out)) == 0
    d = np.genfromtxt(out, delimiter=",", names=True, comments="#", skip_header=1)
    res = ef.scenario_continuous(ef.Preparation(p=0.0, theta=2.0), 4.0)
    assert float(d["work"]) == pytest.approx(res.work, rel=1e-10)
    assert float(d["tau_opt"]) == pytest.approx(res.tau_opt, rel=1e-10)
    assert float(d["ndot"]) == 4.0
    assert float(d["flag"]) == 0.0


def test_scenario_validation_failures(capsys):
    assert run("scenario", "--case", "ii", "--theta", "4.0") == 1  # theta out of range
    assert run("scenario", "--case", "nope", "--theta", "1.0") == 1  # bad choice
    assert run("scenario", "--theta", "1.0") == 1  # missing case
    assert run("scenario", "--case", "i", "--theta", "1.0") == 1  # missing ndot
    assert run("scenario", "--case", "ii", "--theta", "1.0", "--bogus", "2") == 1
    capsys.readouterr()


def test_config_file_fills_and_flags_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"case": "ii", "p": 0.25, "theta": math.pi / 2.0}))
    assert run("scenario", "--config", str(cfg)) == 0
    row = capsys.readouterr().out.strip().splitlines()[-1].split(",")
    assert float(row[2]) == pytest.approx(0.0625, abs=1e-9)

    # explicit flag beats the config value
    assert run("scenario", "--config", str(cfg), "--p", "0.0") == 0
    row = capsys.readouterr().out.strip().splitlines()[-1].split(",")
    assert float(row[2]) == pytest.approx(0.25, abs=1e-9)


def test_config_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"case": "ii", "theta": 1.0, "frobnicate": 1}))
    assert run("scenario", "--config", str(cfg)) == 1
    assert run("scenario", "--case", "ii", "--theta", "1", "--config", str(tmp_path / "no.json")) == 1
    capsys.readouterr()


def test_sweep_deterministic_and_well_formed(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = (
        "sweep", "--case", "iii",
        "--theta", "0.5", "2.5", "4",
        "--nbar-log", "-1", "1", "3",
        "--tau", "1.0",
        "--out",
    )
    assert run(*args, str(a)) == 0
    assert run(*args, str(b), "--serial") == 0
    assert a.read_bytes() == b.read_bytes()

    d = np.genfromtxt(a, delimiter=",", names=True, comments="#", skip_header=1)
    assert d.dtype.names == ("theta", "nbar", "work", "yield", "tau_opt", "flag")
    assert len(d) == 12
    # theta-major ordering with the log axis inside
    assert np.allclose(d["theta"][:3], 0.5)
    assert np.allclose(d["nbar"][:3], np.logspace(-1, 1, 3))
    res = ef.scenario_pulsed(ef.Preparation(p=0.0, theta=0.5), 0.1, 1.0)
    assert float(d["work"][0]) == pytest.approx(res.work, rel=1e-10)


def test_sweep_axis_validation(tmp_path, capsys):
    out = str(tmp_path / "x.csv")
    # only one axis
    assert run("sweep", "--case", "ii", "--theta", "0", "3", "5", "--out", out) == 1
    # three axes
    assert (
        run(
            "sweep", "--case", "iii",
            "--theta", "0", "3", "4",
            "--nbar", "0.1", "1", "3",
            "--tau", "0.5", "2", "3",
            "--out", out,
        )
        == 1
    )
    # linear and log spec for the same axis
    assert (
        run(
            "sweep", "--case", "iii",
            "--theta", "0", "3", "4",
            "--nbar", "1.0",
            "--nbar-log", "-1", "1", "3",
            "--tau", "1.0",
            "--out", out,
        )
        == 1
    )
    # sweeps are file-only
    assert run("sweep", "--case", "ii", "--theta", "0", "3", "4", "--p", "0", "0.5", "3") == 1
    capsys.readouterr()


def test_optimize_summary_and_waveform(tmp_path, capsys):
    out = tmp_path / "pulse.csv"
    code = run(
        "optimize", "--p", "0", "--theta", "2.0", "--nbar", "0.3",
        "--horizon", "5", "--nodes", "48", "--starts", "1", "--seed", "1",
        "--out", str(out),
    )
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["charge"] == pytest.approx(0.3, rel=1e-9)
    assert 0.0 < summary["work"] <= ef.ergotropy(ef.Preparation(p=0.0, theta=2.0)) + 1e-9
    assert isinstance(summary["converged"], bool)
    assert len(summary["start_objectives"]) == 1

    d = np.genfromtxt(out, delimiter=",", names=True, comments="#", skip_header=1)
    assert d.dtype.names == ("time", "rabi")
    assert len(d) == 48
    assert d["time"][0] == 0.0 and d["time"][-1] == 5.0
    assert (d["rabi"] >= 0.0).all()


def test_optimize_numerical_failure_exit_code(monkeypatch, capsys):
    def boom(*a, **k):
        raise ef.IntegrationAccuracyError("unstable")

    monkeypatch.setattr(cli, "solve_optimal_control", boom)
    assert run("optimize", "--theta", "2.0", "--nbar", "1.0") == 2
    capsys.readouterr()


def test_husimi_grid_matches_library(capsys):
    assert run("husimi", "--theta", "1.5708", "--re", "-1", "1", "3", "--im", "0", "1", "2") == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("#")
    header = lines[1].split(",")
    assert header[0] == "q"
    assert [float(v) for v in header[1:]] == [-1.0, 0.0, 1.0]
    grid = ef.husimi(ef.output_state(1.5708), np.linspace(-1, 1, 3), np.linspace(0, 1, 2))
    row1 = [float(v) for v in lines[3].split(",")]
    assert row1[0] == 1.0
    assert row1[1:] == pytest.approx(list(grid.q[1]), rel=1e-10)


def test_verify_scale_suite(capsys):
    assert run("verify", "--suite", "scale-invariance") == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["suite"] == "scale-invariance"
    assert rep["passed"] is True
    assert rep["max_work_deviation"] <= rep["tolerance"]


def test_verify_failure_exit_code(monkeypatch, capsys):
    fake = SimpleNamespace(
        factors=np.array([0.1]),
        max_work_deviation=1.0,
        max_stopping_deviation=1.0,
        tolerance=1e-9,
        passed=False,
    )
    monkeypatch.setattr(cli, "scale_invariance_check", lambda *a, **k: fake)
    assert run("verify", "--suite", "scale-invariance") == 3
    rep = json.loads(capsys.readouterr().out)
    assert rep["passed"] is False


def test_verify_unknown_suite(capsys):
    assert run("verify", "--suite", "astrology") == 1
    capsys.readouterr()


def test_help_exits_cleanly(capsys):
    assert run("--help") == 0
    assert "ergoflux" in capsys.readouterr().out
