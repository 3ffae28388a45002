import logging

import numpy as np
import pandas as pd
import pytest

from cli import main
from config import PROJECT_ROOT
from core.integrator import IntegrationControls, integrate
from core.logger import logger as app_logger
from core.model import State
from core.trajectory_recorder import TrajectoryRecorder
from utils.helpers import format_number, format_state, format_table, parse_axis_spec
from utils.plotting import build_trajectory_figure
from utils.status_manager import RunStatusManager

SCENARIOS = PROJECT_ROOT / "scenarios"


def run_cli(*args) -> int:
    return main([str(a) for a in args])


# ==================== check ====================

@pytest.mark.parametrize(
    "scenario, exit_code, last_status",
    [("invariance", 0, "success"), ("extinction", 0, "success"), ("all_ones", 3, "failed")],
)
def test_check_exit_codes(tmp_path, capsys, scenario, exit_code, last_status):
    assert run_cli("check", "--scenario", SCENARIOS / f"{scenario}.json", "--out", tmp_path) == exit_code

    out = capsys.readouterr().out
    assert out.splitlines()[0].split() == ["theorem", "verdict", "epsilon", "margins", "caveats"]
    status = RunStatusManager(tmp_path).read_status()
    assert status["command"] == "check"
    assert status["scenario"] == scenario
    assert status["is_running"] is False
    assert status["last_status"] == last_status


def test_epsilon_override_is_reported(tmp_path, capsys):
    assert run_cli("check", "--scenario", SCENARIOS / "invariance.json", "--out", tmp_path,
                   "--epsilon-max", "0.5") == 0
    invariance_row = next(line for line in capsys.readouterr().out.splitlines() if line.startswith("invariance"))
    assert invariance_row.split()[2] == "0.5"


# ==================== simulate ====================

def test_simulate_writes_one_csv_per_state(tmp_path, capsys):
    code = run_cli("simulate", "--scenario", SCENARIOS / "extinction.json", "--out", tmp_path,
                   "--horizon", "20", "--workers", "2")
    assert code == 0
    assert "2/2" in capsys.readouterr().out

    for index in range(2):
        path = tmp_path / f"trajectory_{index:03d}.csv"
        raw = path.read_bytes()
        assert raw.startswith(b"t,x1,x2,x3\n")
        assert b"\r" not in raw
        frame = pd.read_csv(path)
        assert frame["t"].iloc[0] == 0.0
        assert frame["t"].iloc[-1] == 20.0
        assert (frame[["x1", "x2", "x3"]] > 0).all().all()


def test_recorder_round_trips_bits(tmp_path, invariance_set):
    traj = integrate(invariance_set, State(9.5, 9.5, 150.0), 0.0, 5.0, IntegrationControls(sample_interval=0.1))
    recorder = TrajectoryRecorder(tmp_path)
    recorder.record_trajectory(traj, 7)
    assert recorder.trajectory_path(7).name == "trajectory_007.csv"

    loaded = recorder.load_trajectory(7)
    np.testing.assert_array_equal(loaded.to_numpy(), traj.to_frame().to_numpy())
    assert recorder.load_trajectory(8).empty


# ==================== verify ====================

def test_verify_extinction_claims(tmp_path, capsys):
    code = run_cli("verify", "--scenario", SCENARIOS / "extinction.json", "--out", tmp_path, "--horizon", "60")
    assert code == 0
    assert "4/4" in capsys.readouterr().out

    table = pd.read_csv(tmp_path / "verify.csv")
    assert list(table.columns) == ["claim", "subject", "result", "detail"]
    assert sorted(table["claim"].unique()) == ["extinct", "predator-decay"]
    assert (table["result"] == "pass").all()
    assert (tmp_path / "trajectory_001.csv").exists()


@pytest.mark.slow
@pytest.mark.parametrize(
    "scenario, rows",
    [("invariance", 22), ("stability", 14)],
)
def test_verify_invariance_and_stability_claims(tmp_path, scenario, rows):
    assert run_cli("verify", "--scenario", SCENARIOS / f"{scenario}.json", "--out", tmp_path) == 0

    table = pd.read_csv(tmp_path / "verify.csv")
    assert len(table) == rows
    assert set(table["claim"]) == {
        "invariance", "comparison-bounds", "ultimate-boundedness", "permanence", "lyapunov-descent", "convergence",
    }
    assert (table["result"] == "pass").all(), table[table["result"] != "pass"].to_string()


def test_verify_short_run_reports_every_claim(tmp_path):
    run_cli("verify", "--scenario", SCENARIOS / "invariance.json", "--out", tmp_path, "--horizon", "20")

    table = pd.read_csv(tmp_path / "verify.csv")
    assert set(table["claim"]) == {
        "invariance", "comparison-bounds", "ultimate-boundedness", "permanence", "lyapunov-descent", "convergence",
    }
    # #0 和 #1 从 Γ_ε 内出发
    started_inside = table[table["claim"].isin(["invariance", "comparison-bounds"])]
    assert sorted(started_inside["subject"].unique()) == ["#0", "#1"]
    assert (started_inside["result"] == "pass").all()
    assert len(table[table["claim"] == "convergence"]) == 6


def test_verify_without_hypothesis(tmp_path):
    assert run_cli("verify", "--scenario", SCENARIOS / "all_ones.json", "--out", tmp_path, "--horizon", "10") == 3
    assert pd.read_csv(tmp_path / "verify.csv").empty
    assert not (tmp_path / "trajectory_000.csv").exists()


# ==================== sweep ====================

def _sweep(out, workers):
    return run_cli("sweep", "--scenario", SCENARIOS / "all_ones.json", "--out", out,
                   "--axis", "a3:0.1:3:5", "--axis", "d1:0.1:3:4", "--workers", workers)


def test_sweep_grid_is_ordered_and_reproducible(tmp_path):
    assert _sweep(tmp_path / "one", 1) == 0
    assert _sweep(tmp_path / "four", 4) == 0

    first = (tmp_path / "one" / "sweep.csv").read_bytes()
    assert first == (tmp_path / "four" / "sweep.csv").read_bytes()

    table = pd.read_csv(tmp_path / "one" / "sweep.csv")
    assert len(table) == 20
    np.testing.assert_allclose(table["axis1"].iloc[:4], 0.1)
    np.testing.assert_allclose(table["axis2"].iloc[:4], np.linspace(0.1, 3.0, 4))
    assert ((table["extinction"] == "holds") == (table["M3_0"] < 0)).all()
    assert not ((table["invariance"] == "holds") & (table["extinction"] == "holds")).any()


def test_single_axis_sweep(tmp_path):
    assert run_cli("sweep", "--scenario", SCENARIOS / "invariance.json", "--out", tmp_path,
                   "--axis", "a3:0.05:0.5:3") == 0
    table = pd.read_csv(tmp_path / "sweep.csv")
    assert len(table) == 3
    assert table["axis2"].isna().all()


# ==================== 错误处理 ====================

@pytest.mark.parametrize(
    "args",
    [
        ("check", "--scenario", "does/not/exist.json"),
        ("sweep", "--scenario", SCENARIOS / "periodic.json", "--axis", "a1:1:2:3"),
        ("sweep", "--scenario", SCENARIOS / "all_ones.json", "--axis", "zeta:1:2:3"),
        ("sweep", "--scenario", SCENARIOS / "all_ones.json", "--axis", "a3:1:2:3", "--axis", "a3:1:2:3"),
        ("sweep", "--scenario", SCENARIOS / "all_ones.json", "--axis", "a3:2:1:3"),
    ],
)
def test_runtime_errors_exit_2(tmp_path, args):
    assert run_cli(*args, "--out", tmp_path) == 2


def test_malformed_scenario_exit_2(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    assert run_cli("check", "--scenario", path, "--out", tmp_path) == 2


def test_failed_command_marks_status(tmp_path):
    run_cli("sweep", "--scenario", SCENARIOS / "periodic.json", "--axis", "a1:1:2:3", "--out", tmp_path)
    status = RunStatusManager(tmp_path).read_status()
    assert status["command"] == "sweep"
    assert status["last_status"] == "failed"


@pytest.mark.parametrize(
    "args",
    [
        ("sweep", "--scenario", "x.json"),
        ("check", "--scenario", "x.json", "--axis", "a3:1:2:3"),
        ("check", "--scenario", "x.json", "--workers", "0"),
        ("plot", "--scenario", "x.json"),
        ("check",),
    ],
)
def test_usage_errors(args):
    with pytest.raises(SystemExit) as excinfo:
        run_cli(*args)
    assert excinfo.value.code == 2


# ==================== 辅助函数 ====================

def test_format_helpers():
    assert format_number(198.99999999) == "199"
    assert format_number(None) == "-"
    assert format_number(float("nan")) == "-"
    assert format_state((1.0, 2.5, 1e-7)) == "(1, 2.5, 1e-07)"

    text = format_table(pd.DataFrame({"name": ["a", "bbb"], "value": [1, 22]}))
    assert text.splitlines() == ["name  value", "----  -----", "a     1", "bbb   22"]
    assert format_table(pd.DataFrame()) == "(空)"


@pytest.mark.parametrize("spec", ["a3:0.1:3", "a3:x:3:20", ":0.1:3:20", "a3:0:3:20", "a3:0.1:3:0"])
def test_parse_axis_spec_rejects(spec):
    with pytest.raises(ValueError):
        parse_axis_spec(spec)


def test_parse_axis_spec():
    assert parse_axis_spec("a3:0.1:3:20") == ("a3", 0.1, 3.0, 20)
    assert parse_axis_spec("d1:2:2:1") == ("d1", 2.0, 2.0, 1)


def test_trajectory_figure_has_three_traces_per_trajectory(logistic_set):
    traj = integrate(logistic_set, State(0.2, 0.4, 1.0), 0.0, 5.0)
    fig = build_trajectory_figure([(0, traj), (3, traj)], title="logistic")
    assert len(fig.data) == 6
    assert fig.data[3].name == "#3 x1"
    assert fig.layout.title.text == "logistic"


def test_quiet_limits_console_to_warnings(tmp_path):
    try:
        assert run_cli("check", "--scenario", SCENARIOS / "invariance.json", "--out", tmp_path, "--quiet") == 0
        assert app_logger.console_level() == logging.WARNING
    finally:
        app_logger.set_console_level(logging.INFO)
