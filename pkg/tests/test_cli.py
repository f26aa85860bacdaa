import json

import numpy as np
import pytest

from impact_games.cli import ConfigError, main, read_strategies_csv, run_experiment


def write_config(tmp_path, config, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return path


MINIMAL_EQUILIBRIUM = {
    "experiment": "equilibrium",
    "grid": {"steps": 15},
    "theta": 1.0,
    "agents": [{"inventories": [1.0]}, {"inventories": [1.0]}],
}


def test_minimal_equilibrium_run(tmp_path):
    report = run_experiment(dict(MINIMAL_EQUILIBRIUM), tmp_path)
    assert report["schema_version"] == "1.0"
    assert report["config"]["sigma"] == "equal_to_Q"  # defaults are materialized
    times, strategies = read_strategies_csv(tmp_path / "strategies.csv")
    assert strategies.shape == (1, 2, 16)
    assert np.allclose(strategies.sum(axis=2), [[1.0, 1.0]], atol=1e-9)
    assert (tmp_path / "report.json").exists()


def test_config_round_trip_is_bit_identical(tmp_path):
    first = run_experiment(dict(MINIMAL_EQUILIBRIUM), tmp_path / "a")
    second = run_experiment(first["config"], tmp_path / "b")
    assert first["results"] == second["results"]
    assert first["config_sha256"] == second["config_sha256"]
    assert (tmp_path / "a/strategies.csv").read_bytes() == (
        tmp_path / "b/strategies.csv"
    ).read_bytes()


def test_schema_violation_reports_the_field_path(tmp_path):
    config = dict(MINIMAL_EQUILIBRIUM, theta=-1.0)
    with pytest.raises(ConfigError) as excinfo:
        run_experiment(config, tmp_path)
    assert excinfo.value.field == "theta"


def test_cli_exit_codes(tmp_path, capsys):
    ok_path = write_config(tmp_path, MINIMAL_EQUILIBRIUM)
    assert main(["equilibrium", "--config", str(ok_path), "--out", str(tmp_path / "out")]) == 0

    bad_path = write_config(tmp_path, dict(MINIMAL_EQUILIBRIUM, theta=-1.0), "bad.json")
    capsys.readouterr()
    assert main(["equilibrium", "--config", str(bad_path), "--out", str(tmp_path / "o2")]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["type"] == "config"
    assert err["error"]["field"] == "theta"

    assert main(["equilibrium", "--config", str(tmp_path / "missing.json")]) == 2
    capsys.readouterr()
    # experiment mismatch between the flag and the config body
    assert main(["costs", "--config", str(ok_path), "--out", str(tmp_path / "o3")]) == 2


def test_costs_experiment_outputs(tmp_path):
    config = {
        "experiment": "costs",
        "grid": {"steps": 25},
        "theta": 1.5,
        "agents": [{"inventories": [1.0]}, {"inventories": [0.0]}],
        "sigma": 0.0,
    }
    report = run_experiment(config, tmp_path)
    costs = report["results"]["expected_cost"]
    assert costs[0] == pytest.approx(0.4882, abs=5e-4)
    assert costs[1] == pytest.approx(-0.0370, abs=5e-4)
    rows = (tmp_path / "costs.csv").read_text().strip().splitlines()
    assert rows[0] == "agent,expected_cost,variance,mean_variance"
    assert len(rows) == 3


def test_theta_critical_experiment(tmp_path):
    config = {
        "experiment": "theta-critical",
        "grid": {"steps": 50},
        "cross_impact": {"family": "identity", "size": 1},
        "n_agents": 2,
        "tolerances": {"bisection": 1e-4},
    }
    report = run_experiment(config, tmp_path)
    result = report["results"]
    assert result["estimate"] == pytest.approx(0.25, abs=0.01)
    assert result["method"] == "bisect"
    assert result["predicted_conjecture"] == pytest.approx(0.25)
    trace = (tmp_path / "trace.csv").read_text().strip().splitlines()
    assert trace[0] == "theta,unstable"
    assert len(trace) == result["n_probes"] + 1


def test_cli_tol_flag_overrides_config(tmp_path):
    config = {
        "experiment": "theta-critical",
        "grid": {"steps": 50},
        "cross_impact": {"family": "identity", "size": 1},
        "n_agents": 2,
    }
    path = write_config(tmp_path, config)
    assert main(
        ["theta-critical", "--config", str(path), "--out", str(tmp_path / "out"), "--tol", "0.05"]
    ) == 0
    report = json.loads((tmp_path / "out/report.json").read_text())
    lo, hi = report["results"]["bracket"]
    assert hi - lo <= 0.05
    assert report["config"]["tolerances"]["bisection"] == 0.05


def test_sweep_isolates_row_errors(tmp_path):
    config = {
        "experiment": "sweep",
        "grid": {"steps": 40},
        "gamma": 10.0,
        "sweep": {
            "points": [
                {"n_assets": 1, "n_agents": 2, "n_steps": 40},
                {"n_assets": 1, "n_agents": 3, "n_steps": 40},
                {"n_assets": 2, "n_agents": 2, "n_steps": 40},
                {"n_assets": 2, "n_agents": 3, "n_steps": 40},
                {"n_assets": 1, "n_agents": 2, "n_steps": 0},
                {"n_assets": 3, "n_agents": 2, "n_steps": 40},
            ]
        },
    }
    report = run_experiment(config, tmp_path)
    rows = report["results"]["rows"]
    assert len(rows) == 6
    failures = [row for row in rows if row["error"]]
    assert len(failures) == 1
    assert report["warnings"]
    lines = (tmp_path / "sweep.csv").read_text().strip().splitlines()
    assert len(lines) == 7


def test_sweep_grid_expansion(tmp_path):
    config = {
        "experiment": "sweep",
        "grid": {"steps": 30},
        "gamma": 10.0,
        "sweep": {"grid": {"n_agents": [2, 3], "n_steps": [30], "n_assets": [1, 2]}},
    }
    report = run_experiment(config, tmp_path)
    assert len(report["results"]["rows"]) == 4


def test_simulate_experiment_is_seed_deterministic(tmp_path):
    config = {
        "experiment": "simulate",
        "grid": {"steps": 20},
        "theta": 1.5,
        "agents": [{"inventories": [1.0]}, {"inventories": [1.0]}],
        "sigma": 1.0,
        "seed": 9,
        "simulate": {"fine_steps": 5, "horizon": 1.5, "initial_prices": 100.0},
    }
    run_experiment(dict(config), tmp_path / "a")
    run_experiment(dict(config), tmp_path / "b")
    assert (tmp_path / "a/path.csv").read_bytes() == (tmp_path / "b/path.csv").read_bytes()
    report = json.loads((tmp_path / "a/report.json").read_text())
    assert report["results"]["seed"] == 9
    assert "generator" in report["results"]


def test_payoff_matrix_experiment(tmp_path):
    config = {
        "experiment": "payoff-matrix",
        "grid": {"steps": 10},
        "theta": 1.5,
        "cross_impact": {"family": "one_factor", "n_assets": 2, "coupling": 0.6},
        "agents": [
            {"inventories": [1.0, 0.0], "mask_options": [[1, 0], [1, 1]]},
            {"inventories": [0.0, 0.0], "mask_options": [[1, 0], [1, 1]]},
        ],
    }
    report = run_experiment(config, tmp_path)
    costs = np.asarray(report["results"]["costs"])
    assert costs.shape == (2, 2, 2)
    nash = np.asarray(report["results"]["nash"])
    assert nash.sum() == 1
    lines = (tmp_path / "payoff.csv").read_text().strip().splitlines()
    assert len(lines) == 5


def test_heterogeneous_config_dispatches_to_the_stacked_solver(tmp_path):
    config = {
        "experiment": "costs",
        "grid": {"steps": 15},
        "agents": [
            {"inventories": [1.0], "theta": 1.0},
            {"inventories": [1.0], "theta": 0.5},
        ],
        "sigma": 0.0,
    }
    report = run_experiment(config, tmp_path)
    costs = report["results"]["expected_cost"]
    assert costs[0] == pytest.approx(0.8286, abs=5e-4)
    assert costs[1] == pytest.approx(0.7317, abs=5e-4)

    with pytest.raises(ConfigError, match="identical agents"):
        run_experiment(dict(config, gamma=2.0), tmp_path / "x")
