import json
import subprocess
import sys

import pytest

from gridduel.cli import main

from test_environment import mini_model


def small_plan_text(grid_file, horizon=3, rounds=2):
    return f"""
schema: gridduel-plan/1
name: cli-duel
environment:
  grid: {{file: "{grid_file}"}}
  horizon: {horizon}
agents:
  - name: red
    role: attacker
    strategy: random
    sensors: ["load/*", "sgen/*"]
    actuators: ["load/*", "sgen/*"]
  - name: blue
    role: defender
    strategy: constant
    hyperparameters: {{level: 1.0}}
    sensors: ["load/*", "sgen/*", "transformer/*"]
    actuators: ["load/*", "sgen/*", "transformer/*"]
execution:
  rounds: {rounds}
doe:
  seeds: [0]
"""


@pytest.fixture()
def workspace(tmp_path):
    grid_file = tmp_path / "grid.json"
    grid_file.write_text(json.dumps(mini_model().to_dict()), encoding="utf-8")
    plan_file = tmp_path / "plan.yaml"
    plan_file.write_text(small_plan_text(grid_file), encoding="utf-8")
    return tmp_path, plan_file


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestValidateAndGenerate:
    def test_valid_plan_passes(self, workspace, capsys):
        _, plan_file = workspace
        code, out, err = run_cli(capsys, "validate", "--plan", str(plan_file))
        assert code == 0
        assert json.loads(out) == {"name": "cli-duel", "runs": 1}
        assert "valid" in err

    def test_invalid_plan_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.yaml"
        bad.write_text("schema: gridduel-plan/1\nname: x\n", encoding="utf-8")
        code, _, err = run_cli(capsys, "validate", "--plan", str(bad))
        assert code == 2
        assert "invalid" in err

    def test_missing_plan_exits_2(self, tmp_path, capsys):
        code, _, err = run_cli(capsys, "validate", "--plan", str(tmp_path / "nope.yaml"))
        assert code == 2

    def test_generate_lists_the_runs(self, workspace, capsys):
        _, plan_file = workspace
        code, out, _ = run_cli(capsys, "generate", "--plan", str(plan_file))
        assert code == 0
        rows = [json.loads(line) for line in out.splitlines()]
        assert len(rows) == 1
        assert rows[0]["seed"] == 0 and len(rows[0]["run_id"]) == 12


class TestRunAndReport:
    def test_run_then_skip_then_report(self, workspace, capsys):
        tmp_path, plan_file = workspace
        store = tmp_path / "results"

        code, out, err = run_cli(
            capsys, "run", "--plan", str(plan_file), "--store", str(store)
        )
        assert code == 0
        summary = json.loads(out)
        assert len(summary["executed"]) == 1 and not summary["failed"]
        run_id = summary["executed"][0]
        assert (store / "cli-duel" / "runs" / f"{run_id}.ndjson").exists()
        assert "start" in err

        code, out, _ = run_cli(
            capsys, "run", "--plan", str(plan_file), "--store", str(store)
        )
        assert code == 0
        assert json.loads(out)["skipped"] == [run_id]

        out_dir = tmp_path / "reports"
        code, out, _ = run_cli(
            capsys, "report", "--plan", str(plan_file),
            "--store", str(store), "--out", str(out_dir),
        )
        assert code == 0
        paths = json.loads(out)
        assert set(paths) == {"coins", "rewards", "action_mass"}
        coins = (out_dir / "coins.csv").read_text().splitlines()
        assert coins[0] == "run_id,round,defender_coins,attacker_coins,attacker_won"
        assert len(coins) == 3  # header + two rounds

    def test_failed_runs_exit_3(self, tmp_path, capsys):
        model = mini_model()
        # an overloaded base case fails the pre-duel health check
        model.injections["d2"].p_nominal_kw = 2500.0
        grid_file = tmp_path / "sick.json"
        grid_file.write_text(json.dumps(model.to_dict()), encoding="utf-8")
        plan_file = tmp_path / "plan.yaml"
        plan_file.write_text(small_plan_text(grid_file), encoding="utf-8")

        code, out, _ = run_cli(
            capsys, "run", "--plan", str(plan_file),
            "--store", str(tmp_path / "results"),
        )
        assert code == 3
        summary = json.loads(out)
        assert len(summary["failed"]) == 1 and not summary["executed"]

    def test_store_root_env_fallback(self, workspace, capsys, monkeypatch):
        tmp_path, plan_file = workspace
        monkeypatch.setenv("GRIDDUEL_STORE_ROOT", str(tmp_path / "via-env"))
        code, out, _ = run_cli(capsys, "run", "--plan", str(plan_file))
        assert code == 0
        run_id = json.loads(out)["executed"][0]
        assert (tmp_path / "via-env" / "cli-duel" / "runs" / f"{run_id}.ndjson").exists()


class TestDumpGrid:
    def test_writes_a_loadable_grid(self, tmp_path, capsys):
        out_file = tmp_path / "city.json"
        code, _, err = run_cli(
            capsys, "dump-grid", "--seed", "1", "--out", str(out_file)
        )
        assert code == 0
        doc = json.loads(out_file.read_text(encoding="utf-8"))
        assert doc["schema"] == "gridduel-grid/1"
        assert len(doc["buses"]) > 50

    def test_stdout_when_no_out(self, capsys):
        code, out, _ = run_cli(capsys, "dump-grid", "--seed", "2")
        assert code == 0
        assert json.loads(out)["schema"] == "gridduel-grid/1"


def test_console_entry_point():
    result = subprocess.run(
        [sys.executable, "-m", "gridduel.cli", "--version"],
        capture_output=True, text=True, timeout=60,
    )
    assert result.returncode == 0
    assert "gridduel" in result.stdout


def test_bundled_plan_validates(capsys):
    from pathlib import Path

    plan = Path(__file__).resolve().parent.parent / "plans" / "duel-baseline.yaml"
    code, out, _ = run_cli(capsys, "validate", "--plan", str(plan))
    assert code == 0
    assert json.loads(out)["runs"] == 2
