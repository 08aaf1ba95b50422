import json
import sys

import pytest

from src.main import EXIT_CORRECTNESS, EXIT_OK, EXIT_USAGE, main

CASE1_FLAGS = ["--case", "1", "--P", "15", "--B", "3", "--N", "8", "--r", "4/15", "--rprime", "4/15"]


def test_leakage_command(tmp_path, capsys):
    code = main(["leakage", "--P", "12", "--Pr", "3", "--B", "1,2,3,4,6", "--out-dir", str(tmp_path)])
    assert code == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "P,Pr,B,case1_bits,case2_bits"
    assert len(lines) == 6
    assert lines[1].startswith("12,3,1,0.0,0.0")
    assert (tmp_path / "leakage.csv").exists()


def test_costs_command(tmp_path, capsys):
    from src.analytics.costs import reading_cost, writing_cost

    code = main(["costs", "--N", "10", "--r", "0.1", "--rprime", "0.1", "--P", "30", "--q", "31",
                 "--out-dir", str(tmp_path)])
    assert code == EXIT_OK
    rows = capsys.readouterr().out.splitlines()
    assert rows[0].startswith("case,reading_cost,writing_cost")
    case1 = rows[1].split(",")
    assert float(case1[1]) == pytest.approx(reading_cost("case1", 10, "0.1", 30, 31))
    assert float(case1[2]) == pytest.approx(writing_cost("case1", 10, "0.1", 30, 31))
    assert (tmp_path / "costs.csv").exists()


def test_costs_single_case(tmp_path, capsys):
    assert main(["costs", "--case", "2", "--N", "10", "--r", "0.1", "--rprime", "0.1", "--P", "30",
                 "--q", "31", "--out-dir", str(tmp_path)]) == EXIT_OK
    assert len(capsys.readouterr().out.splitlines()) == 2


def test_tradeoff_command(tmp_path, capsys):
    code = main(["tradeoff", "--P", "12", "--Pr", "3", "--B", "1,2,3,4,6", "--epsilon", "2.0",
                 "--out-dir", str(tmp_path)])
    assert code == EXIT_OK
    assert "optimal_B=2" in capsys.readouterr().out


def test_tradeoff_without_feasible_B(tmp_path, capsys):
    code = main(["tradeoff", "--P", "12", "--Pr", "3", "--B", "2,3", "--epsilon", "0.1",
                 "--out-dir", str(tmp_path)])
    assert code == EXIT_USAGE
    assert "error:" in capsys.readouterr().err


def test_init_and_run_from_snapshot(tmp_path, capsys):
    assert main(["init", *CASE1_FLAGS, "--seed", "2", "--out-dir", str(tmp_path / "init")]) == EXIT_OK
    snapshot = tmp_path / "init" / "snapshot.json"
    assert "Snapshot written to" in capsys.readouterr().out
    assert json.loads(snapshot.read_text())["config"]["P"] == 15

    code = main(["run", "--snapshot", str(snapshot), "--rounds", "2", "--out-dir", str(tmp_path / "run")])
    assert code == EXIT_OK
    assert "2 rounds verified" in capsys.readouterr().out


def test_run_from_corrupted_snapshot(tmp_path, capsys):
    assert main(["init", *CASE1_FLAGS, "--out-dir", str(tmp_path)]) == EXIT_OK
    snapshot = tmp_path / "snapshot.json"
    data = json.loads(snapshot.read_text())
    data["config"]["P"] = "x"
    snapshot.write_text(json.dumps(data))
    capsys.readouterr()

    assert main(["run", "--snapshot", str(snapshot), "--out-dir", str(tmp_path / "run")]) == EXIT_USAGE
    assert "invalid value" in capsys.readouterr().err

    snapshot.write_text("{truncated")
    assert main(["run", "--snapshot", str(snapshot)]) == EXIT_USAGE
    assert "not valid JSON" in capsys.readouterr().err


def test_run_from_config_file(tmp_path, capsys):
    config_file = tmp_path / "experiment.env"
    config_file.write_text("CASE=case2\nP=12\nB=3\nN=10\nR=1/4\nR_PRIME=1/4\nUSERS=2\nROUNDS=2\nSEED=4\n")
    code = main(["run", "--config", str(config_file), "--out-dir", str(tmp_path / "out")])
    assert code == EXIT_OK
    report = json.loads((tmp_path / "out" / "round_reports.json").read_text())
    assert report["all_correct"] is True
    assert report["config"]["users"] == 2


def test_run_missing_config_file(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "absent.env")]) == EXIT_USAGE
    assert "does not exist" in capsys.readouterr().err


def test_run_invalid_model(tmp_path, capsys):
    flags = ["--case", "1", "--P", "12", "--B", "5", "--N", "8", "--r", "1/4", "--rprime", "1/4"]
    assert main(["run", *flags, "--out-dir", str(tmp_path)]) == EXIT_USAGE
    assert "B must divide P" in capsys.readouterr().err


def test_run_rejects_zero_rounds(tmp_path):
    assert main(["run", *CASE1_FLAGS, "--rounds", "0", "--out-dir", str(tmp_path)]) == EXIT_USAGE


def test_correctness_failure_exit_code(tmp_path, monkeypatch, capsys):
    from src import main as main_module
    from src.pipeline.orchestrator import CorrectnessError

    def broken(*args, **kwargs):
        raise CorrectnessError(1, user=1, detail="read mismatch")

    monkeypatch.setattr(main_module, "run_experiment", broken)
    assert main(["run", *CASE1_FLAGS, "--out-dir", str(tmp_path)]) == EXIT_CORRECTNESS
    assert "round 1, user 1" in capsys.readouterr().err


def test_unknown_subcommand():
    assert main(["train"]) == EXIT_USAGE


def test_missing_subcommand(monkeypatch):
    monkeypatch.setattr(sys, "argv", ["main.py"])
    assert main() == EXIT_USAGE


def test_bad_list_argument():
    assert main(["leakage", "--P", "12", "--Pr", "3", "--B", "1,x"]) == EXIT_USAGE
