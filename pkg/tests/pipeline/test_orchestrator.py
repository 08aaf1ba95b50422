import json
import pytest
import numpy as np
from pathlib import Path
from src.coordinator.coordinator import initialize, load_snapshot
from src.model_domain.model import GlobalModel, ModelConfig, SubpacketAddress
from src.pipeline.orchestrator import (
    CorrectnessError,
    ExperimentConfig,
    ExperimentConfigError,
    ExperimentRunner,
    build_experiment_config,
    load_experiment_config,
    run_experiment,
)
from src.worker_pool.pool import WorkerPool


class DummyRunner(ExperimentRunner):
    # Always writes real subpackets 2 and 4 of segment 1, 2 of segment 2 and 5 of segment 3.
    def draw_magnitudes(self, round_index, user):
        magnitudes = np.full(self.model.P, 0.1)
        magnitudes[[1, 3, 6, 14]] = 1.0
        return magnitudes


@pytest.fixture
def case1_experiment(case1_config) -> ExperimentConfig:
    return ExperimentConfig(model=case1_config, users=1, rounds=2, seed=3)


@pytest.fixture
def fixed_init(case1_config, case1_bundle):
    model = GlobalModel.random(case1_config, seed=np.random.default_rng([3, 0]))
    return initialize(case1_config, model, seed=3, bundle=case1_bundle)


def test_case1_fixed_permutation_scenario(case1_experiment, fixed_init, tmp_path: Path):
    runner = DummyRunner(case1_experiment, output_dir=tmp_path, init=fixed_init, pool=WorkerPool(max_workers=1))
    reports = runner.run()
    assert [r.round for r in reports] == [1, 2]
    assert all(all(r.correctness.values()) for r in reports)

    # Round 2 reads the subpackets written in round 1, seen as permuted (1,1),(3,1),(3,2),(1,3).
    assert sorted(reports[1].downlink, key=lambda a: (a.segment, a.subpacket)) == [
        SubpacketAddress(1, 1), SubpacketAddress(3, 1), SubpacketAddress(3, 2), SubpacketAddress(1, 3),
    ]
    assert reports[0].cost.measured_writing_symbols == 64
    assert reports[0].cost.measured_writing_cost == pytest.approx(64 / 45)


def test_run_writes_outputs(case1_experiment, tmp_path: Path):
    reports = run_experiment(case1_experiment, output_dir=tmp_path)
    data = json.loads((tmp_path / "round_reports.json").read_text())
    assert data["all_correct"] is True
    assert len(data["rounds"]) == 2
    assert reports[0].transcript_path == "transcript.jsonl"

    lines = (tmp_path / "transcript.jsonl").read_text().splitlines()
    phases = {json.loads(line)["phase"] for line in lines}
    assert phases == {"downlink_select", "read", "write"}
    assert (tmp_path / "snapshot.json").exists()


def test_case2_many_users_many_rounds(case2_config, tmp_path: Path):
    config = ExperimentConfig(model=case2_config, users=3, rounds=5, seed=1)
    reports = ExperimentRunner(config, output_dir=tmp_path).run()
    assert len(reports) == 5
    for report in reports:
        assert report.correctness == {1: True, 2: True, 3: True}
        assert report.cost.users == 3
        assert len(report.downlink) == case2_config.download_count


def test_zipf_magnitudes(case1_config, tmp_path: Path):
    config = ExperimentConfig(model=case1_config, users=2, rounds=2, seed=4, magnitudes="zipf", zipf_s=2.0)
    assert all(all(r.correctness.values()) for r in run_experiment(config, output_dir=tmp_path))


def test_same_seed_same_outputs(case1_config, tmp_path: Path):
    config = ExperimentConfig(model=case1_config, users=2, rounds=2, seed=9)
    run_experiment(config, output_dir=tmp_path / "a")
    run_experiment(config, output_dir=tmp_path / "b")
    for name in ("round_reports.json", "transcript.jsonl", "snapshot.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_resume_from_snapshot(case1_experiment, tmp_path: Path):
    first = ExperimentRunner(case1_experiment, output_dir=tmp_path / "first")
    first.run()
    restored = load_snapshot(tmp_path / "first" / "snapshot.json")

    assert restored.rounds_completed == 2

    resumed = ExperimentRunner(case1_experiment, output_dir=tmp_path / "second", init=restored)
    assert resumed.reference == first.reference
    reports = resumed.run()
    assert [r.round for r in reports] == [3, 4]
    assert all(all(r.correctness.values()) for r in reports)
    assert load_snapshot(tmp_path / "second" / "snapshot.json").rounds_completed == 4


class RecordingRunner(ExperimentRunner):
    def draw_sparse_updates(self, round_index, user, rows):
        self.drawn = getattr(self, "drawn", []) + [round_index]
        return super().draw_sparse_updates(round_index, user, rows)


def test_resumed_rounds_draw_fresh_updates(case1_experiment, tmp_path: Path):
    first = RecordingRunner(case1_experiment, output_dir=tmp_path / "first")
    first.run()
    resumed = RecordingRunner(
        case1_experiment, output_dir=tmp_path / "second", init=load_snapshot(tmp_path / "first" / "snapshot.json")
    )
    resumed.run()
    assert first.drawn == [1, 2]
    assert resumed.drawn == [3, 4]
    assert {record.round for record in resumed.transcript} == {3, 4}


def test_reads_resolve_announced_addresses(case1_experiment, tmp_path: Path, monkeypatch):
    from src.user_client.client import UserClient

    calls = []
    original = UserClient.resolve_selection

    def recording(self, addresses):
        calls.append(list(addresses))
        return original(self, addresses)

    monkeypatch.setattr(UserClient, "resolve_selection", recording)
    reports = ExperimentRunner(case1_experiment, output_dir=tmp_path).run()
    assert [list(r.downlink) for r in reports] == calls


def test_snapshot_must_match_config(case1_experiment, case2_setup, tmp_path: Path):
    _, init = case2_setup
    with pytest.raises(ExperimentConfigError):
        ExperimentRunner(case1_experiment, output_dir=tmp_path, init=init)


def test_corrupted_storage_is_detected(case1_experiment, tmp_path: Path):
    runner = ExperimentRunner(case1_experiment, output_dir=tmp_path)
    storage = runner.nodes[2].state.storage
    storage[0] = storage[0] + runner.model.field.GF(1)
    with pytest.raises(CorrectnessError) as excinfo:
        runner.run_round(1)
    assert "round 1" in excinfo.value.message


def test_rounds_must_be_positive(case1_config):
    with pytest.raises(ExperimentConfigError, match="rounds must be at least 1"):
        ExperimentConfig(model=case1_config, rounds=0).validate()


def test_unknown_magnitude_distribution(case1_config):
    with pytest.raises(ExperimentConfigError):
        ExperimentConfig(model=case1_config, magnitudes="pareto").validate()


def test_build_experiment_config():
    config = build_experiment_config({
        "CASE": "case2", "P": "12", "B": "3", "N": "10", "R": "1/4", "R_PRIME": "0.25",
        "USERS": "2", "ROUNDS": "3", "SEED": "5", "Q": "97",
    })
    assert config.model == ModelConfig.from_counts(12, 3, 10, 3, 3, "case2", q=97)
    assert (config.users, config.rounds, config.seed) == (2, 3, 5)


def test_build_experiment_config_missing_keys():
    with pytest.raises(ExperimentConfigError, match="Missing experiment settings: N"):
        build_experiment_config({"CASE": "case1", "P": "15", "B": "3", "R": "4/15", "R_PRIME": "4/15"})


def test_build_experiment_config_invalid_model():
    with pytest.raises(ExperimentConfigError, match="B must divide P"):
        build_experiment_config({"CASE": "case1", "P": "12", "B": "5", "N": "8", "R": "1/4", "R_PRIME": "1/4"})


def test_load_experiment_config(tmp_path: Path):
    path = tmp_path / "experiment.env"
    path.write_text("CASE=case1\nP=15\nB=3\nN=8\nR=4/15\nR_PRIME=4/15\nROUNDS=2\n")
    config = load_experiment_config(path, overrides={"ROUNDS": "4", "SEED": None})
    assert config.rounds == 4
    assert config.model.ell == 3


def test_load_experiment_config_missing_file(tmp_path: Path):
    with pytest.raises(FileNotFoundError):
        load_experiment_config(tmp_path / "absent.env")
