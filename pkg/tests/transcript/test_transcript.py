import json

import pytest

from src.transcript.transcript import Transcript, TranscriptError, TranscriptRecord


@pytest.fixture
def transcript() -> Transcript:
    log = Transcript()
    log.append(1, "downlink_select", "db-1", "user-1", "indices", 4)
    log.append(1, "read", "db-2", "user-1", "answers", 4)
    log.append(2, "write", "user-1", "db-2", "update_tuples", 8)
    return log


def test_record_dict_uses_from_and_to():
    record = TranscriptRecord(1, "read", "db-3", "user-2", "answers", 5)
    assert record.to_dict() == {
        "round": 1, "phase": "read", "from": "db-3", "to": "user-2", "payload_kind": "answers", "symbol_count": 5,
    }
    assert TranscriptRecord.from_dict(record.to_dict()) == record


def test_record_rejects_unknown_phase():
    with pytest.raises(TranscriptError, match="Unknown phase"):
        TranscriptRecord(1, "gossip", "db-1", "db-2", "x", 1)


def test_record_rejects_negative_count():
    with pytest.raises(TranscriptError):
        TranscriptRecord(1, "read", "db-1", "user-1", "answers", -1)


def test_malformed_record():
    with pytest.raises(TranscriptError, match="Malformed"):
        TranscriptRecord.from_dict({"round": 1, "phase": "read"})


def test_rounds_and_filtering(transcript):
    assert len(transcript) == 3
    assert transcript.rounds() == [1, 2]
    assert [r.payload_kind for r in transcript.for_round(1)] == ["indices", "answers"]


def test_save_writes_json_lines(tmp_path, transcript):
    path = transcript.save(tmp_path / "transcript.jsonl")
    lines = path.read_text().splitlines()
    assert len(lines) == 3
    assert json.loads(lines[2])["from"] == "user-1"


def test_save_and_load(tmp_path, transcript):
    path = transcript.save(tmp_path / "transcript.jsonl")
    loaded = Transcript.load(path)
    assert list(loaded) == list(transcript)


def test_load_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        Transcript.load(tmp_path / "nothing.jsonl")
