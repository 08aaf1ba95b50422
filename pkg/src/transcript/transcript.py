from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Union

from src.utils.file_storage import load_data, store_data
from src.utils.logger import get_logger

logger = get_logger(__name__)

PHASES = ("downlink_select", "read", "write")


class TranscriptError(Exception):
    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


@dataclass(frozen=True)
class TranscriptRecord:
    """
    One message of the protocol. ``sender`` and ``receiver`` are labels like
    ``user-1`` or ``db-3``; they are written as ``from`` and ``to``.
    """
    round: int
    phase: str
    sender: str
    receiver: str
    payload_kind: str
    symbol_count: int

    def __post_init__(self) -> None:
        if self.phase not in PHASES:
            raise TranscriptError(f"Unknown phase {self.phase!r}")
        if self.symbol_count < 0:
            raise TranscriptError(f"Negative symbol count in {self.phase} record")

    def to_dict(self) -> Dict[str, object]:
        data = asdict(self)
        return {
            "round": data["round"],
            "phase": data["phase"],
            "from": data["sender"],
            "to": data["receiver"],
            "payload_kind": data["payload_kind"],
            "symbol_count": data["symbol_count"],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> "TranscriptRecord":
        try:
            return cls(
                round=int(data["round"]),
                phase=str(data["phase"]),
                sender=str(data["from"]),
                receiver=str(data["to"]),
                payload_kind=str(data["payload_kind"]),
                symbol_count=int(data["symbol_count"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise TranscriptError(f"Malformed transcript record {data!r}: {e}") from e


class Transcript:
    """Append-only log of every protocol message, the input of the cost audit."""

    def __init__(self, records: Iterable[TranscriptRecord] = ()) -> None:
        self.records: List[TranscriptRecord] = list(records)

    def append(
        self, round: int, phase: str, sender: str, receiver: str, payload_kind: str, symbol_count: int
    ) -> TranscriptRecord:
        record = TranscriptRecord(round, phase, sender, receiver, payload_kind, symbol_count)
        self.records.append(record)
        return record

    def for_round(self, round: int) -> List[TranscriptRecord]:
        return [record for record in self.records if record.round == round]

    def rounds(self) -> List[int]:
        return sorted({record.round for record in self.records})

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def save(self, file_path: Union[str, Path]) -> Path:
        path = store_data([record.to_dict() for record in self.records], file_path, format="jsonl")
        logger.info(f"Transcript with {len(self.records)} records written to {path}")
        return path

    @classmethod
    def load(cls, file_path: Union[str, Path]) -> "Transcript":
        return cls(TranscriptRecord.from_dict(row) for row in load_data(file_path, format="jsonl"))
