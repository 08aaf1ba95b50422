"""
Communication and storage accounting.

Analytic costs follow the closed forms in terms of log_q P. Measured costs
come from the transcript, where every index is sent as ceil(log_q P) whole
field symbols; with that substitution the two agree exactly.
"""
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Sequence, Union

import mpmath

from src.model_domain.model import ModelConfig, Rate, SchemeCase, as_rate
from src.transcript.transcript import Transcript, TranscriptRecord
from src.utils.logger import get_logger

logger = get_logger(__name__)

Case = Union[SchemeCase, str, int]


class AnalyticsError(Exception):
    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


def index_symbols(P: int, q: int) -> int:
    """ceil(log_q P): field symbols needed to name one of P subpackets."""
    if P < 1 or q < 2:
        raise AnalyticsError(f"index_symbols needs P >= 1 and q >= 2 (P={P}, q={q})")
    count, reach = 0, 1
    while reach < P:
        reach *= q
        count += 1
    return count


def _log_q(P: int, q: int, ceil_index: bool) -> Union[Fraction, float]:
    if ceil_index:
        return Fraction(index_symbols(P, q))
    return float(mpmath.log(P, q))


def _denominator(case: Case, N: int) -> Fraction:
    overhead = SchemeCase.parse(case).database_overhead
    if N <= overhead:
        raise AnalyticsError(f"{SchemeCase.parse(case).value} needs N > {overhead} (N={N})")
    return 1 - Fraction(overhead, N)


def reading_cost(case: Case, N: int, r_prime: Rate, P: int, q: int, ceil_index: bool = False) -> float:
    """2 r' (1 + log_q(P) / N) / (1 - 2/N) in Case1, (1 - 4/N) in Case2."""
    rate = as_rate(r_prime)
    return float(2 * rate * (1 + _log_q(P, q, ceil_index) / N) / _denominator(case, N))


def writing_cost(case: Case, N: int, r: Rate, P: int, q: int, ceil_index: bool = False) -> float:
    """2 r (1 + log_q P) / (1 - 2/N) in Case1, (1 - 4/N) in Case2."""
    rate = as_rate(r)
    return float(2 * rate * (1 + _log_q(P, q, ceil_index)) / _denominator(case, N))


def total_cost(case: Case, N: int, r: Rate, r_prime: Rate, P: int, q: int, ceil_index: bool = False) -> float:
    return reading_cost(case, N, r_prime, P, q, ceil_index) + writing_cost(case, N, r, P, q, ceil_index)


@dataclass(frozen=True)
class CostReport:
    reading_cost: float
    writing_cost: float
    total_cost: float
    measured_reading_symbols: int
    measured_writing_symbols: int
    L: int
    users: int
    measured_reading_cost: float
    measured_writing_cost: float

    @property
    def measured_total_cost(self) -> float:
        return self.measured_reading_cost + self.measured_writing_cost

    def to_dict(self) -> Dict[str, Union[int, float]]:
        data = asdict(self)
        data["measured_total_cost"] = self.measured_total_cost
        return data


def _participants(records: Sequence[TranscriptRecord]) -> List[str]:
    users = {label for record in records for label in (record.sender, record.receiver) if label.startswith("user-")}
    return sorted(users)


def audit_costs(records: Union[Transcript, Iterable[TranscriptRecord]], cfg: ModelConfig) -> CostReport:
    """
    Counts the symbols each user downloaded and uploaded and normalizes them
    by L, averaged over the users appearing in the records.

    Downloads are every record addressed to a user (selected indices and
    answers); uploads are every write record sent by a user.
    """
    records = list(records)
    for record in records:
        if not isinstance(record, TranscriptRecord):
            raise AnalyticsError(f"Not a transcript record: {record!r}")

    users = _participants(records)
    downloaded = sum(r.symbol_count for r in records if r.receiver.startswith("user-"))
    uploaded = sum(r.symbol_count for r in records if r.sender.startswith("user-") and r.phase == "write")

    scale = len(users) * cfg.L
    measured_read = float(Fraction(downloaded, scale)) if scale else 0.0
    measured_write = float(Fraction(uploaded, scale)) if scale else 0.0

    if records:
        read = reading_cost(cfg.case, cfg.N, cfg.r_prime, cfg.P, cfg.field.q)
        write = writing_cost(cfg.case, cfg.N, cfg.r, cfg.P, cfg.field.q)
    else:
        read = write = 0.0

    report = CostReport(
        reading_cost=read,
        writing_cost=write,
        total_cost=read + write,
        measured_reading_symbols=downloaded,
        measured_writing_symbols=uploaded,
        L=cfg.L,
        users=len(users),
        measured_reading_cost=measured_read,
        measured_writing_cost=measured_write,
    )
    logger.debug(f"Cost audit over {len(records)} records: C_R={measured_read:.6f}, C_W={measured_write:.6f}")
    return report


@dataclass(frozen=True)
class StorageReport:
    """Symbols held by one database."""
    data_symbols: int
    within_matrix_symbols: int
    segment_matrix_symbols: int
    complexity_label: str

    @property
    def total_symbols(self) -> int:
        return self.data_symbols + self.within_matrix_symbols + self.segment_matrix_symbols

    def to_dict(self) -> Dict[str, Union[int, str]]:
        data = asdict(self)
        data["total_symbols"] = self.total_symbols
        return data


def storage_counts(P: int, B: int, ell: int, case: Case) -> StorageReport:
    case = SchemeCase.parse(case)
    if B < 1 or P % B != 0:
        raise AnalyticsError(f"B must divide P (P={P}, B={B})")
    L = P * ell
    segment_length = L // B
    if case is SchemeCase.CASE1:
        return StorageReport(L, B * segment_length ** 2, 0, "O(L^2/B)")
    return StorageReport(L, B * segment_length ** 2, (B * ell) ** 2, "max{O(L^2/B), O(L^2B^2/N^2)}")


def storage_report(cfg: ModelConfig) -> StorageReport:
    return storage_counts(cfg.P, cfg.B, cfg.ell, cfg.case)