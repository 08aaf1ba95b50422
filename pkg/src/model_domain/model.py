"""
Configuration and model-state types shared by the coordinator, the databases
and the users.

Addresses are 1-based ``(subpacket, segment)`` pairs. Subpacket ``s`` of
segment ``j`` sits at global row ``(j - 1) * P/B + (s - 1)`` of the model, and
its symbols occupy positions ``row * ell .. row * ell + ell - 1`` of every
length-L storage vector.
"""
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple, Union

import galois
import numpy as np

from src.field_core.field import FieldConfig, as_ints
from src.utils.logger import get_logger

logger = get_logger(__name__)

Rate = Union[Fraction, float, int, str]


class ModelError(Exception):
    """
    Base exception for invalid model configurations and update sets.
    """

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class SelectionError(ModelError, ValueError):
    pass


class SparseUpdateError(ModelError, ValueError):
    pass


class SchemeCase(str, Enum):
    CASE1 = "case1"
    CASE2 = "case2"

    @classmethod
    def parse(cls, value: Union["SchemeCase", str, int]) -> "SchemeCase":
        if isinstance(value, SchemeCase):
            return value
        text = str(value).strip().lower()
        if text in ("1", "case1", "case_1"):
            return cls.CASE1
        if text in ("2", "case2", "case_2"):
            return cls.CASE2
        raise ModelError(f"Unknown scheme case: {value!r}")

    @property
    def number(self) -> int:
        return 1 if self is SchemeCase.CASE1 else 2

    @property
    def database_overhead(self) -> int:
        """N - 2*ell: two extra databases in Case1, four in Case2."""
        return 2 if self is SchemeCase.CASE1 else 4

    def subpacketization(self, N: int) -> int:
        return (N - self.database_overhead) // 2

    def storage_noise_degree(self, ell: int) -> int:
        """Degree x of the storage noise polynomial."""
        return ell if self is SchemeCase.CASE1 else ell + 1


class SubpacketAddress(NamedTuple):
    subpacket: int
    segment: int


def as_rate(value: Rate) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(value).limit_denominator(10**6)


@dataclass(frozen=True)
class ModelConfig:
    P: int
    B: int
    N: int
    ell: int
    r: Fraction
    r_prime: Fraction
    case: SchemeCase
    field: FieldConfig

    def __post_init__(self) -> None:
        object.__setattr__(self, "r", as_rate(self.r))
        object.__setattr__(self, "r_prime", as_rate(self.r_prime))
        object.__setattr__(self, "case", SchemeCase.parse(self.case))

    @classmethod
    def from_counts(
        cls,
        P: int,
        B: int,
        N: int,
        upload_count: int,
        download_count: int,
        case: Union[SchemeCase, str, int],
        q: Optional[int] = None,
        ell: Optional[int] = None,
        field: Optional[FieldConfig] = None,
    ) -> "ModelConfig":
        """Builds a config from whole subpacket counts P*r and P*r'."""
        case = SchemeCase.parse(case)
        ell = case.subpacketization(N) if ell is None else ell
        if field is None:
            field = FieldConfig.default(ell, N) if q is None else FieldConfig.default(ell, N, q)
        return cls(
            P=P, B=B, N=N, ell=ell,
            r=Fraction(upload_count, P), r_prime=Fraction(download_count, P),
            case=case, field=field,
        )

    @property
    def L(self) -> int:
        return self.P * self.ell

    @property
    def segment_size(self) -> int:
        """Subpackets per segment, P/B."""
        return self.P // self.B

    @property
    def segment_length(self) -> int:
        """Symbols per segment, P*ell/B."""
        return self.segment_size * self.ell

    @property
    def upload_count(self) -> int:
        return int(self.P * self.r)

    @property
    def download_count(self) -> int:
        return int(self.P * self.r_prime)

    @property
    def noise_degree(self) -> int:
        return self.case.storage_noise_degree(self.ell)

    def addresses(self) -> Iterator[SubpacketAddress]:
        """Every address in model order."""
        for segment in range(1, self.B + 1):
            for subpacket in range(1, self.segment_size + 1):
                yield SubpacketAddress(subpacket, segment)

    def row_index(self, address: SubpacketAddress) -> int:
        return (address.segment - 1) * self.segment_size + (address.subpacket - 1)

    def address_of(self, row: int) -> SubpacketAddress:
        return SubpacketAddress(row % self.segment_size + 1, row // self.segment_size + 1)

    def in_range(self, address: SubpacketAddress) -> bool:
        return 1 <= address.segment <= self.B and 1 <= address.subpacket <= self.segment_size

    def to_dict(self) -> Dict[str, Any]:
        return {
            "P": self.P,
            "B": self.B,
            "N": self.N,
            "ell": self.ell,
            "r": str(self.r),
            "r_prime": str(self.r_prime),
            "case": self.case.value,
            "q": self.field.q,
            "f": list(self.field.f),
            "alpha": list(self.field.alpha),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ModelConfig":
        return cls(
            P=int(data["P"]), B=int(data["B"]), N=int(data["N"]), ell=int(data["ell"]),
            r=as_rate(data["r"]), r_prime=as_rate(data["r_prime"]),
            case=SchemeCase.parse(data["case"]),
            field=FieldConfig(q=int(data["q"]), f=tuple(data["f"]), alpha=tuple(data["alpha"])),
        )


@dataclass(frozen=True)
class GlobalModel:
    """The plaintext model W: P rows (subpackets) of ell symbols."""
    W: galois.FieldArray

    @classmethod
    def zeros(cls, cfg: ModelConfig) -> "GlobalModel":
        return cls(cfg.field.GF.Zeros((cfg.P, cfg.ell)))

    @classmethod
    def random(cls, cfg: ModelConfig, seed: Union[int, np.random.Generator, None] = None) -> "GlobalModel":
        rng = np.random.default_rng(seed)
        return cls(cfg.field.GF.Random((cfg.P, cfg.ell), seed=rng))

    def check_shape(self, cfg: ModelConfig) -> None:
        if tuple(self.W.shape) != (cfg.P, cfg.ell):
            raise ModelError(f"Model has shape {tuple(self.W.shape)}, expected {(cfg.P, cfg.ell)}")

    def subpacket(self, address: SubpacketAddress, cfg: ModelConfig) -> galois.FieldArray:
        return self.W[cfg.row_index(address)]

    def apply(self, sparse: "SparseUpdateSet", cfg: ModelConfig) -> "GlobalModel":
        """The plaintext write: W + Delta on the sparse rows, W elsewhere."""
        updated = self.W.copy()
        for entry in sparse.entries:
            row = cfg.row_index(entry.address)
            updated[row] = updated[row] + entry.delta
        return GlobalModel(updated)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GlobalModel):
            return NotImplemented
        return self.W.shape == other.W.shape and bool(np.array_equal(self.W, other.W))

    def to_list(self) -> List[List[int]]:
        return as_ints(self.W)


@dataclass(frozen=True)
class SparseUpdate:
    segment: int
    subpacket: int
    delta: galois.FieldArray

    @property
    def address(self) -> SubpacketAddress:
        return SubpacketAddress(self.subpacket, self.segment)


@dataclass(frozen=True)
class SparseUpdateSet:
    entries: Tuple[SparseUpdate, ...] = field(default_factory=tuple)

    @classmethod
    def from_deltas(cls, deltas: Dict[Tuple[int, int], Sequence[int]], cfg: ModelConfig) -> "SparseUpdateSet":
        """Builds a set from {(subpacket, segment): [delta_1..delta_ell]}."""
        GF = cfg.field.GF
        return cls(tuple(
            SparseUpdate(segment=segment, subpacket=subpacket, delta=GF([int(v) % cfg.field.q for v in delta]))
            for (subpacket, segment), delta in deltas.items()
        ))

    def __len__(self) -> int:
        return len(self.entries)

    def addresses(self) -> List[SubpacketAddress]:
        return [entry.address for entry in self.entries]

    def validate(self, cfg: ModelConfig) -> None:
        if len(self.entries) != cfg.upload_count:
            raise SparseUpdateError(
                f"Sparse update set must hold exactly P*r={cfg.upload_count} entries, got {len(self.entries)}"
            )
        seen = set()
        for entry in self.entries:
            if not cfg.in_range(entry.address):
                raise SparseUpdateError(f"Address {tuple(entry.address)} outside the model")
            if entry.address in seen:
                raise SparseUpdateError(f"Duplicate address {tuple(entry.address)} in sparse update set")
            if tuple(entry.delta.shape) != (cfg.ell,):
                raise SparseUpdateError(f"Update for {tuple(entry.address)} must hold {cfg.ell} symbols")
            seen.add(entry.address)


def top_r_select(magnitudes: Sequence[float], Pr: int) -> List[int]:
    """
    1-based indices of the Pr largest magnitudes, in ascending index order.
    Ties are broken towards the lower index.
    """
    values = np.asarray(magnitudes, dtype=float)
    if Pr < 0 or Pr > values.size:
        raise SelectionError(f"Cannot select {Pr} of {values.size} subpackets")
    if np.any(values < 0):
        raise SelectionError("Magnitudes must be non-negative")

    # lexsort sorts by the last key first: descending magnitude, then ascending index.
    order = np.lexsort((np.arange(values.size), -values))
    return sorted(int(i) + 1 for i in order[:Pr])
