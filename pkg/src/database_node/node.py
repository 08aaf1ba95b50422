"""
One of the N non-colluding databases. A node only ever sees permuted
addresses: it picks the downlink subpackets from the permuted addresses
written in the previous round, builds its own read queries from the noisy
reversing matrices, answers them, and folds incoming combined updates into
its storage through the same matrices.
"""
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import galois
import numpy as np

from src.coordinator.coordinator import DatabasePackage
from src.field_core.field import FieldElement, dot, mat_mul
from src.mapper.mapper import AddressError
from src.model_domain.model import ModelConfig, SchemeCase, SubpacketAddress
from src.permutation_engine.permutations import combine_matrices
from src.user_client.messages import UpdateTuple
from src.utils.logger import get_logger

logger = get_logger(__name__)


class DatabaseNodeError(Exception):
    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class DuplicateAddressError(DatabaseNodeError):
    pass


@dataclass(frozen=True)
class ReadSelection:
    """The P*r' permuted addresses chosen for download, in model order."""
    addresses: Tuple[SubpacketAddress, ...]


@dataclass(frozen=True)
class ReadQuery:
    address: SubpacketAddress
    vector: galois.FieldArray


@dataclass
class DatabaseState:
    n: int
    alpha_n: FieldElement
    storage: galois.FieldArray
    within: Tuple[galois.FieldArray, ...]
    segment: Optional[galois.FieldArray] = None
    combined: Optional[galois.FieldArray] = None
    update_histogram: Counter = field(default_factory=Counter)
    previous_histogram: Counter = field(default_factory=Counter)


class DatabaseNode:
    """
    State machine for database n. Messages are processed strictly one at a
    time; distinct nodes share nothing.
    """

    def __init__(self, package: DatabasePackage, cfg: ModelConfig) -> None:
        self.cfg = cfg
        if tuple(package.storage.shape) != (cfg.L,):
            raise DatabaseNodeError(f"Storage of length {package.storage.shape[0]} for a model of L={cfg.L}")

        combined = None
        if cfg.case is SchemeCase.CASE2:
            if package.segment is None:
                raise DatabaseNodeError("Case2 database package is missing its segment-wise matrix")
            combined = combine_matrices(package.within, package.segment, cfg)

        self.state = DatabaseState(
            n=package.n,
            alpha_n=cfg.field.alpha_element(package.n),
            storage=package.storage.copy(),
            within=package.within,
            segment=package.segment,
            combined=combined,
        )
        # D_n over one segment (Case1) or the whole model (Case2).
        gamma_inverse = cfg.field.gamma_inverse(package.n)
        self._scale_segment = gamma_inverse[np.arange(cfg.segment_length) % cfg.ell]
        self._scale_model = gamma_inverse[np.arange(cfg.L) % cfg.ell]
        logger.debug(f"Database {package.n} ready ({cfg.case.value})")

    @property
    def n(self) -> int:
        return self.state.n

    def _check_address(self, address: SubpacketAddress) -> SubpacketAddress:
        address = SubpacketAddress(int(address[0]), int(address[1]))
        if not self.cfg.in_range(address):
            raise AddressError(f"Permuted address {tuple(address)} out of range")
        return address

    def _position(self, address: SubpacketAddress) -> int:
        """First symbol of a permuted address inside the vector R is applied to."""
        if self.cfg.case is SchemeCase.CASE1:
            return (address.subpacket - 1) * self.cfg.ell
        return (address.segment - 1) * self.cfg.segment_length + (address.subpacket - 1) * self.cfg.ell

    def select_downlink(self, round_index: int, seed: int) -> ReadSelection:
        """
        The P*r' most written permuted addresses of the previous round, ties
        broken by the lexicographic permuted address (subpacket, segment).
        The chosen addresses come back in model order. Without history the
        choice is a uniform draw from a generator seeded with (seed, round)
        so every node agrees.
        """
        count = self.cfg.download_count
        history = self.state.previous_histogram
        if not history:
            rng = np.random.default_rng([seed, round_index])
            rows = sorted(int(row) for row in rng.choice(self.cfg.P, size=count, replace=False))
            addresses = [self.cfg.address_of(row) for row in rows]
            logger.debug(f"Database {self.n}: round {round_index} downlink drawn at random")
        else:
            ranked = sorted(
                self.cfg.addresses(),
                key=lambda a: (-history.get(a, 0), a.subpacket, a.segment),
            )
            addresses = sorted(ranked[:count], key=lambda a: (a.segment, a.subpacket))
        return ReadSelection(tuple(addresses))

    def build_read_query(self, address: SubpacketAddress) -> ReadQuery:
        """
        Case1: the sum of the ell columns of R_n^[j] belonging to the permuted
        subpacket. Case2: D_n times the same column sum of the combined R_n.
        """
        address = self._check_address(address)
        GF = self.cfg.field.GF
        start = self._position(address)

        if self.cfg.case is SchemeCase.CASE1:
            indicator = GF.Zeros(self.cfg.segment_length)
            indicator[start:start + self.cfg.ell] = GF.Ones(self.cfg.ell)
            vector = mat_mul(self.state.within[address.segment - 1], indicator)
        else:
            indicator = GF.Zeros(self.cfg.L)
            indicator[start:start + self.cfg.ell] = GF.Ones(self.cfg.ell)
            vector = self._scale_model * mat_mul(self.state.combined, indicator)
        return ReadQuery(address=address, vector=vector)

    def answer_read(self, query: ReadQuery) -> FieldElement:
        """
        Case1: (D_n S_n^[j])^T Q over the segment of the query. Case2: the
        query already carries D_n, so the answer is S_n^T Q over the model.
        """
        if self.cfg.case is SchemeCase.CASE1:
            seg_len = self.cfg.segment_length
            if query.vector.shape[0] != seg_len:
                raise DatabaseNodeError(f"Case1 query must have length {seg_len}")
            start = (query.address.segment - 1) * seg_len
            segment = self.state.storage[start:start + seg_len]
            return dot(self._scale_segment * segment, query.vector)

        if query.vector.shape[0] != self.cfg.L:
            raise DatabaseNodeError(f"Case2 query must have length {self.cfg.L}")
        return dot(self.state.storage, query.vector)

    def serve(self, address: SubpacketAddress) -> FieldElement:
        return self.answer_read(self.build_read_query(address))

    def apply_write(self, tuples: Sequence[UpdateTuple]) -> None:
        """
        Lays the received symbols out in permuted order (each repeated ell
        times), multiplies by the reversing matrix and adds the result to the
        storage.
        """
        seen = set()
        for update in tuples:
            address = self._check_address(update.address)
            if address in seen:
                logger.error(f"Database {self.n}: duplicate permuted address {tuple(address)} in one write")
                raise DuplicateAddressError(f"Duplicate permuted address {tuple(address)}")
            seen.add(address)

        GF = self.cfg.field.GF
        ell = self.cfg.ell
        storage = self.state.storage

        if self.cfg.case is SchemeCase.CASE1:
            seg_len = self.cfg.segment_length
            by_segment: Dict[int, List[UpdateTuple]] = {}
            for update in tuples:
                by_segment.setdefault(update.phi, []).append(update)
            for segment, updates in sorted(by_segment.items()):
                permuted = GF.Zeros(seg_len)
                for update in updates:
                    start = self._position(update.address)
                    permuted[start:start + ell] = update.u * GF.Ones(ell)
                increment = mat_mul(self.state.within[segment - 1], permuted)
                offset = (segment - 1) * seg_len
                storage[offset:offset + seg_len] = storage[offset:offset + seg_len] + increment
        elif tuples:
            permuted = GF.Zeros(self.cfg.L)
            for update in tuples:
                start = self._position(update.address)
                permuted[start:start + ell] = update.u * GF.Ones(ell)
            storage = storage + mat_mul(self.state.combined, permuted)

        self.state.storage = storage
        self.state.update_histogram.update(update.address for update in tuples)
        logger.debug(f"Database {self.n}: applied {len(tuples)} combined updates")

    def close_round(self) -> None:
        """The histogram of this round becomes the history for the next one."""
        self.state.previous_histogram = self.state.update_histogram
        self.state.update_histogram = Counter()

    def to_package(self) -> DatabasePackage:
        return DatabasePackage(
            n=self.state.n,
            within=self.state.within,
            segment=self.state.segment,
            storage=self.state.storage.copy(),
        )
