from dataclasses import dataclass

import galois

from src.field_core.field import FieldElement, as_ints
from src.model_domain.model import SubpacketAddress


@dataclass(frozen=True)
class UpdateTuple:
    """
    What a user sends to one database for one sparse subpacket: the combined
    update and the permuted address. ``phi`` is the real segment in Case1
    and the permuted segment in Case2.
    """
    u: FieldElement
    eta_p: int
    phi: int

    @property
    def address(self) -> SubpacketAddress:
        return SubpacketAddress(self.eta_p, self.phi)


@dataclass(frozen=True)
class DecodedSubpacket:
    address: SubpacketAddress
    symbols: galois.FieldArray

    def to_dict(self) -> dict:
        return {
            "subpacket": self.address.subpacket,
            "segment": self.address.segment,
            "symbols": as_ints(self.symbols),
        }
