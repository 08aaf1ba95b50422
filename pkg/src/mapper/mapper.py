from typing import Iterable, List, Union

from src.model_domain.model import ModelConfig, SchemeCase, SubpacketAddress
from src.permutation_engine.permutations import PermutationBundle, invert
from src.utils.logger import get_logger

logger = get_logger(__name__)


class AddressError(IndexError):
    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class AddressMapper:
    """
    Translates between permuted and real (subpacket, segment) addresses using
    the user's secret permutation bundle.

    In Case1 segments are not permuted, so the segment index passes through
    unchanged and only the subpacket index is mapped with the permutation of
    that segment. In Case2 the segment index is mapped with the segment-wise
    permutation first.

    Attributes:
        bundle (PermutationBundle): The secret permutations.
        case (SchemeCase): Which scheme the addresses belong to.
    """

    def __init__(self, bundle: PermutationBundle, case: Union[SchemeCase, str, int]) -> None:
        self.bundle = bundle
        self.case = SchemeCase.parse(case)
        if self.case is SchemeCase.CASE2 and bundle.segmentwise is None:
            raise AddressError("Case2 address mapping needs a segment-wise permutation")

        self.segments = len(bundle.within)
        self.segment_size = len(bundle.within[0])
        self._within_inverse = tuple(invert(p) for p in bundle.within)
        self._segment_inverse = invert(bundle.segmentwise) if self.case is SchemeCase.CASE2 else None

    def _check(self, address: SubpacketAddress) -> SubpacketAddress:
        address = SubpacketAddress(int(address[0]), int(address[1]))
        if not (1 <= address.segment <= self.segments and 1 <= address.subpacket <= self.segment_size):
            logger.error(f"Address {tuple(address)} is outside {self.segment_size} x {self.segments}")
            raise AddressError(f"Address {tuple(address)} out of range")
        return address

    def to_real(self, permuted: SubpacketAddress) -> SubpacketAddress:
        eta_p, phi_p = self._check(permuted)
        phi_r = self.bundle.segmentwise[phi_p - 1] if self.case is SchemeCase.CASE2 else phi_p
        eta_r = self.bundle.within[phi_r - 1][eta_p - 1]
        return SubpacketAddress(eta_r, phi_r)

    def to_permuted(self, real: SubpacketAddress) -> SubpacketAddress:
        eta_r, phi_r = self._check(real)
        phi_p = self._segment_inverse[phi_r - 1] if self.case is SchemeCase.CASE2 else phi_r
        eta_p = self._within_inverse[phi_r - 1][eta_r - 1]
        return SubpacketAddress(eta_p, phi_p)

    def map_all(self, addresses: Iterable[SubpacketAddress], to_real: bool = True) -> List[SubpacketAddress]:
        convert = self.to_real if to_real else self.to_permuted
        return [convert(address) for address in addresses]


def map_permuted_to_real(
    bundle: PermutationBundle, eta_p: int, phi_p: int, case: Union[SchemeCase, str, int]
) -> SubpacketAddress:
    return AddressMapper(bundle, case).to_real(SubpacketAddress(eta_p, phi_p))


def map_real_to_permuted(
    bundle: PermutationBundle, eta_r: int, phi_r: int, case: Union[SchemeCase, str, int]
) -> SubpacketAddress:
    return AddressMapper(bundle, case).to_permuted(SubpacketAddress(eta_r, phi_r))
