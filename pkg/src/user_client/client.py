"""
The user side of the protocol: address translation through the secret
permutations, decoding of downloaded subpackets and the masked combined
updates of the writing phase.
"""
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence, Tuple, Union

import galois
import numpy as np

from src.field_core.field import DimensionMismatchError, FieldElement, solve_linear
from src.mapper.mapper import AddressMapper
from src.model_domain.model import ModelConfig, SparseUpdateSet, SubpacketAddress
from src.permutation_engine.permutations import PermutationBundle
from src.user_client.messages import DecodedSubpacket, UpdateTuple
from src.utils.logger import get_logger

if TYPE_CHECKING:
    from src.database_node.node import DatabaseNode

logger = get_logger(__name__)

Seed = Union[int, Sequence[int], np.random.Generator, None]


def combine_update(delta: galois.FieldArray, z: FieldElement, n: int, cfg: ModelConfig) -> FieldElement:
    """
    Folds the ell symbol updates of one subpacket and the pad z into the
    single symbol database n receives:

        U_n = sum_k prod_{m != k}(f_m - alpha_n) * delta_k / prod_{m != k}(f_m - f_k)
              + prod_m (f_m - alpha_n) * z
    """
    GF = cfg.field.GF
    f = cfg.field.f_elements()
    shifted = cfg.field.gamma_inverse(n)
    ell = cfg.ell
    if tuple(delta.shape) != (ell,):
        raise DimensionMismatchError(f"Update must hold {ell} symbols, got {tuple(delta.shape)}")

    total = GF(0)
    for k in range(ell):
        others = np.arange(ell) != k
        at_alpha = np.prod(shifted[others]) if ell > 1 else GF(1)
        at_f = np.prod(f[others] - f[k]) if ell > 1 else GF(1)
        total = total + at_alpha * delta[k] / at_f
    return total + np.prod(shifted) * z


def decode_subpacket(answers: galois.FieldArray, cfg: ModelConfig) -> galois.FieldArray:
    """
    Recovers the ell symbols of a subpacket from the N answers by solving
    the N x N system with rows

        [1/(f_1 - alpha_n), ..., 1/(f_ell - alpha_n), 1, alpha_n, ..., alpha_n^(N-ell-1)]

    Raises:
        SingularMatrixError: when the system has no unique solution.
    """
    N, ell = cfg.N, cfg.ell
    if tuple(answers.shape) != (N,):
        raise DimensionMismatchError(f"Expected {N} answers, got {tuple(answers.shape)}")

    GF = cfg.field.GF
    system = GF.Zeros((N, N))
    exponents = np.arange(N - ell)
    for n in range(1, N + 1):
        system[n - 1, :ell] = cfg.field.gamma(n)
        system[n - 1, ell:] = cfg.field.alpha_element(n) ** exponents
    return solve_linear(system, answers)[:ell]


def prepare_write(
    bundle: PermutationBundle, sparse: SparseUpdateSet, cfg: ModelConfig, seed: Seed = None
) -> Dict[int, List[UpdateTuple]]:
    """
    Builds the N tuple streams of one write. One uniform pad is drawn per
    sparse subpacket and shared by all databases. Streams are sorted by
    permuted address so their order says nothing about real positions.
    """
    sparse.validate(cfg)
    rng = np.random.default_rng(seed)
    mapper = AddressMapper(bundle, cfg.case)
    GF = cfg.field.GF

    pads = GF.Random(len(sparse), seed=rng)
    permuted = [mapper.to_permuted(entry.address) for entry in sparse.entries]

    streams: Dict[int, List[UpdateTuple]] = {}
    for n in range(1, cfg.N + 1):
        tuples = [
            UpdateTuple(u=combine_update(entry.delta, pads[i], n, cfg), eta_p=address.subpacket, phi=address.segment)
            for i, (entry, address) in enumerate(zip(sparse.entries, permuted))
        ]
        streams[n] = sorted(tuples, key=lambda t: (t.phi, t.eta_p))
    logger.debug(f"Prepared {len(sparse)} combined updates for {cfg.N} databases")
    return streams


class UserClient:
    """
    A single user holding the secret bundle.

    Attributes:
        user_id (int): Index of the user in the experiment.
        bundle (PermutationBundle): Permutations received from the coordinator.
        cfg (ModelConfig): The shared configuration.
    """

    def __init__(self, user_id: int, bundle: PermutationBundle, cfg: ModelConfig) -> None:
        self.user_id = user_id
        self.bundle = bundle.check_against(cfg)
        self.cfg = cfg
        self.mapper = AddressMapper(bundle, cfg.case)

    def resolve_selection(self, addresses: Sequence[SubpacketAddress]) -> List[Tuple[SubpacketAddress, SubpacketAddress]]:
        """(permuted, real) pairs for the downlink addresses announced by the databases."""
        return [(address, self.mapper.to_real(address)) for address in addresses]

    def decode(self, permuted: SubpacketAddress, answers: Sequence[FieldElement]) -> DecodedSubpacket:
        symbols = decode_subpacket(self.cfg.field.GF([int(a) for a in answers]), self.cfg)
        return DecodedSubpacket(address=self.mapper.to_real(permuted), symbols=symbols)

    def download(self, addresses: Sequence[SubpacketAddress], nodes: Sequence["DatabaseNode"]) -> List[DecodedSubpacket]:
        """Queries every database for every address and decodes the answers."""
        if len(nodes) != self.cfg.N:
            raise DimensionMismatchError(f"Download needs all {self.cfg.N} databases, got {len(nodes)}")
        return [self.decode(address, [node.serve(address) for node in nodes]) for address in addresses]

    def prepare_write(self, sparse: SparseUpdateSet, seed: Optional[Seed] = None) -> Dict[int, List[UpdateTuple]]:
        return prepare_write(self.bundle, sparse, self.cfg, seed)
