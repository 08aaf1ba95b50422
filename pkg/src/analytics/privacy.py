"""
Exhaustive privacy checks for small parameters: what a single database sees
of the write addresses across all permutation bundles, and whether the
one-time pads hit every field element.
"""
from collections import Counter
from fractions import Fraction
from typing import Dict, Iterable, Sequence, Tuple

import galois

from src.coordinator.coordinator import StorageNoise, encode_storage
from src.mapper.mapper import AddressMapper
from src.model_domain.model import GlobalModel, ModelConfig, SubpacketAddress
from src.permutation_engine.permutations import all_bundles
from src.user_client.client import combine_update
from src.utils.logger import get_logger

logger = get_logger(__name__)

View = Tuple[SubpacketAddress, ...]


def address_view_distribution(real_addresses: Sequence[SubpacketAddress], cfg: ModelConfig) -> Dict[View, Fraction]:
    """
    Probability of every sorted tuple of permuted addresses a database can
    observe for the given real sparse set, over uniformly drawn bundles.
    """
    views: Counter = Counter()
    for bundle in all_bundles(cfg):
        mapper = AddressMapper(bundle, cfg.case)
        views[tuple(sorted(mapper.map_all(real_addresses, to_real=False), key=lambda a: (a.segment, a.subpacket)))] += 1

    total = sum(views.values())
    logger.debug(f"Enumerated {total} bundles, {len(views)} distinct views")
    return {view: Fraction(count, total) for view, count in sorted(views.items())}


def pad_is_uniform(values: Iterable[galois.FieldArray], q: int) -> bool:
    """True when the values, one per pad value, cover F_q exactly once."""
    return sorted(int(v) for v in values) == list(range(q))


def update_pad_values(delta: galois.FieldArray, n: int, cfg: ModelConfig) -> list:
    """U_n for every possible pad z."""
    GF = cfg.field.GF
    return [combine_update(delta, GF(z), n, cfg) for z in range(cfg.field.q)]


def storage_pad_values(W: GlobalModel, address: SubpacketAddress, symbol: int, n: int, cfg: ModelConfig) -> list:
    """The stored symbol at database n for every value of its constant noise coefficient."""
    GF = cfg.field.GF
    position = cfg.row_index(address) * cfg.ell + symbol
    values = []
    for c in range(cfg.field.q):
        noise = StorageNoise.zeros(cfg)
        noise.I[cfg.row_index(address), symbol, 0] = GF(c)
        values.append(encode_storage(W, noise, n, cfg)[position])
    return values
