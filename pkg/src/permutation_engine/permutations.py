"""
Permutations and the noise-added permutation reversing matrices.

A permutation is a tuple ``perm`` of 1-based positions with
``perm[j - 1] = real position of permuted position j``. The reversing matrix
therefore carries its scaled identity block at block row ``perm[j - 1]``,
block column ``j``: multiplying it with a vector laid out in permuted order
puts every block back in real order.
"""
import itertools
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Tuple, Union

import galois
import numpy as np

from src.field_core.field import DimensionMismatchError, mat_mul
from src.model_domain.model import ModelConfig, SchemeCase
from src.utils.logger import get_logger

logger = get_logger(__name__)

Permutation = Tuple[int, ...]
Seed = Union[int, Sequence[int], np.random.Generator, None]


class PermutationError(Exception):
    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


def check_permutation(perm: Sequence[int], size: int) -> Permutation:
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(1, size + 1)):
        raise PermutationError(f"{perm} is not a permutation of 1..{size}")
    return perm


def invert(perm: Permutation) -> Permutation:
    inverse = [0] * len(perm)
    for permuted, real in enumerate(perm, start=1):
        inverse[real - 1] = permuted
    return tuple(inverse)


@dataclass(frozen=True)
class PermutationBundle:
    """
    The user-side secret: one within-segment permutation per segment and,
    in Case2, the segment-wise permutation.
    """
    within: Tuple[Permutation, ...]
    segmentwise: Optional[Permutation] = None

    def __post_init__(self) -> None:
        if not self.within:
            raise PermutationError("A bundle needs at least one within-segment permutation")
        size = len(self.within[0])
        object.__setattr__(self, "within", tuple(check_permutation(p, size) for p in self.within))
        if self.segmentwise is not None:
            object.__setattr__(self, "segmentwise", check_permutation(self.segmentwise, len(self.within)))

    def check_against(self, cfg: ModelConfig) -> "PermutationBundle":
        if len(self.within) != cfg.B or len(self.within[0]) != cfg.segment_size:
            raise PermutationError(
                f"Bundle shape {len(self.within)}x{len(self.within[0])} does not match B={cfg.B}, P/B={cfg.segment_size}"
            )
        if cfg.case is SchemeCase.CASE2 and self.segmentwise is None:
            raise PermutationError("Case2 requires a segment-wise permutation")
        if cfg.case is SchemeCase.CASE1 and self.segmentwise is not None:
            raise PermutationError("Case1 bundles carry no segment-wise permutation")
        return self

    def to_dict(self) -> dict:
        return {
            "within": [list(p) for p in self.within],
            "segmentwise": list(self.segmentwise) if self.segmentwise is not None else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PermutationBundle":
        segmentwise = data.get("segmentwise")
        return cls(
            within=tuple(tuple(p) for p in data["within"]),
            segmentwise=tuple(segmentwise) if segmentwise is not None else None,
        )


@dataclass(frozen=True)
class NoiseMatrices:
    """
    Z-bar_1..Z-bar_B (one per segment) and, in Case2, Z-hat. The same
    matrices are folded into every database's reversing matrices.
    """
    zbar: Tuple[galois.FieldArray, ...]
    zhat: Optional[galois.FieldArray] = None

    @classmethod
    def random(cls, cfg: ModelConfig, seed: Seed = None) -> "NoiseMatrices":
        rng = np.random.default_rng(seed)
        GF = cfg.field.GF
        size = cfg.segment_length
        zbar = tuple(GF.Random((size, size), seed=rng) for _ in range(cfg.B))
        zhat = None
        if cfg.case is SchemeCase.CASE2:
            zhat = GF.Random((cfg.B * cfg.ell, cfg.B * cfg.ell), seed=rng)
        return cls(zbar=zbar, zhat=zhat)

    @classmethod
    def zeros(cls, cfg: ModelConfig) -> "NoiseMatrices":
        GF = cfg.field.GF
        size = cfg.segment_length
        zbar = tuple(GF.Zeros((size, size)) for _ in range(cfg.B))
        zhat = GF.Zeros((cfg.B * cfg.ell, cfg.B * cfg.ell)) if cfg.case is SchemeCase.CASE2 else None
        return cls(zbar=zbar, zhat=zhat)


def random_bundle(cfg: ModelConfig, seed: Seed = None) -> PermutationBundle:
    rng = np.random.default_rng(seed)
    within = tuple(
        tuple(int(p) + 1 for p in rng.permutation(cfg.segment_size)) for _ in range(cfg.B)
    )
    segmentwise = None
    if cfg.case is SchemeCase.CASE2:
        segmentwise = tuple(int(p) + 1 for p in rng.permutation(cfg.B))
    return PermutationBundle(within=within, segmentwise=segmentwise)


def all_bundles(cfg: ModelConfig) -> Iterator[PermutationBundle]:
    """Every possible bundle for cfg. Only sensible for tiny configs."""
    singles = list(itertools.permutations(range(1, cfg.segment_size + 1)))
    segmentwise_options = (
        list(itertools.permutations(range(1, cfg.B + 1))) if cfg.case is SchemeCase.CASE2 else [None]
    )
    for within in itertools.product(singles, repeat=cfg.B):
        for segmentwise in segmentwise_options:
            yield PermutationBundle(within=tuple(within), segmentwise=segmentwise)


def build_within_matrix(
    perm: Permutation, n: int, zbar_i: galois.FieldArray, cfg: ModelConfig
) -> galois.FieldArray:
    """R_n^[i] = (Gamma_n blocks at (perm[j], j)) + Z-bar_i."""
    size = cfg.segment_length
    if len(perm) != cfg.segment_size:
        raise DimensionMismatchError(f"Permutation of length {len(perm)} for segments of {cfg.segment_size}")
    if tuple(zbar_i.shape) != (size, size):
        raise DimensionMismatchError(f"Noise matrix {tuple(zbar_i.shape)} for a {size}x{size} reversing matrix")

    ell = cfg.ell
    gamma = cfg.field.gamma(n)
    R = cfg.field.GF.Zeros((size, size))
    for column_block, row_block in enumerate(perm):
        for k in range(ell):
            R[(row_block - 1) * ell + k, column_block * ell + k] = gamma[k]
    return R + zbar_i


def build_segment_matrix(
    phat: Permutation, n: int, zhat: galois.FieldArray, cfg: ModelConfig
) -> galois.FieldArray:
    """H-hat_n = (identity blocks at (phat[j], j)) + diag(Gamma_n^{-1}, ...) Z-hat."""
    if cfg.case is not SchemeCase.CASE2:
        raise PermutationError("The segment-wise reversing matrix only exists in Case2")
    size = cfg.B * cfg.ell
    if len(phat) != cfg.B:
        raise DimensionMismatchError(f"Segment permutation of length {len(phat)} for B={cfg.B}")
    if tuple(zhat.shape) != (size, size):
        raise DimensionMismatchError(f"Noise matrix {tuple(zhat.shape)} for a {size}x{size} segment matrix")

    ell = cfg.ell
    GF = cfg.field.GF
    H = GF.Zeros((size, size))
    one = GF(1)
    for column_block, row_block in enumerate(phat):
        for k in range(ell):
            H[(row_block - 1) * ell + k, column_block * ell + k] = one

    scale = cfg.field.gamma_inverse(n)[np.arange(size) % ell]
    return H + scale[:, np.newaxis] * zhat


def combine_matrices(
    within: Sequence[galois.FieldArray], H: galois.FieldArray, cfg: ModelConfig
) -> galois.FieldArray:
    """
    R_n = blockdiag(R_n^[1..B]) x expand(H-hat_n), where super-block (i, j) of
    the expansion repeats the ell x ell block b_{i,j} P/B times on its diagonal.
    """
    if cfg.case is not SchemeCase.CASE2:
        raise PermutationError("Combined reversing matrices only exist in Case2")
    seg_len = cfg.segment_length
    if len(within) != cfg.B or any(tuple(R.shape) != (seg_len, seg_len) for R in within):
        raise DimensionMismatchError(f"Expected {cfg.B} within-segment matrices of size {seg_len}")
    if tuple(H.shape) != (cfg.B * cfg.ell, cfg.B * cfg.ell):
        raise DimensionMismatchError(f"Segment matrix {tuple(H.shape)} does not match B*ell={cfg.B * cfg.ell}")

    ell, L = cfg.ell, cfg.L
    GF = cfg.field.GF

    block_diagonal = GF.Zeros((L, L))
    for i, R in enumerate(within):
        block_diagonal[i * seg_len:(i + 1) * seg_len, i * seg_len:(i + 1) * seg_len] = R

    expanded = GF.Zeros((L, L))
    for i in range(cfg.B):
        for j in range(cfg.B):
            block = H[i * ell:(i + 1) * ell, j * ell:(j + 1) * ell]
            for s in range(cfg.segment_size):
                row = i * seg_len + s * ell
                col = j * seg_len + s * ell
                expanded[row:row + ell, col:col + ell] = block

    return mat_mul(block_diagonal, expanded)
