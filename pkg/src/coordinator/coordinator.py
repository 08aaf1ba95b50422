"""
The trusted one-shot initializer. It draws the permutations, the noise
matrices and the storage noise, encodes the initial storage of every database
and hands the user-side and database-side materials out. Nothing is kept
after initialize() returns.
"""
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import galois
import numpy as np

from src.field_core.field import as_ints, mat_mul
from src.model_domain.model import GlobalModel, ModelConfig, SchemeCase
from src.permutation_engine.permutations import (
    NoiseMatrices,
    PermutationBundle,
    build_segment_matrix,
    build_within_matrix,
    random_bundle,
)
from src.utils.file_storage import load_data, store_data
from src.utils.logger import get_logger
from src.validator.validator import validate_config

logger = get_logger(__name__)

SNAPSHOT_FORMAT = "pfl-snapshot/1"


class CoordinatorError(Exception):
    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class SnapshotError(CoordinatorError):
    pass


@dataclass(frozen=True)
class StorageNoise:
    """
    Coefficients I_{i,j}, j = 0..x, for every subpacket and symbol:
    an array of shape (P, ell, x + 1).
    """
    I: galois.FieldArray

    @classmethod
    def random(cls, cfg: ModelConfig, seed: Union[int, np.random.Generator, None] = None) -> "StorageNoise":
        rng = np.random.default_rng(seed)
        return cls(cfg.field.GF.Random((cfg.P, cfg.ell, cfg.noise_degree + 1), seed=rng))

    @classmethod
    def zeros(cls, cfg: ModelConfig) -> "StorageNoise":
        return cls(cfg.field.GF.Zeros((cfg.P, cfg.ell, cfg.noise_degree + 1)))


@dataclass(frozen=True)
class DatabasePackage:
    """Everything database n receives. No permutation appears in the clear."""
    n: int
    within: Tuple[galois.FieldArray, ...]
    segment: Optional[galois.FieldArray]
    storage: galois.FieldArray

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "within": [as_ints(R) for R in self.within],
            "segment": as_ints(self.segment) if self.segment is not None else None,
            "storage": as_ints(self.storage),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], cfg: ModelConfig) -> "DatabasePackage":
        GF = cfg.field.GF
        segment = data.get("segment")
        return cls(
            n=int(data["n"]),
            within=tuple(GF(R) for R in data["within"]),
            segment=GF(segment) if segment is not None else None,
            storage=GF(data["storage"]),
        )


@dataclass(frozen=True)
class InitPackage:
    config: ModelConfig
    user_bundle: PermutationBundle
    db_packages: Tuple[DatabasePackage, ...]
    rounds_completed: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format": SNAPSHOT_FORMAT,
            "config": self.config.to_dict(),
            "user_bundle": self.user_bundle.to_dict(),
            "db_packages": [package.to_dict() for package in self.db_packages],
            "rounds_completed": self.rounds_completed,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "InitPackage":
        if not isinstance(data, dict):
            raise SnapshotError(f"Snapshot must be a JSON object, got {type(data).__name__}")
        if data.get("format") != SNAPSHOT_FORMAT:
            raise SnapshotError(f"Unsupported snapshot format {data.get('format')!r}, expected {SNAPSHOT_FORMAT!r}")
        try:
            cfg = validate_config(ModelConfig.from_dict(data["config"]))
            return cls(
                config=cfg,
                user_bundle=PermutationBundle.from_dict(data["user_bundle"]).check_against(cfg),
                db_packages=tuple(DatabasePackage.from_dict(p, cfg) for p in data["db_packages"]),
                rounds_completed=int(data.get("rounds_completed", 0)),
            )
        except KeyError as e:
            raise SnapshotError(f"Snapshot is missing field {e}") from e
        except (TypeError, ValueError, AttributeError, IndexError) as e:
            logger.error(f"Snapshot rejected: {e}")
            raise SnapshotError(f"Snapshot holds an invalid value: {e}") from e


def encode_storage(W: GlobalModel, noise: StorageNoise, n: int, cfg: ModelConfig) -> galois.FieldArray:
    """
    S_n[s, i] = W_i^[s] / (f_i - alpha_n) + sum_j alpha_n^j I_{i,j}^[s],
    flattened subpacket by subpacket into a length-L vector.
    """
    GF = cfg.field.GF
    x = cfg.noise_degree
    alpha = cfg.field.alpha_element(n)
    powers = GF([int(alpha ** j) for j in range(x + 1)])

    masked = W.W * cfg.field.gamma(n)
    polynomial = mat_mul(noise.I.reshape(cfg.L, x + 1), powers)
    return masked.reshape(cfg.L) + polynomial


def initialize(
    cfg: ModelConfig,
    W: GlobalModel,
    seed: Optional[int] = None,
    bundle: Optional[PermutationBundle] = None,
    noise: Optional[NoiseMatrices] = None,
    storage_noise: Optional[StorageNoise] = None,
) -> InitPackage:
    """
    Builds the user bundle and the N database packages.

    ``bundle``, ``noise`` and ``storage_noise`` replace the seeded draws when
    given, so fixed scenarios can be replayed.
    """
    validate_config(cfg)
    W.check_shape(cfg)

    bundle_seed, noise_seed, storage_seed = np.random.SeedSequence(seed).spawn(3)
    bundle = random_bundle(cfg, np.random.default_rng(bundle_seed)) if bundle is None else bundle
    bundle.check_against(cfg)
    noise = NoiseMatrices.random(cfg, np.random.default_rng(noise_seed)) if noise is None else noise
    storage_noise = StorageNoise.random(cfg, np.random.default_rng(storage_seed)) if storage_noise is None else storage_noise

    packages = []
    for n in range(1, cfg.N + 1):
        within = tuple(
            build_within_matrix(perm, n, zbar, cfg) for perm, zbar in zip(bundle.within, noise.zbar)
        )
        segment = None
        if cfg.case is SchemeCase.CASE2:
            segment = build_segment_matrix(bundle.segmentwise, n, noise.zhat, cfg)
        packages.append(DatabasePackage(
            n=n, within=within, segment=segment, storage=encode_storage(W, storage_noise, n, cfg),
        ))

    logger.info(
        f"Coordinator initialized {cfg.case.value}: P={cfg.P}, B={cfg.B}, N={cfg.N}, ell={cfg.ell}, "
        f"{cfg.B} within-segment matrices of size {cfg.segment_length} per database"
    )
    return InitPackage(config=cfg, user_bundle=bundle, db_packages=tuple(packages))


def save_snapshot(package: InitPackage, file_path: Union[str, Path]) -> Path:
    return store_data(package.to_dict(), file_path, format="json")


def load_snapshot(file_path: Union[str, Path]) -> InitPackage:
    try:
        data = load_data(file_path, format="json")
    except json.JSONDecodeError as e:
        logger.error(f"Snapshot {file_path} is not valid JSON: {e}")
        raise SnapshotError(f"Snapshot {file_path} is not valid JSON: {e.msg}") from e
    package = InitPackage.from_dict(data)
    logger.info(f"Loaded snapshot for {package.config.case.value} with {len(package.db_packages)} databases")
    return package
