from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
from dotenv import dotenv_values

from src.analytics.costs import CostReport, audit_costs, index_symbols, reading_cost, writing_cost
from src.config.config import CONFIG
from src.coordinator.coordinator import InitPackage, initialize, save_snapshot
from src.database_node.node import DatabaseNode
from src.field_core.field import FieldConfig
from src.model_domain.model import (
    GlobalModel,
    ModelConfig,
    ModelError,
    SchemeCase,
    SparseUpdateSet,
    SubpacketAddress,
    as_rate,
    top_r_select,
)
from src.output_generator.output import OutputFileGenerator
from src.transcript.transcript import Transcript
from src.user_client.client import UserClient
from src.utils.logger import get_logger
from src.validator.validator import validate_config
from src.worker_pool.pool import WorkerPool

logger = get_logger(__name__)

MAGNITUDE_DISTRIBUTIONS = ("uniform", "zipf")


def _serve_all(node: DatabaseNode, addresses: Sequence[SubpacketAddress]) -> list:
    return [node.serve(address) for address in addresses]


class ExperimentConfigError(Exception):
    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class CorrectnessError(Exception):
    """
    A decoded value disagreed with the plaintext reference model, or the
    databases disagreed on protocol state. Names the round, user and
    subpacket where it happened when known.
    """

    def __init__(self, round: int, user: Optional[int] = None,
                 subpacket: Optional[SubpacketAddress] = None, detail: str = ""):
        where = f"round {round}"
        if user is not None:
            where += f", user {user}"
        if subpacket is not None:
            where += f", subpacket {tuple(subpacket)}"
        self.message = f"Correctness check failed at {where}" + (f": {detail}" if detail else "")
        super().__init__(self.message)
        self.round = round
        self.user = user
        self.subpacket = subpacket


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelConfig
    users: int = 1
    rounds: int = 1
    seed: int = 0
    magnitudes: str = "uniform"
    zipf_s: float = 1.5

    def validate(self) -> "ExperimentConfig":
        if self.users < 1:
            raise ExperimentConfigError(f"users must be at least 1 (got {self.users})")
        if self.rounds < 1:
            raise ExperimentConfigError(f"rounds must be at least 1 (got {self.rounds})")
        if self.magnitudes not in MAGNITUDE_DISTRIBUTIONS:
            raise ExperimentConfigError(
                f"magnitudes must be one of {MAGNITUDE_DISTRIBUTIONS} (got {self.magnitudes!r})"
            )
        if self.magnitudes == "zipf" and self.zipf_s <= 0:
            raise ExperimentConfigError(f"ZIPF_S must be positive (got {self.zipf_s})")
        validate_config(self.model)
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model": self.model.to_dict(),
            "users": self.users,
            "rounds": self.rounds,
            "seed": self.seed,
            "magnitudes": self.magnitudes,
            "zipf_s": self.zipf_s,
        }


def _setting(values: Mapping[str, Any], key: str, default: Any) -> Any:
    value = values.get(key)
    return default if value is None or str(value).strip() == "" else value


def _int_list(text: Optional[str]) -> Optional[tuple]:
    if text is None or not str(text).strip():
        return None
    return tuple(int(part) for part in str(text).split(","))


def build_experiment_config(values: Mapping[str, Any]) -> ExperimentConfig:
    """
    Builds an ExperimentConfig from flat KEY=VALUE settings
    (CASE, P, B, N, ELL, R, R_PRIME, Q, F, ALPHA, USERS, ROUNDS, SEED,
    MAGNITUDES, ZIPF_S).
    """
    missing = [key for key in ("CASE", "P", "B", "N", "R", "R_PRIME") if _setting(values, key, None) is None]
    if missing:
        raise ExperimentConfigError(f"Missing experiment settings: {', '.join(missing)}")

    try:
        case = SchemeCase.parse(values["CASE"])
        N = int(values["N"])
        ell = int(_setting(values, "ELL", case.subpacketization(N)))
        q = int(_setting(values, "Q", CONFIG["field_modulus"]))
        f = _int_list(values.get("F"))
        alpha = _int_list(values.get("ALPHA"))
        default_field = FieldConfig.default(ell, N, q)
        model = ModelConfig(
            P=int(values["P"]),
            B=int(values["B"]),
            N=N,
            ell=ell,
            r=as_rate(str(values["R"])),
            r_prime=as_rate(str(values["R_PRIME"])),
            case=case,
            field=FieldConfig(q=q, f=f or default_field.f, alpha=alpha or default_field.alpha),
        )
        config = ExperimentConfig(
            model=model,
            users=int(_setting(values, "USERS", 1)),
            rounds=int(_setting(values, "ROUNDS", 1)),
            seed=int(_setting(values, "SEED", CONFIG["default_seed"])),
            magnitudes=str(_setting(values, "MAGNITUDES", "uniform")).strip().lower(),
            zipf_s=float(_setting(values, "ZIPF_S", 1.5)),
        )
        return config.validate()
    except (ValueError, ZeroDivisionError, ModelError) as e:
        message = getattr(e, "message", str(e))
        logger.error(f"Invalid experiment settings: {message}")
        raise ExperimentConfigError(f"Invalid experiment settings: {message}") from e


def load_experiment_config(
    file_path: Union[str, Path, None], overrides: Optional[Mapping[str, Any]] = None
) -> ExperimentConfig:
    """
    Reads a dotenv-style experiment file. Non-empty ``overrides`` replace
    file values key by key.

    Raises:
        FileNotFoundError: If the file does not exist.
        ExperimentConfigError: If a value is missing or malformed.
    """
    values: Dict[str, Any] = {}
    if file_path is not None:
        path = Path(file_path)
        if not path.is_file():
            logger.error(f"Experiment file {path} does not exist.")
            raise FileNotFoundError(f"Experiment file {path} does not exist.")
        values.update(dotenv_values(path))
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    return build_experiment_config(values)


@dataclass
class RoundReport:
    round: int
    correctness: Dict[int, bool]
    cost: CostReport
    transcript_path: Optional[str] = None
    downlink: List[SubpacketAddress] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "round": self.round,
            "correctness": {str(user): ok for user, ok in self.correctness.items()},
            "cost": self.cost.to_dict(),
            "transcript_path": self.transcript_path,
            "downlink": [list(address) for address in self.downlink],
        }


class ExperimentRunner:
    """
    Runs the multi-user, multi-round protocol in process and checks it.

    Every round proceeds in barriers:
      1. Downlink selection: every database picks the P*r' permuted addresses.
      2. Reads: every user downloads and decodes them; each subpacket must
         equal the plaintext reference model.
      3. Writes: every user draws magnitudes, keeps the top P*r subpackets and
         writes them; the reference model is updated in plaintext.
      4. Verification: the private storage must decode to the reference.
      5. Cost audit of the round's transcript records.

    ``draw_magnitudes`` and ``draw_sparse_updates`` can be overridden to
    replay fixed scenarios.
    """
    def __init__(
        self,
        config: ExperimentConfig,
        output_dir: Union[str, Path, None] = None,
        init: Optional[InitPackage] = None,
        pool: Optional[WorkerPool] = None,
        verify_storage: bool = True,
    ) -> None:
        self.config = config.validate()
        self.model = config.model
        self.output_dir = Path(output_dir if output_dir is not None else CONFIG["output_dir"])
        self.pool = pool or WorkerPool()
        self.verify_storage = verify_storage
        self.transcript = Transcript()
        self.index_cost = index_symbols(self.model.P, self.model.field.q)
        self._popularity = self._zipf_weights() if config.magnitudes == "zipf" else None

        if init is None:
            reference = GlobalModel.random(self.model, seed=np.random.default_rng([config.seed, 0]))
            init = initialize(self.model, reference, seed=config.seed)
            self.reference: Optional[GlobalModel] = reference
        else:
            if init.config != self.model:
                raise ExperimentConfigError("Snapshot configuration differs from the experiment configuration")
            self.reference = None

        self.init = init
        self.rounds_completed = init.rounds_completed
        self.nodes = [DatabaseNode(package, self.model) for package in init.db_packages]
        self.users = [UserClient(u, init.user_bundle, self.model) for u in range(1, config.users + 1)]

        if self.reference is None:
            self.reference = self.reconstruct_model()
            logger.info("Reference model reconstructed from snapshot storage")

        logger.info(
            f"ExperimentRunner ready: {self.model.case.value}, P={self.model.P}, B={self.model.B}, "
            f"N={self.model.N}, users={config.users}, rounds={config.rounds}, seed={config.seed}"
        )

    def _zipf_weights(self) -> np.ndarray:
        rank = np.random.default_rng([self.config.seed, 1]).permutation(self.model.P) + 1
        return 1.0 / rank.astype(float) ** self.config.zipf_s

    def draw_magnitudes(self, round_index: int, user: int) -> np.ndarray:
        """Synthetic per-subpacket update magnitudes, one per model row."""
        rng = np.random.default_rng([self.config.seed, round_index, user, 1])
        magnitudes = rng.random(self.model.P)
        if self._popularity is not None:
            magnitudes = magnitudes * self._popularity
        return magnitudes

    def draw_sparse_updates(self, round_index: int, user: int, rows: Sequence[int]) -> SparseUpdateSet:
        """Uniform symbol updates for the selected 1-based model rows."""
        rng = np.random.default_rng([self.config.seed, round_index, user, 2])
        GF = self.model.field.GF
        deltas = {}
        for row in rows:
            address = self.model.address_of(row - 1)
            deltas[tuple(address)] = [int(v) for v in GF.Random(self.model.ell, seed=rng)]
        return SparseUpdateSet.from_deltas(deltas, self.model)

    def _collect_answers(self, addresses: Sequence[SubpacketAddress]) -> Dict[int, list]:
        return self.pool.run_tasks({
            node.n: partial(_serve_all, node, list(addresses))
            for node in self.nodes
        })

    def reconstruct_model(self) -> GlobalModel:
        """Decodes every subpacket through the private read path."""
        user = self.users[0]
        permuted = [user.mapper.to_permuted(address) for address in self.model.addresses()]
        answers = self._collect_answers(permuted)
        GF = self.model.field.GF
        W = GF.Zeros((self.model.P, self.model.ell))
        for i, address in enumerate(permuted):
            decoded = user.decode(address, [answers[n][i] for n in sorted(answers)])
            W[self.model.row_index(decoded.address)] = decoded.symbols
        return GlobalModel(W)

    def select_downlink(self, round_index: int) -> List[SubpacketAddress]:
        selections = self.pool.run_tasks({
            node.n: partial(node.select_downlink, round_index, self.config.seed) for node in self.nodes
        })
        distinct = {selection.addresses for selection in selections.values()}
        if len(distinct) != 1:
            logger.error(f"Databases disagree on the downlink selection in round {round_index}")
            raise CorrectnessError(round_index, detail="databases disagree on the downlink selection")
        addresses = list(next(iter(distinct)))
        for user in self.users:
            self.transcript.append(
                round_index, "downlink_select", "db-1", f"user-{user.user_id}",
                "indices", len(addresses) * self.index_cost,
            )
        return addresses

    def read_phase(self, round_index: int, addresses: Sequence[SubpacketAddress]) -> Dict[int, bool]:
        correctness: Dict[int, bool] = {}
        for user in self.users:
            answers = self._collect_answers(addresses)
            for n in sorted(answers):
                self.transcript.append(round_index, "read", f"db-{n}", f"user-{user.user_id}",
                                       "answers", len(addresses))
            for i, (permuted, real) in enumerate(user.resolve_selection(addresses)):
                decoded = user.decode(permuted, [answers[n][i] for n in sorted(answers)])
                expected = self.reference.subpacket(real, self.model)
                if not np.array_equal(decoded.symbols, expected):
                    logger.error(
                        f"Round {round_index}: user {user.user_id} decoded {decoded.to_dict()} "
                        f"but the model holds {expected.view(np.ndarray).tolist()}"
                    )
                    raise CorrectnessError(round_index, user.user_id, decoded.address, "read mismatch")
            correctness[user.user_id] = True
        return correctness

    def write_phase(self, round_index: int) -> None:
        for user in self.users:
            rows = top_r_select(self.draw_magnitudes(round_index, user.user_id), self.model.upload_count)
            sparse = self.draw_sparse_updates(round_index, user.user_id, rows)
            streams = user.prepare_write(sparse, seed=[self.config.seed, round_index, user.user_id, 3])
            self.pool.run_tasks({
                node.n: partial(node.apply_write, streams[node.n]) for node in self.nodes
            })
            for n in sorted(streams):
                self.transcript.append(round_index, "write", f"user-{user.user_id}", f"db-{n}",
                                       "update_tuples", len(streams[n]) * (1 + self.index_cost))
            self.reference = self.reference.apply(sparse, self.model)
            logger.debug(f"Round {round_index}: user {user.user_id} wrote {[tuple(a) for a in sparse.addresses()]}")

        for node in self.nodes:
            node.close_round()

    def check_storage(self, round_index: int) -> None:
        decoded = self.reconstruct_model()
        if decoded != self.reference:
            rows = np.nonzero(np.any(decoded.W != self.reference.W, axis=1))[0]
            address = self.model.address_of(int(rows[0]))
            logger.error(f"Round {round_index}: private storage diverged from the reference at {tuple(address)}")
            raise CorrectnessError(round_index, subpacket=address, detail="storage does not decode to the model")

    def check_costs(self, round_index: int, cost: CostReport) -> None:
        read = reading_cost(self.model.case, self.model.N, self.model.r_prime, self.model.P,
                            self.model.field.q, ceil_index=True)
        write = writing_cost(self.model.case, self.model.N, self.model.r, self.model.P,
                             self.model.field.q, ceil_index=True)
        if not (np.isclose(cost.measured_reading_cost, read, rtol=1e-12, atol=0.0)
                and np.isclose(cost.measured_writing_cost, write, rtol=1e-12, atol=0.0)):
            logger.error(
                f"Round {round_index}: measured costs {cost.measured_reading_cost}, "
                f"{cost.measured_writing_cost} differ from {read}, {write}"
            )
            raise CorrectnessError(round_index, detail="measured costs differ from the closed forms")

    def run_round(self, round_index: int) -> RoundReport:
        logger.info(f"Round {round_index} started")
        addresses = self.select_downlink(round_index)
        correctness = self.read_phase(round_index, addresses)
        self.write_phase(round_index)
        if self.verify_storage:
            self.check_storage(round_index)

        cost = audit_costs(self.transcript.for_round(round_index), self.model)
        self.check_costs(round_index, cost)
        logger.info(
            f"Round {round_index} finished: C_R={cost.measured_reading_cost:.6f}, "
            f"C_W={cost.measured_writing_cost:.6f}"
        )
        self.rounds_completed = max(self.rounds_completed, round_index)
        return RoundReport(round=round_index, correctness=correctness, cost=cost, downlink=addresses)

    def snapshot(self) -> InitPackage:
        return InitPackage(
            config=self.model,
            user_bundle=self.init.user_bundle,
            db_packages=tuple(node.to_package() for node in self.nodes),
            rounds_completed=self.rounds_completed,
        )

    def run(self) -> List[RoundReport]:
        # Numbering continues after the rounds a snapshot already holds.
        first = self.rounds_completed + 1
        reports = [self.run_round(t) for t in range(first, first + self.config.rounds)]

        output = OutputFileGenerator(self.output_dir)
        transcript_path = self.transcript.save(self.output_dir / CONFIG["transcript_file"])
        for report in reports:
            report.transcript_path = transcript_path.name
        output.generate_report_file(self.config.to_dict(), reports)
        save_snapshot(self.snapshot(), self.output_dir / CONFIG["snapshot_file"])

        logger.info(f"Experiment completed: {len(reports)} rounds, all reads and writes verified")
        return reports


def run_experiment(
    config: ExperimentConfig,
    output_dir: Union[str, Path, None] = None,
    init: Optional[InitPackage] = None,
) -> List[RoundReport]:
    return ExperimentRunner(config, output_dir=output_dir, init=init).run()
