import concurrent.futures
from typing import Any, Callable, Dict, Hashable, Mapping, Optional

from src.config.config import CONFIG
from src.utils.logger import get_logger

logger = get_logger(__name__)


class WorkerPoolError(Exception):
    """
    Raised when one or more tasks failed. ``failures`` maps each failed task
    key to its exception.
    """

    def __init__(self, failures: Dict[Hashable, BaseException]):
        keys = ", ".join(str(key) for key in failures)
        super().__init__(f"{len(failures)} task(s) failed: {keys}")
        self.message = f"{len(failures)} task(s) failed: {keys}"
        self.failures = failures


class WorkerPool:
    """
    A generic worker pool for running per-database tasks concurrently.

    Database nodes share no state, so their work inside one protocol phase
    can run on separate threads. Results are always returned in task-key
    order regardless of completion order.

    Attributes:
        max_workers (int): Maximum number of worker threads.
        checkpoints (Dict[Hashable, str]): Status of every task of the last run.
    """
    def __init__(self, max_workers: Optional[int] = None) -> None:
        self.max_workers = max_workers or CONFIG["max_workers"]
        self.checkpoints: Dict[Hashable, str] = {}
        logger.debug(f"WorkerPool initialized with max_workers={self.max_workers}")

    def run_tasks(self, tasks: Mapping[Hashable, Callable[[], Any]]) -> Dict[Hashable, Any]:
        """
        Runs every task and collects its result.

        Args:
            tasks (Mapping[Hashable, Callable[[], Any]]): Zero-argument callables keyed by
                an identifier such as the database index.

        Returns:
            Dict[Hashable, Any]: Results keyed and ordered like ``tasks``.

        Raises:
            WorkerPoolError: If any task raised.
        """
        self.checkpoints = {}
        results: Dict[Hashable, Any] = {}
        failures: Dict[Hashable, BaseException] = {}

        if self.max_workers <= 1:
            for key, task in tasks.items():
                self._run_one(key, task, results, failures)
        else:
            with concurrent.futures.ThreadPoolExecutor(max_workers=self.max_workers) as executor:
                future_to_key = {executor.submit(task): key for key, task in tasks.items()}
                for future in concurrent.futures.as_completed(future_to_key):
                    self._run_one(future_to_key[future], future.result, results, failures)

        if failures:
            raise WorkerPoolError(failures)
        return {key: results[key] for key in tasks}

    def _run_one(
        self,
        key: Hashable,
        task: Callable[[], Any],
        results: Dict[Hashable, Any],
        failures: Dict[Hashable, BaseException],
    ) -> None:
        try:
            results[key] = task()
            self.checkpoints[key] = "SUCCESS"
        except Exception as exc:
            failures[key] = exc
            self.checkpoints[key] = f"FAILED: {exc}"
            logger.error(f"Task {key} failed: {exc}")
