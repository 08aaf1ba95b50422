from pathlib import Path
from typing import Any, Dict, Iterable, List, Union

from src.config.config import CONFIG
from src.utils.file_storage import store_data
from src.utils.logger import get_logger

logger = get_logger(__name__)


class OutputFileGenerator:
    """
    Writes experiment results under one output directory.

    Round reports go to JSON; leakage sweeps, cost tables and trade-off
    tables go to CSV with the column order of their rows. Files carry no
    timestamps so a fixed seed reproduces them byte for byte.
    """
    def __init__(self, output_dir: Union[str, Path, None] = None) -> None:
        self.output_dir = Path(output_dir if output_dir is not None else CONFIG["output_dir"])
        self.output_dir.mkdir(parents=True, exist_ok=True)
        logger.debug(f"Output directory set to: {self.output_dir.resolve()}")

    def transform_reports(self, config: Dict[str, Any], reports: Iterable[Any]) -> Dict[str, Any]:
        """
        Builds the round-report document.

        Args:
            config (Dict[str, Any]): The experiment parameters.
            reports (Iterable[Any]): Objects with a ``to_dict`` method, one per round.

        Returns:
            Dict[str, Any]: The document written by ``generate_report_file``.
        """
        rounds: List[Dict[str, Any]] = [report.to_dict() for report in reports]
        return {
            "config": config,
            "rounds": rounds,
            "all_correct": all(all(r["correctness"].values()) for r in rounds),
        }

    def generate_report_file(self, config: Dict[str, Any], reports: Iterable[Any],
                             file_name: str = "round_reports.json") -> Path:
        return store_data(self.transform_reports(config, reports), self.output_dir / file_name, format="json")

    def generate_csv(self, rows: List[Dict[str, Any]], file_name: str) -> Path:
        if not rows:
            logger.warning(f"Writing {file_name} without any rows")
        return store_data(rows, self.output_dir / file_name, format="csv")

    def generate_leakage_file(self, rows: List[Dict[str, Any]]) -> Path:
        return self.generate_csv(rows, "leakage.csv")

    def generate_cost_file(self, rows: List[Dict[str, Any]]) -> Path:
        return self.generate_csv(rows, "costs.csv")

    def generate_tradeoff_file(self, rows: List[Dict[str, Any]]) -> Path:
        return self.generate_csv(rows, "tradeoff.csv")
