import csv
import io
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Union
from src.utils.logger import get_logger

logger = get_logger(__name__)

SUPPORTED_FORMATS = ("json", "jsonl", "csv")


def store_data(data: Any, file_path: Union[str, Path], format: str = "json", **kwargs) -> Path:
    """
    Generic utility to store data in a specified format.

    Args:
        data (Any): The data to be stored. For "jsonl" and "csv" this must be an
                    iterable of dictionaries (one record / row each).
        file_path (Union[str, Path]): The destination file path.
        format (str): One of "json", "jsonl" or "csv".
        **kwargs: Additional parameters for the json writer.

    Returns:
        Path: The Path object of the stored file.
    """
    fmt = format.lower()
    if fmt not in SUPPORTED_FORMATS:
        raise ValueError(f"Unsupported format: {format}")

    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)

    try:
        if fmt == "json":
            with file_path.open("w") as f:
                json.dump(data, f, indent=4, **kwargs)
                f.write("\n")
        elif fmt == "jsonl":
            with file_path.open("w") as f:
                for record in data:
                    f.write(json.dumps(record, **kwargs) + "\n")
        else:
            with file_path.open("w", newline="") as f:
                f.write(rows_to_csv_text(data))
        logger.info(f"Data stored as {fmt.upper()} at {file_path.resolve()}")
    except Exception as e:
        logger.error(f"Error storing {fmt.upper()} data: {e}")
        raise e

    return file_path


def load_data(file_path: Union[str, Path], format: str = "json") -> Any:
    """
    Reads back a file written by store_data.
    """
    fmt = format.lower()
    if fmt not in SUPPORTED_FORMATS:
        raise ValueError(f"Unsupported format: {format}")

    file_path = Path(file_path)
    if not file_path.exists():
        logger.error(f"File {file_path} does not exist.")
        raise FileNotFoundError(f"File {file_path} does not exist.")

    with file_path.open("r", newline="") as f:
        if fmt == "json":
            return json.load(f)
        if fmt == "jsonl":
            return [json.loads(line) for line in f if line.strip()]
        return list(csv.DictReader(f))


def rows_to_csv_text(rows: Iterable[Dict[str, Any]]) -> str:
    """Renders rows as CSV text, header taken from the first row."""
    rows: List[Dict[str, Any]] = list(rows)
    buffer = io.StringIO()
    fieldnames = list(rows[0].keys()) if rows else []
    writer = csv.DictWriter(buffer, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()
