from pathlib import Path
import os
from dotenv import load_dotenv

load_dotenv()

# Determine the project root based on this file’s location.
BASE_PATH = Path(__file__).resolve().parents[2]

CONFIG = {
    "field_modulus": int(os.getenv("FIELD_MODULUS", 2147483647)),
    "output_dir": BASE_PATH / os.getenv("OUTPUT_DIR", "data/output"),
    "transcript_file": os.getenv("TRANSCRIPT_FILE", "transcript.jsonl"),
    "snapshot_file": os.getenv("SNAPSHOT_FILE", "snapshot.json"),
    "max_workers": int(os.getenv("MAX_WORKERS", 4)),
    "default_seed": int(os.getenv("DEFAULT_SEED", 0)),
    "entropy_base": int(os.getenv("ENTROPY_BASE", 2)),
    "log_level": os.getenv("LOG_LEVEL", "INFO").upper(),
    "log_file": os.getenv("LOG_FILE"),
}
