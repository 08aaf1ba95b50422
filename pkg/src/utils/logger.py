import logging
import logging.config

from src.config.config import CONFIG

LOG_LEVEL = CONFIG["log_level"]
LOG_FILE = CONFIG["log_file"]

LOGGING_CONFIG = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "standard": {
            "format": "%(asctime)s [%(levelname)s] %(module)s: %(message)s"
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "standard",
            "level": LOG_LEVEL,
        }
    },
    "loggers": {
        "": {
            "handlers": ["console"],
            "level": "DEBUG",
            "propagate": True,
        },
        # numba logs every compilation pass at DEBUG.
        "numba": {"level": "WARNING"},
    },
}

if LOG_FILE:
    LOGGING_CONFIG["handlers"]["file"] = {
        "class": "logging.FileHandler",
        "formatter": "standard",
        "level": "DEBUG",
        "filename": LOG_FILE,
    }
    LOGGING_CONFIG["loggers"][""]["handlers"].append("file")

logging.config.dictConfig(LOGGING_CONFIG)


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)
