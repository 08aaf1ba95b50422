import logging

from src.utils.logger import get_logger

def test_logger_name():
    logger = get_logger(__name__)
    assert logger.name == __name__

def test_numba_compilation_logs_are_quiet():
    assert logging.getLogger("numba").level == logging.WARNING

def test_module_logs_reach_caplog(caplog):
    get_logger("src.field_core.field").error("Validation failed: example")
    assert "Validation failed: example" in caplog.text
