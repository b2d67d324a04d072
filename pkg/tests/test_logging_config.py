import logging
import sys

import pytest
import structlog

from logging_config import configure_logging, get_logger


@pytest.mark.parametrize("json_logs,renderer", [
    # Case 1: Batch runs
    (True, structlog.processors.JSONRenderer),
    # Case 2: Terminal use
    (False, structlog.dev.ConsoleRenderer),
])
def test_configure_logging_renderer(json_logs, renderer):
    """Test that the final processor matches the requested output style."""
    configure_logging(json_logs=json_logs)
    processors = structlog.get_config()["processors"]
    assert isinstance(processors[-1], renderer)


def test_configure_logging_level():
    configure_logging(json_logs=True, level="debug")
    assert logging.getLogger().level == logging.DEBUG
    configure_logging(json_logs=True, level="nonsense")
    assert logging.getLogger().level == logging.INFO


def test_get_logger_binds_lazily():
    logger = get_logger("lab.test")
    assert hasattr(logger, "info")


def test_records_go_to_stderr():
    """Test that the root handler writes to stderr so stdout carries only the report."""
    configure_logging(json_logs=True, level="INFO")
    streams = [h.stream for h in logging.getLogger().handlers if type(h) is logging.StreamHandler]
    assert streams == [sys.stderr]
