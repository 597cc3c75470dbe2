import io
import json
import logging
import math

import numpy as np
import pytest

from random_binning.config import LoggingConfig
from random_binning.exceptions import MemoryBudgetExceededError
from random_binning.logging_config import (
    ROOT_LOGGER,
    LogContext,
    configure_from,
    get_logger,
    log_exception,
    setup_logging,
)


@pytest.fixture(autouse=True)
def reset_package_logger():
    yield
    logger = logging.getLogger(ROOT_LOGGER)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()


def read_json_lines(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


class TestSetup:
    def test_child_loggers_share_handlers(self):
        stream = io.StringIO()
        setup_logging(level="INFO", stream=stream)
        get_logger('spectrum').info("table built")
        get_logger('spectrum').debug("hidden")
        output = stream.getvalue()
        assert "random_binning.spectrum" in output
        assert "table built" in output
        assert "hidden" not in output

    def test_repeated_setup_replaces_handlers(self):
        setup_logging(stream=io.StringIO())
        setup_logging(stream=io.StringIO())
        assert len(logging.getLogger(ROOT_LOGGER).handlers) == 1

    def test_unknown_level(self):
        with pytest.raises(ValueError):
            setup_logging(level="LOUD", console=False)

    def test_configure_from_overrides(self, tmp_path):
        section = LoggingConfig(level="INFO", file=str(tmp_path / "a.log"))
        logger = configure_from(section, verbose=True)
        assert logger.level == logging.DEBUG
        logger = configure_from(section, quiet=True, log_file=str(tmp_path / "b.log"))
        assert logger.level == logging.WARNING
        assert (tmp_path / "b.log").exists()


class TestJsonFile:
    def test_context_fields_reach_file(self, tmp_path):
        path = tmp_path / "logs" / "run.jsonl"
        setup_logging(level="DEBUG", log_file=str(path), json_format=True, console=False)
        logger = get_logger('simulator')
        with LogContext(logger, n=np.int64(12), rate=0.5):
            with LogContext(logger, trial=3):
                logger.debug("inner")
            logger.debug("outer")
        logger.debug("after")
        inner, outer, after = read_json_lines(path)
        assert inner['n'] == 12 and inner['trial'] == 3
        assert outer['rate'] == 0.5 and 'trial' not in outer
        assert 'n' not in after

    def test_infinite_values_are_strings(self, tmp_path):
        path = tmp_path / "run.jsonl"
        setup_logging(log_file=str(path), json_format=True, console=False)
        get_logger('phase').info("critical", extra={'beta': math.inf})
        (entry,) = read_json_lines(path)
        assert entry['beta'] == 'inf'

    def test_log_exception_attaches_details(self, tmp_path):
        path = tmp_path / "run.jsonl"
        setup_logging(log_file=str(path), json_format=True, console=False)
        log_exception(get_logger('cli'), MemoryBudgetExceededError(2 ** 30, 2 ** 26), "simulate failed")
        (entry,) = read_json_lines(path)
        assert entry['level'] == 'ERROR'
        assert entry['error_type'] == 'MemoryBudgetExceededError'
        assert entry['details'] == {'sequences': 2 ** 30, 'budget': 2 ** 26}
        assert 'exception' not in entry


class TestConsole:
    def test_context_suffix(self):
        stream = io.StringIO()
        setup_logging(stream=stream)
        logger = get_logger('dilution')
        with LogContext(logger, cell=4):
            logger.info("measured")
        assert stream.getvalue().rstrip().endswith("measured [cell=4]")

    def test_no_color_off_tty(self):
        stream = io.StringIO()
        setup_logging(stream=stream)
        get_logger('cli').warning("plain")
        assert '\033[' not in stream.getvalue()
