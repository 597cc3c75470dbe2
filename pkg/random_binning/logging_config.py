"""Logging for the random binning toolkit.

All loggers hang below ``random_binning``. Console output goes to stderr so
CSV written to stdout stays clean; the optional file handler rotates and can
emit one JSON object per line. ``LogContext`` tags every record emitted
inside a block (trial index, sweep cell, blocklength, ...), which is how
parallel sweeps stay traceable in the JSON logs.
"""

import contextvars
import json
import logging
import logging.handlers
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Any, Optional

ROOT_LOGGER = 'random_binning'

# Fields attached by LogContext, visible to every handler of the package
_context: contextvars.ContextVar[dict] = contextvars.ContextVar('random_binning_log_context', default={})

# Record attributes written by JsonFormatter besides the context
_RESERVED = frozenset(logging.makeLogRecord({}).__dict__) | {'message', 'asctime'}


def _plain(value: Any) -> Any:
    """JSON-safe copy of a field value (numpy scalars, infinities, nested dicts)."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if hasattr(value, 'item') and callable(value.item):
        try:
            value = value.item()
        except (TypeError, ValueError):
            return str(value)
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)


class ContextFilter(logging.Filter):
    """Copies the active LogContext fields onto each record."""

    def filter(self, record: logging.LogRecord) -> bool:
        for key, value in _context.get().items():
            if not hasattr(record, key):
                setattr(record, key, value)
        return True


class JsonFormatter(logging.Formatter):
    """One JSON object per record, extra fields included."""

    def format(self, record: logging.LogRecord) -> str:
        entry = {
            'timestamp': datetime.fromtimestamp(record.created, timezone.utc).isoformat(),
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
            'function': record.funcName,
            'line': record.lineno,
            'pid': record.process,
        }
        if record.exc_info:
            entry['error_type'] = record.exc_info[0].__name__
            entry['exception'] = self.formatException(record.exc_info)
        for key, value in record.__dict__.items():
            if key not in _RESERVED and not key.startswith('_'):
                entry[key] = _plain(value)
        return json.dumps(entry)


class ConsoleFormatter(logging.Formatter):
    """Short human-readable lines; context fields are appended in brackets."""

    COLORS = {
        'DEBUG': '\033[36m',
        'INFO': '\033[32m',
        'WARNING': '\033[33m',
        'ERROR': '\033[31m',
        'CRITICAL': '\033[41m',
    }
    RESET = '\033[0m'

    def __init__(self, stream: IO, fmt: str, datefmt: Optional[str] = None):
        super().__init__(fmt, datefmt=datefmt)
        self.use_color = bool(getattr(stream, 'isatty', lambda: False)()) and 'NO_COLOR' not in os.environ

    def format(self, record: logging.LogRecord) -> str:
        line = super().format(record)
        fields = _context.get()
        if fields:
            line += ' [' + ' '.join(f"{k}={v}" for k, v in fields.items()) + ']'
        if self.use_color:
            color = self.COLORS.get(record.levelname, '')
            line = f"{color}{line}{self.RESET}"
        return line


def _console_handler(stream: IO) -> logging.Handler:
    handler = logging.StreamHandler(stream)
    handler.setFormatter(ConsoleFormatter(stream, "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s",
                                          datefmt='%H:%M:%S'))
    return handler


def _file_handler(log_file: str, json_format: bool, max_bytes: int, backup_count: int) -> logging.Handler:
    path = Path(log_file)
    path.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.handlers.RotatingFileHandler(path, maxBytes=max_bytes,
                                                   backupCount=backup_count, encoding='utf-8')
    if json_format:
        handler.setFormatter(JsonFormatter())
    else:
        handler.setFormatter(logging.Formatter(
            "%(asctime)s | %(levelname)-8s | %(name)s | %(module)s:%(lineno)d | %(message)s"))
    return handler


def setup_logging(
    level: str = "INFO",
    log_file: Optional[str] = None,
    json_format: bool = False,
    console: bool = True,
    max_bytes: int = 5 * 1024 * 1024,
    backup_count: int = 3,
    stream: Optional[IO] = None,
) -> logging.Logger:
    """Configure the ``random_binning`` logger.

    Args:
        level: Log level name (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Rotating log file; its directory is created
        json_format: Write the file as JSON lines
        console: Log to ``stream`` (stderr by default)
        max_bytes: Size at which the file rotates
        backup_count: Rotated files to keep
        stream: Console stream override

    Returns:
        The package logger

    Raises:
        ValueError: for an unknown level name
    """
    numeric = logging.getLevelName(level.upper())
    if not isinstance(numeric, int):
        raise ValueError(f"Unknown log level: {level}")

    logger = logging.getLogger(ROOT_LOGGER)
    logger.setLevel(numeric)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    handlers = []
    if console:
        handlers.append(_console_handler(stream or sys.stderr))
    if log_file:
        handlers.append(_file_handler(log_file, json_format, max_bytes, backup_count))
    for handler in handlers:
        handler.addFilter(ContextFilter())
        logger.addHandler(handler)

    logger.propagate = False
    return logger


def configure_from(section, verbose: bool = False, quiet: bool = False,
                   log_file: Optional[str] = None) -> logging.Logger:
    """setup_logging from a LoggingConfig; ``verbose``/``quiet`` override its level."""
    level = "DEBUG" if verbose else ("WARNING" if quiet else section.level)
    return setup_logging(
        level=level,
        log_file=log_file or section.file,
        json_format=section.json_format,
        max_bytes=section.max_bytes,
        backup_count=section.backup_count,
    )


def get_logger(name: str) -> logging.Logger:
    """Logger ``random_binning.<name>`` for a module ('spectrum', 'simulator', ...)."""
    return logging.getLogger(f'{ROOT_LOGGER}.{name}')


class LogContext:
    """Tags records logged inside the block with ``fields``.

    Contexts nest; inner fields shadow outer ones of the same name.

        with LogContext(logger, n=12, rate=0.5):
            logger.debug("starting")   # carries n and rate
    """

    def __init__(self, logger: logging.Logger, **fields):
        self.logger = logger
        self.fields = fields
        self._token: Optional[contextvars.Token] = None

    @property
    def active(self) -> dict:
        return dict(_context.get())

    def __enter__(self):
        self._token = _context.set({**_context.get(), **self.fields})
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        _context.reset(self._token)
        self._token = None
        return False


def log_exception(logger: logging.Logger, exc: Exception,
                  message: str = "An error occurred",
                  level: int = logging.ERROR) -> None:
    """Log ``exc`` under ``message``, attaching its ``details`` dict.

    Tracebacks are only included at DEBUG verbosity; BinningError messages
    already carry the relevant values.
    """
    extra = {'error_type': type(exc).__name__}
    details = getattr(exc, 'details', None)
    if details:
        extra['details'] = details
    logger.log(level, f"{message}: {exc}", exc_info=logger.isEnabledFor(logging.DEBUG), extra=extra)
