"""Line-delimited JSON logging tagged with experiment and scenario."""

from __future__ import annotations

import contextlib
import contextvars
import json
import logging
import sys
import time

_context: contextvars.ContextVar[dict] = contextvars.ContextVar("dualwatt_log_context", default={})


@contextlib.contextmanager
def log_context(**tags):
    token = _context.set({**_context.get(), **tags})
    try:
        yield
    finally:
        _context.reset(token)


class _ContextFilter(logging.Filter):
    def filter(self, record: logging.LogRecord) -> bool:
        record.tags = _context.get()
        return True


class JsonFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        entry = {
            "ts": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime(record.created)) + f".{int(record.msecs):03d}Z",
            "level": record.levelname.lower(),
            "logger": record.name,
            "msg": record.getMessage(),
        }
        entry.update(getattr(record, "tags", {}))
        if record.exc_info:
            entry["exc"] = self.formatException(record.exc_info)
        return json.dumps(entry, default=str)


def configure_logging(level: int | str = logging.INFO, stream=None) -> logging.Handler:
    """Install one JSON handler on the package logger (idempotent)."""
    logger = logging.getLogger("dualwatt")
    for h in list(logger.handlers):
        if getattr(h, "_dualwatt", False):
            logger.removeHandler(h)
    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(JsonFormatter())
    handler.addFilter(_ContextFilter())
    handler._dualwatt = True
    logger.addHandler(handler)
    logger.setLevel(level)
    return handler
