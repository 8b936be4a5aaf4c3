import logging
import os
import sys
from datetime import datetime, timezone
from typing import Any, Dict, Optional

import numpy as np
from pythonjsonlogger import jsonlogger

# ANSI color codes
_LEVEL_COLORS = {
    "DEBUG": "\033[94m",
    "INFO": "\033[92m",
    "WARNING": "\033[93m",
    "ERROR": "\033[91m",
    "CRITICAL": "\033[91m\033[1m",
}
_RESET = "\033[0m"
_DIM = "\033[2m"


def _plain(value: Any) -> Any:
    """Convert numpy scalars and complex numbers into log-friendly values."""
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


def flatten_metadata(metadata: Dict[str, Any]) -> Dict[str, Any]:
    """
    Flatten one level of nested metadata dictionaries.

    Args:
        metadata: The metadata dictionary to flatten

    Returns:
        Flattened dictionary with nested keys joined by underscores
    """
    flat: Dict[str, Any] = {}
    for key, value in metadata.items():
        if isinstance(value, dict):
            for subkey, subvalue in value.items():
                flat[f"{key}_{subkey}"] = _plain(subvalue)
        else:
            flat[key] = _plain(value)
    return flat


class LevelColorFormatter(logging.Formatter):
    """
    Console formatter with colored levels and trailing metadata.

    Metadata attached by the context adapter is appended as bracketed
    key-value pairs. Colors are disabled when stderr is not a terminal or
    NO_COLOR is set.
    """

    def __init__(
        self,
        fmt: Optional[str] = None,
        datefmt: Optional[str] = None,
        style: str = "%",
        validate: bool = True,
    ):
        super().__init__(fmt, datefmt, style, validate)
        self.use_colors = sys.stderr.isatty() and os.getenv("NO_COLOR") is None

    def format(self, record: logging.LogRecord) -> str:
        record.shortpath = os.path.basename(record.pathname or "<unknown>")

        if self.use_colors:
            color = _LEVEL_COLORS.get(record.levelname, "")
            record.colored_levelname = f"{color}{record.levelname}{_RESET}"
        else:
            record.colored_levelname = record.levelname

        base = super().format(record)

        meta = getattr(record, "custom_metadata", None)
        if meta:
            block = " ".join(f"{k}={v}" for k, v in flatten_metadata(meta).items())
            if self.use_colors:
                return f"{base} {_DIM}[{block}]{_RESET}"
            return f"{base} [{block}]"
        return base

    def formatException(self, exc_info) -> str:
        text = super().formatException(exc_info)
        if self.use_colors:
            return f"{_LEVEL_COLORS['ERROR']}{text}{_RESET}"
        return text


class JSONFormatter(jsonlogger.JsonFormatter):
    """
    JSON formatter for machine-readable run logs.

    Adds an ISO8601 UTC timestamp, the run id and the service name, and
    lifts the adapter metadata into top-level fields.
    """

    def add_fields(self, log_record: Dict[str, Any], record: logging.LogRecord, message_dict):
        super().add_fields(log_record, record, message_dict)
        meta = log_record.pop("custom_metadata", None)
        if meta:
            log_record.update(flatten_metadata(meta))
        ts = datetime.fromtimestamp(record.created, tz=timezone.utc)
        log_record["timestamp"] = ts.isoformat(timespec="milliseconds")
        log_record["level"] = record.levelname
        log_record["logger"] = record.name
        log_record.setdefault("service", os.getenv("SERVICE_NAME", "qgraph"))
