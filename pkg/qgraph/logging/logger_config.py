"""
Centralized logging configuration for qgraph.

The style follows the environment:
- local/test/development: colorized console lines
- anything else: JSON lines (python-json-logger)

Environment variables that control behavior:
- ENVIRONMENT: the deployment environment
- LOG_LEVEL: minimum level to record (DEBUG, INFO, WARNING, ...)
- LOG_STYLE: force a style (auto, console, json)

Logs go to standard error; standard output and the report files are left
to the commands.
"""

import logging
import logging.config
from typing import Any, Dict

from qgraph.config import settings
from qgraph.logging.formatter import JSONFormatter, LevelColorFormatter

ENVIRONMENT: str = settings.ENVIRONMENT.lower()
IS_LOCAL: bool = settings.IS_LOCAL
LOG_LEVEL: str = settings.LOG_LEVEL.upper()
LOG_STYLE: str = settings.LOG_STYLE.lower()
SERVICE_NAME: str = settings.SERVICE_NAME
SERVICE_VERSION: str = settings.VERSION


def _use_console(style: str) -> bool:
    if style == "auto":
        return IS_LOCAL
    return style == "console"


def build_logging_config(level: str = LOG_LEVEL, style: str = LOG_STYLE) -> Dict[str, Any]:
    """
    Build the dictConfig dictionary for the given level and style.

    Args:
        level: Root log level name
        style: One of auto, console, json

    Returns:
        A logging configuration dictionary
    """
    return {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "console": {
                "()": LevelColorFormatter,
                "format": "%(asctime)s [%(colored_levelname)s] %(message)s (%(shortpath)s:%(lineno)d)",
                "datefmt": "%H:%M:%S",
            },
            "json": {
                "()": JSONFormatter,
                "format": "%(message)s %(run_id)s",
            },
        },
        "handlers": {
            "stderr": {
                "class": "logging.StreamHandler",
                "formatter": "console" if _use_console(style) else "json",
                "level": level,
                "stream": "ext://sys.stderr",
            },
        },
        "root": {
            "handlers": ["stderr"],
            "level": level,
        },
    }


def configure_logging(level: str = LOG_LEVEL, style: str = LOG_STYLE) -> None:
    """
    Apply the logging configuration.

    Raises:
        ValueError: If an invalid log level is specified
    """
    try:
        logging.config.dictConfig(build_logging_config(level.upper(), style.lower()))
    except ValueError as e:
        if "Unknown level" in str(e):
            valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
            raise ValueError(
                f"Invalid log level '{level}'. Valid levels are: {', '.join(valid_levels)}"
            ) from e
        raise
