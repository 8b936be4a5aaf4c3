"""
Exception handling utilities.

Formatting and capturing of errors, plus a context manager that attaches
job context (command, graph file, identity) to anything raised inside it.
"""

import traceback
from contextvars import ContextVar
from typing import Any, Dict, Optional

from qgraph.exceptions.base import QGraphError
from qgraph.logging.context import get_logger

logger = get_logger("exceptions.utils", metadata={"component": "exception_utils"})

error_context_var: ContextVar[Dict[str, Any]] = ContextVar("error_context", default={})


def format_exception(exc: BaseException) -> Dict[str, Any]:
    """
    Format an exception into a standardized dictionary.

    Args:
        exc: The exception to format

    Returns:
        A dictionary with the exception type, message, frames and, for
        QGraphError, its id, exit code and details
    """
    tb = traceback.extract_tb(exc.__traceback__) if exc.__traceback__ else []
    result: Dict[str, Any] = {
        "exception_type": exc.__class__.__name__,
        "message": str(exc),
        "traceback_frames": [
            {"filename": frame.filename, "lineno": frame.lineno, "name": frame.name}
            for frame in tb
        ],
    }
    if isinstance(exc, QGraphError):
        result.update(
            {
                "error_id": exc.error_id,
                "exit_code": exc.exit_code,
                "error_type": exc.error_type,
                "details": exc.details,
            }
        )
    context = error_context_var.get()
    if context:
        result["context"] = context
    return result


def capture_exception(
    exc: BaseException,
    reraise: bool = True,
    message: Optional[str] = None,
    log_level: str = "error",
) -> Dict[str, Any]:
    """
    Log an exception with its formatted data and optionally re-raise it.

    Returns:
        The formatted exception data

    Raises:
        The original exception if reraise is True
    """
    exc_data = format_exception(exc)
    getattr(logger, log_level)(
        message or f"Exception captured: {exc}",
        metadata={"error_type": exc_data.get("error_type", exc_data["exception_type"]),
                  "error_id": exc_data.get("error_id")},
    )
    if reraise:
        raise exc
    return exc_data


class error_context:
    """
    Context manager for adding context to exceptions.

    Example:
        ```python
        with error_context(command="spectrum", config="star.json"):
            run_spectrum(job)
        ```
    """

    def __init__(self, **kwargs):
        self.context = kwargs
        self.token = None

    def __enter__(self):
        current = error_context_var.get()
        self.token = error_context_var.set({**current, **self.context})
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if exc_val is not None and isinstance(exc_val, QGraphError) and not hasattr(exc_val, "context"):
            exc_val.context = dict(error_context_var.get())
        if self.token:
            error_context_var.reset(self.token)
        return False


def exit_code_for(exc: BaseException) -> int:
    """Exit code the CLI reports for an exception."""
    if isinstance(exc, QGraphError):
        return exc.exit_code
    return 1
