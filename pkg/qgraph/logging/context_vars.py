"""
Context variables for run tracking.

A single CLI invocation or library job is one "run"; the run id and any
run-scoped metadata set here are attached to every log record.
"""

from contextvars import ContextVar
from typing import Dict, Any, Optional

run_id_var: ContextVar[Optional[str]] = ContextVar("run_id", default=None)
metadata_var: ContextVar[Dict[str, Any]] = ContextVar("metadata", default={})


def set_run_id(run_id: str) -> None:
    """Set the run ID for the current execution context."""
    run_id_var.set(run_id)


def get_run_id() -> Optional[str]:
    """Get the run ID for the current execution context."""
    return run_id_var.get()


def add_metadata(**kwargs: Any) -> None:
    """
    Merge key/value pairs into the current context's metadata.

    Args:
        **kwargs: Key-value pairs to add to the metadata
    """
    meta = metadata_var.get().copy()
    meta.update(kwargs)
    metadata_var.set(meta)


def get_metadata() -> Dict[str, Any]:
    """Get the metadata for the current execution context."""
    return metadata_var.get().copy()


def clear_metadata() -> None:
    metadata_var.set({})
