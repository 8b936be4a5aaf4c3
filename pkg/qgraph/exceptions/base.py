"""
Base exception classes for qgraph.

Every error raised by the toolkit derives from QGraphError and carries the
process exit code the CLI returns for it: 2 for configuration problems, 1 for
failed computations and identity checks.
"""

from typing import Any, Dict, List, Optional
from pydantic import BaseModel, Field
import uuid
import traceback
import sys
from datetime import datetime, timezone


class ErrorDetail(BaseModel):
    """
    One entry of an error's details list.

    Attributes:
        loc: Location of the error (e.g., ["boundary", "params", "mu"])
        msg: Human-readable error message
        type: Error type identifier
    """

    loc: Optional[List[str]] = None
    msg: str
    type: str


class ErrorResponse(BaseModel):
    """
    Serialized form of an error, written to reports and stderr.
    """

    exit_code: int
    error_id: str = Field(default_factory=lambda: str(uuid.uuid4()))
    message: str
    details: Optional[List[ErrorDetail]] = None
    timestamp: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    error_type: str = "error"


class QGraphError(Exception):
    """
    Base exception class for all qgraph errors.

    Attributes:
        message: Human-readable error message
        exit_code: Process exit code the CLI maps this error to
        details: Detailed error information
        error_id: Unique identifier for the error instance
        error_type: Type of error for categorization
        timestamp: When the error occurred
    """

    exit_code = 1
    error_type = "qgraph_error"

    def __init__(
        self,
        message: str = "An unexpected error occurred",
        exit_code: Optional[int] = None,
        details: Optional[List[Dict[str, Any]]] = None,
        error_id: Optional[str] = None,
    ):
        self.message = message
        if exit_code is not None:
            self.exit_code = exit_code
        self.details = details
        self.error_id = error_id or str(uuid.uuid4())
        self.timestamp = datetime.now(timezone.utc)
        self.traceback = traceback.extract_tb(sys.exc_info()[2]) if sys.exc_info()[2] else None
        super().__init__(self.message)

    def to_dict(self) -> Dict[str, Any]:
        """
        Plain-dict form of the error, as logged and written to stderr reports.
        """
        error_dict = {
            "error_id": self.error_id,
            "message": self.message,
            "exit_code": self.exit_code,
            "error_type": self.error_type,
            "timestamp": self.timestamp.isoformat(),
        }
        if self.details:
            error_dict["details"] = self.details
        return error_dict

    def to_response(self) -> ErrorResponse:
        details = None
        if self.details:
            details = [
                ErrorDetail(
                    loc=[str(part) for part in detail["loc"]] if detail.get("loc") else None,
                    msg=detail.get("msg", ""),
                    type=detail.get("type", self.error_type),
                )
                for detail in self.details
            ]
        return ErrorResponse(
            exit_code=self.exit_code,
            error_id=self.error_id,
            message=self.message,
            details=details,
            timestamp=self.timestamp,
            error_type=self.error_type,
        )

    @classmethod
    def from_exception(cls, exc: Exception, message: Optional[str] = None) -> "QGraphError":
        """
        Wrap a foreign exception.

        Args:
            exc: The source exception
            message: Optional custom message to use

        Returns:
            A new instance of this class
        """
        if isinstance(exc, QGraphError):
            return exc
        return cls(
            message=message or str(exc),
            details=[{"type": exc.__class__.__name__, "msg": str(exc)}],
        )


class ConfigurationError(QGraphError):
    """Invalid input documents or job parameters."""

    exit_code = 2
    error_type = "configuration_error"


class ComputationError(QGraphError):
    """A numerical operation could not produce a trustworthy result."""

    exit_code = 1
    error_type = "computation_error"
