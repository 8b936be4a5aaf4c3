"""
Configuration error classes for job and input documents.
"""

from typing import Any, Dict, List, Optional

from pydantic import ValidationError as PydanticValidationError

from qgraph.exceptions.base import ConfigurationError


class ConfigParseError(ConfigurationError):
    """
    Raised when a configuration document cannot be parsed or validated.

    The message names the offending key so the user can fix the file.
    """

    error_type = "config_parse_error"

    def __init__(
        self,
        message: str = "Configuration is invalid",
        key: Optional[str] = None,
        details: Optional[List[Dict[str, Any]]] = None,
        **kwargs,
    ):
        self.key = key
        if key and key not in message:
            message = f"{message} (key '{key}')"
        if not details:
            details = [{"type": self.error_type, "msg": message}]
            if key:
                details[0]["loc"] = key.split(".")
        super().__init__(message=message, details=details, **kwargs)

    @classmethod
    def from_validation_error(
        cls, error: PydanticValidationError, message: Optional[str] = None
    ) -> "ConfigParseError":
        """
        Create a ConfigParseError from a pydantic ValidationError.

        Args:
            error: The pydantic ValidationError
            message: Optional custom message to use

        Returns:
            A new ConfigParseError whose key is the first failing location
        """
        details = [
            {
                "loc": [str(loc) for loc in err["loc"]],
                "msg": err["msg"],
                "type": err["type"],
            }
            for err in error.errors()
        ]
        key = ".".join(details[0]["loc"]) if details and details[0]["loc"] else None
        error_message = message or (
            f"Invalid configuration at '{key}': {details[0]['msg']}" if key else "Invalid configuration"
        )
        return cls(message=error_message, key=key, details=details)


class MissingInputFile(ConfigurationError):
    """Raised when a referenced input file does not exist."""

    error_type = "missing_input_file"

    def __init__(self, path: str = "", **kwargs):
        self.path = path
        message = f"Input file not found: {path}"
        super().__init__(message=message, details=[{"type": self.error_type, "msg": message}], **kwargs)
