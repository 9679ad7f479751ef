"""Error categorization, logging and exit-code selection for rw_integrals commands."""

import time
import traceback
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional

from .logging.logger import Logger, get_logger
from .models.exceptions import (
    RWIntegralError,
    ValidationError,
    ParseError,
    NonConvergence,
    NearSingular,
    BranchJump,
    GeometryError,
    QuadratureFailure,
    InvalidParameterError,
    CommandNotFoundError
)

EXIT_OK = 0
EXIT_CHECK_FAILURE = 1
EXIT_USAGE = 2


class ErrorSeverity(Enum):
    """Error severity levels for categorization."""
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"


@dataclass
class ErrorContext:
    """Context information for error handling."""
    command: str
    parameters: Dict[str, Any] = field(default_factory=dict)
    timestamp: float = field(default_factory=time.time)
    config_path: Optional[str] = None


def _empty_stats() -> Dict[str, Any]:
    return {
        "total_errors": 0,
        "errors_by_type": {},
        "errors_by_severity": {severity.value: 0 for severity in ErrorSeverity},
    }


class ErrorHandler:
    """Maps typed exceptions to severities, logs them and picks the process exit code."""

    def __init__(self, logger: Optional[Logger] = None):
        self.logger = logger or get_logger("rw_integrals.error_handler")
        self._error_categories: Dict[type, ErrorSeverity] = self._setup_error_categories()
        self._error_stats = _empty_stats()

    def _setup_error_categories(self) -> Dict[type, ErrorSeverity]:
        """Set up error severity categories."""
        return {
            ValidationError: ErrorSeverity.LOW,
            ParseError: ErrorSeverity.LOW,
            InvalidParameterError: ErrorSeverity.LOW,
            CommandNotFoundError: ErrorSeverity.LOW,
            GeometryError: ErrorSeverity.MEDIUM,
            NearSingular: ErrorSeverity.HIGH,
            BranchJump: ErrorSeverity.HIGH,
            QuadratureFailure: ErrorSeverity.HIGH,
            NonConvergence: ErrorSeverity.HIGH,
        }

    def get_error_severity(self, error: Exception) -> ErrorSeverity:
        """Severity of an error; subclasses inherit the category of their nearest base."""
        for error_type in type(error).__mro__:
            if error_type in self._error_categories:
                return self._error_categories[error_type]
        return ErrorSeverity.CRITICAL

    @staticmethod
    def exit_code(severity: ErrorSeverity) -> int:
        """2 for usage and configuration problems, 1 for numerical failures."""
        if severity in (ErrorSeverity.LOW, ErrorSeverity.MEDIUM):
            return EXIT_USAGE
        return EXIT_CHECK_FAILURE

    def handle_error(self, error: Exception, context: ErrorContext) -> Dict[str, Any]:
        """Record, log and convert an error into a structured response.

        Args:
            error: The exception that occurred
            context: Command context

        Returns:
            Dictionary with the error payload, severity and exit code
        """
        self._update_error_stats(error)
        self._log_error(error, context)
        return self._generate_error_response(error, context)

    def _log_error(self, error: Exception, context: ErrorContext) -> None:
        severity = self.get_error_severity(error)
        log_data = {
            "error_type": error.__class__.__name__,
            "error_message": str(error),
            "severity": severity.value,
            "command": context.command,
            "parameters": context.parameters,
            "config_path": context.config_path,
            "traceback": traceback.format_exc() if severity is ErrorSeverity.CRITICAL else None,
        }

        if severity == ErrorSeverity.CRITICAL:
            self.logger.critical("Unexpected error", error=log_data)
        elif severity == ErrorSeverity.HIGH:
            self.logger.error("Numerical failure", error=log_data)
        elif severity == ErrorSeverity.MEDIUM:
            self.logger.warning("Invalid cycle geometry", error=log_data)
        else:
            self.logger.info("Rejected input", error=log_data)

    def _generate_error_response(self, error: Exception, context: ErrorContext) -> Dict[str, Any]:
        if isinstance(error, RWIntegralError):
            error_dict = error.to_dict()
        else:
            error_dict = {
                "code": -32000,
                "message": str(error),
                "data": {
                    "type": error.__class__.__name__,
                    "details": {}
                }
            }

        severity = self.get_error_severity(error)
        error_dict["data"]["context"] = {
            "command": context.command,
            "config_path": context.config_path,
            "timestamp": context.timestamp
        }
        error_dict["data"]["severity"] = severity.value

        return {
            "error": error_dict,
            "severity": severity.value,
            "exit_code": self.exit_code(severity)
        }

    def create_context(self, command: str, parameters: Dict[str, Any],
                       config_path: Optional[str] = None) -> ErrorContext:
        return ErrorContext(command=command, parameters=parameters,
                            timestamp=time.time(), config_path=config_path)

    def _update_error_stats(self, error: Exception) -> None:
        self._error_stats["total_errors"] += 1
        error_type = error.__class__.__name__
        self._error_stats["errors_by_type"][error_type] = (
            self._error_stats["errors_by_type"].get(error_type, 0) + 1
        )
        severity = self.get_error_severity(error)
        self._error_stats["errors_by_severity"][severity.value] += 1

    def get_error_statistics(self) -> Dict[str, Any]:
        """Get error statistics for the run report."""
        stats = self._error_stats.copy()
        stats["errors_by_type"] = dict(stats["errors_by_type"])
        stats["errors_by_severity"] = dict(stats["errors_by_severity"])
        return stats

    def reset_error_statistics(self) -> None:
        """Reset error statistics counters."""
        self._error_stats = _empty_stats()
