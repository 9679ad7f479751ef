"""
Structured JSON logging with rotation and timing metrics.

Every record is one JSON object. Numerical modules log at debug level (series term counts,
refinement levels, sampler rejections); commands log check results and timings.
"""

import json
import logging
import logging.handlers
import sys
import time
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional

LOG_FILE_NAME = "rw_integrals.log"

_RESERVED_ATTRS = {
    'name', 'msg', 'args', 'levelname', 'levelno', 'pathname', 'filename',
    'module', 'exc_info', 'exc_text', 'stack_info', 'lineno', 'funcName',
    'created', 'msecs', 'relativeCreated', 'thread', 'threadName',
    'processName', 'process', 'getMessage', 'taskName', 'message', 'asctime'
}


class JSONFormatter(logging.Formatter):
    """Custom formatter that outputs structured JSON log entries."""

    def format(self, record: logging.LogRecord) -> str:
        """Format log record as structured JSON."""
        log_entry = {
            "timestamp": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
            "thread": record.thread,
            "thread_name": record.threadName,
        }

        if record.exc_info and record.exc_info != (None, None, None):
            exc_type, exc_value, exc_traceback = record.exc_info
            log_entry["exception"] = {
                "type": exc_type.__name__ if exc_type else None,
                "message": str(exc_value) if exc_value else None,
                "traceback": self.formatException(record.exc_info) if exc_traceback else None
            }

        extra_fields = {
            key: value for key, value in record.__dict__.items() if key not in _RESERVED_ATTRS
        }
        if extra_fields:
            log_entry["extra"] = extra_fields

        return json.dumps(log_entry, default=str, ensure_ascii=False)


class PerformanceLogger:
    """Logger for timing and resource metrics; silent while `enabled` is False."""

    enabled = True

    def __init__(self, logger: logging.Logger):
        self.logger = logger

    def log_operation_timing(self, operation: str, duration: float, success: bool = True, **kwargs):
        """Log how long an operation took."""
        if not self.enabled:
            return
        self.logger.info(
            f"Operation completed: {operation}",
            extra={
                "performance": {
                    "operation": operation,
                    "duration_ms": round(duration * 1000, 2),
                    "success": success,
                    **kwargs
                }
            }
        )

    def log_resource_usage(self, memory_mb: float, cpu_percent: float = None):
        """Log resource usage metrics."""
        if not self.enabled:
            return
        metrics = {
            "memory_mb": round(memory_mb, 2),
            "type": "resource_usage"
        }
        if cpu_percent is not None:
            metrics["cpu_percent"] = round(cpu_percent, 2)

        self.logger.info("Resource usage metrics", extra={"performance": metrics})


class Logger:
    """Logger wrapper with structured extras and domain helpers."""

    def __init__(self, name: str, logger: logging.Logger):
        self.name = name
        self._logger = logger
        self.performance = PerformanceLogger(logger)

    def debug(self, message: str, **kwargs):
        self._logger.debug(message, extra=kwargs, stacklevel=2)

    def info(self, message: str, **kwargs):
        self._logger.info(message, extra=kwargs, stacklevel=2)

    def warning(self, message: str, **kwargs):
        self._logger.warning(message, extra=kwargs, stacklevel=2)

    def error(self, message: str, exc_info: bool = False, **kwargs):
        self._logger.error(message, exc_info=exc_info, extra=kwargs, stacklevel=2)

    def critical(self, message: str, exc_info: bool = False, **kwargs):
        self._logger.critical(message, exc_info=exc_info, extra=kwargs, stacklevel=2)

    def is_debug(self) -> bool:
        return self._logger.isEnabledFor(logging.DEBUG)

    def log_command(self, command: str, parameters: Dict[str, Any]):
        """Log the start of a CLI command."""
        self._logger.info(
            f"Command started: {command}",
            extra={"command": {"name": command, "parameters": parameters, "type": "start"}},
            stacklevel=2,
        )

    def log_check_result(self, check_id: str, residual: float, tolerance: float,
                         passed: bool, **kwargs):
        """Log one check outcome; failures go out at error level."""
        check_data = {
            "id": check_id,
            "residual": residual,
            "tolerance": tolerance,
            "passed": passed,
            **kwargs
        }
        if passed:
            self._logger.info(f"Check passed: {check_id}", extra={"check": check_data}, stacklevel=2)
        else:
            self._logger.error(f"Check failed: {check_id}", extra={"check": check_data}, stacklevel=2)

    def log_refinement(self, contour: str, level: int, reason: str, **kwargs):
        """Log a quadrature or branch-tracking refinement step."""
        self._logger.debug(
            f"Refining {contour} to level {level}",
            extra={"refinement": {"contour": contour, "level": level, "reason": reason, **kwargs}},
            stacklevel=2,
        )

    @contextmanager
    def time_operation(self, operation_name: str, log_success: bool = True):
        """Context manager to time operations and log performance."""
        start_time = time.perf_counter()
        success = True
        exception = None

        try:
            yield
        except Exception as e:
            success = False
            exception = e
            raise
        finally:
            duration = time.perf_counter() - start_time
            if success and log_success:
                self.performance.log_operation_timing(operation_name, duration, success=True)
            elif not success:
                self.performance.log_operation_timing(
                    operation_name,
                    duration,
                    success=False,
                    error=str(exception) if exception else "Unknown error"
                )


def configure_logging(
    log_level: str = "INFO",
    log_dir: Optional[str] = "logs",
    max_bytes: int = 10 * 1024 * 1024,  # 10MB
    backup_count: int = 5,
    console_output: bool = True,
    performance_logging: bool = True
) -> None:
    """
    Configure the logging system with structured JSON output and rotation.

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_dir: Directory for log files; None disables the file handler
        max_bytes: Maximum size of each log file before rotation
        backup_count: Number of backup files to keep
        console_output: Whether to also log to stderr
        performance_logging: Whether timing and resource lines are written
    """
    PerformanceLogger.enabled = performance_logging
    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, log_level.upper()))
    root_logger.handlers.clear()

    json_formatter = JSONFormatter()

    if log_dir:
        log_path = Path(log_dir)
        log_path.mkdir(parents=True, exist_ok=True)
        file_handler = logging.handlers.RotatingFileHandler(
            filename=log_path / LOG_FILE_NAME,
            maxBytes=max_bytes,
            backupCount=backup_count,
            encoding='utf-8'
        )
        file_handler.setFormatter(json_formatter)
        root_logger.addHandler(file_handler)

    # stdout carries command results
    if console_output:
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setFormatter(json_formatter)
        root_logger.addHandler(console_handler)

    logging.getLogger("rw_integrals").propagate = True


def get_logger(name: str) -> Logger:
    """
    Get a logger instance with the specified name.

    Args:
        name: Logger name (typically __name__)

    Returns:
        Logger instance with structured output capabilities
    """
    return Logger(name, logging.getLogger(name))
