"""
Logging configuration for rw_integrals.

Values come from RW_LOG_* environment variables with the defaults below.
"""

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional


ENVIRONMENT_VARIABLES = {
    "RW_LOG_LEVEL": "level",
    "RW_LOG_DIR": "log_dir",
    "RW_LOG_MAX_FILE_SIZE_MB": "max_file_size_mb",
    "RW_LOG_BACKUP_COUNT": "backup_count",
    "RW_LOG_CONSOLE": "console_output",
    "RW_LOG_PERFORMANCE": "enable_performance_logging",
}


def _int_variable(environ: Mapping[str, str], name: str, default: int) -> int:
    if not environ.get(name):
        return default
    try:
        return int(environ[name])
    except ValueError:
        raise ValueError(f"{name} must be an integer, got '{environ[name]}'")


def _bool_variable(environ: Mapping[str, str], name: str, default: bool) -> bool:
    if not environ.get(name):
        return default
    return environ[name].strip().lower() in ("1", "true", "yes", "on")


@dataclass
class LoggingConfig:
    """Configuration class for the logging system."""

    level: str = "INFO"

    # File logging; no directory disables the file handler
    log_dir: Optional[str] = "logs"
    max_file_size_mb: int = 10
    backup_count: int = 5

    console_output: bool = True
    enable_performance_logging: bool = True

    @property
    def max_bytes(self) -> int:
        """Convert max file size from MB to bytes."""
        return self.max_file_size_mb * 1024 * 1024

    @classmethod
    def from_environment(cls, environ: Optional[Mapping[str, str]] = None) -> 'LoggingConfig':
        """Create configuration from RW_LOG_* variables; unset ones keep their defaults."""
        environ = os.environ if environ is None else environ
        defaults = cls()
        return cls(
            level=(environ.get("RW_LOG_LEVEL") or defaults.level).upper(),
            log_dir=environ.get("RW_LOG_DIR") or defaults.log_dir,
            max_file_size_mb=_int_variable(environ, "RW_LOG_MAX_FILE_SIZE_MB", defaults.max_file_size_mb),
            backup_count=_int_variable(environ, "RW_LOG_BACKUP_COUNT", defaults.backup_count),
            console_output=_bool_variable(environ, "RW_LOG_CONSOLE", defaults.console_output),
            enable_performance_logging=_bool_variable(environ, "RW_LOG_PERFORMANCE",
                                                      defaults.enable_performance_logging),
        )

    def validate(self) -> None:
        """Validate configuration values."""
        valid_levels = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
        if self.level not in valid_levels:
            raise ValueError(f"Invalid log level: {self.level}. Must be one of {valid_levels}")

        if self.max_file_size_mb <= 0:
            raise ValueError("Max file size must be positive")

        if self.backup_count < 0:
            raise ValueError("Backup count must be non-negative")

        if not self.log_dir:
            return
        try:
            Path(self.log_dir).mkdir(parents=True, exist_ok=True)
        except Exception as e:
            raise ValueError(f"Cannot create log directory '{self.log_dir}': {e}")

