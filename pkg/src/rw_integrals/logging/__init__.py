"""
Logging module for rw_integrals.

Structured JSON logging with rotation and timing metrics.
"""

from .config import LoggingConfig
from .logger import Logger, get_logger, configure_logging

__all__ = ['Logger', 'LoggingConfig', 'get_logger', 'configure_logging']
