"""Riemann-Wirtinger integrals on a product of elliptic curves.

Theta-function kernels, the twisted cohomology basis, the Gauss-Manin
connection matrices, a randomized identity suite and twisted-cycle quadrature.
"""

from .error_handler import ErrorContext, ErrorHandler, ErrorSeverity
from .logging import Logger, configure_logging, get_logger

__version__ = "0.1.0"
__all__ = [
    "ErrorHandler",
    "ErrorContext",
    "ErrorSeverity",
    "Logger",
    "get_logger",
    "configure_logging",
]
