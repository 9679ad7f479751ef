"""Data models for rw_integrals."""

from .problem import BasisIndex, IndexKind, LatticeReduction, ModularParam, ProblemConfig
from .results import ConnectionMatrix, Residual, complex_pair
from .exceptions import (
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

__all__ = [
    "BasisIndex",
    "IndexKind",
    "LatticeReduction",
    "ModularParam",
    "ProblemConfig",
    "ConnectionMatrix",
    "Residual",
    "complex_pair",
    "RWIntegralError",
    "ValidationError",
    "ParseError",
    "NonConvergence",
    "NearSingular",
    "BranchJump",
    "GeometryError",
    "QuadratureFailure",
    "InvalidParameterError",
    "CommandNotFoundError"
]
