"""Result models produced by the numerical modules."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .exceptions import ValidationError
from .problem import BasisIndex


def complex_pair(value: complex) -> List[float]:
    """Serialize a complex number as an [re, im] pair."""
    value = complex(value)
    return [float(value.real), float(value.imag)]


@dataclass
class Residual:
    """Named check result: identity id, sample point and scaled |LHS - RHS|."""

    check_id: str
    residual: float
    tolerance: float
    sample: Dict[str, Any] = field(default_factory=dict)
    component: Optional[str] = None

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual)) and self.residual < self.tolerance

    def to_dict(self) -> dict:
        """Convert the residual to a JSON-ready dictionary."""
        sample = {
            key: complex_pair(value) if isinstance(value, (complex, np.complexfloating)) else value
            for key, value in self.sample.items()
        }
        data = {
            "id": self.check_id,
            "residual": float(self.residual),
            "tolerance": float(self.tolerance),
            "passed": self.passed,
            "sample": sample,
        }
        if self.component is not None:
            data["component"] = self.component
        return data


@dataclass
class ConnectionMatrix:
    """Matrix A_kp(t) of the system d_kp F = A_kp F, in basis index order."""

    deriv: Tuple[int, int]
    entries: np.ndarray
    legend: List[BasisIndex]
    at: Dict[str, List[complex]] = field(default_factory=dict)

    def __post_init__(self):
        """Validate the shape and finiteness of the entries."""
        self.entries = np.asarray(self.entries, dtype=complex)
        size = len(self.legend)
        if self.entries.shape != (size, size):
            raise ValidationError(
                f"Connection matrix shape {self.entries.shape} does not match legend size {size}",
                field="entries",
            )
        if not np.all(np.isfinite(self.entries)):
            raise ValidationError("Connection matrix has non-finite entries", field="entries")
        k, p = self.deriv
        if k not in (1, 2) or p < 1:
            raise ValidationError(f"Invalid derivative ({k}, {p})", field="deriv")

    @property
    def size(self) -> int:
        return len(self.legend)

    def to_dict(self) -> dict:
        """Row-major JSON form with [re, im] entries and the basis legend."""
        k, p = self.deriv
        return {
            "deriv": {"k": k, "p": p},
            "size": self.size,
            "legend": [index.to_dict() for index in self.legend],
            "entries": [[complex_pair(z) for z in row] for row in self.entries],
            "at": {key: [complex_pair(z) for z in values] for key, values in self.at.items()},
        }
