"""Problem data models: modular parameter, lattice reduction, basis indices and configuration."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Tuple, Union

from .exceptions import ValidationError


def _as_complex(value, name: str) -> complex:
    try:
        return complex(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a complex number, got {value!r}", field=name)


@dataclass(frozen=True)
class ModularParam:
    """The modular parameter tau of the elliptic curve C / (Z + Z tau)."""

    tau: complex

    def __post_init__(self):
        """Validate tau after initialization."""
        object.__setattr__(self, "tau", _as_complex(self.tau, "tau"))
        self.validate()

    def validate(self) -> None:
        """Check that tau lies in the upper half plane."""
        if not self.tau.imag > 0:
            raise ValidationError(
                f"tau must have strictly positive imaginary part, got {self.tau}", field="tau"
            )

    @classmethod
    def coerce(cls, value: Union["ModularParam", complex]) -> "ModularParam":
        """Accept either a ModularParam or a bare complex number."""
        if isinstance(value, ModularParam):
            return value
        return cls(value)


@dataclass(frozen=True)
class LatticeReduction:
    """Decomposition u = u0 + l + m*tau with u0 in the fundamental cell."""

    u0: complex
    l: int
    m: int

    def reconstruct(self, tau: Union[ModularParam, complex]) -> complex:
        """Return u0 + l + m*tau."""
        return self.u0 + self.l + self.m * ModularParam.coerce(tau).tau


class IndexKind(Enum):
    """The four families of basis 2-forms."""
    POINT = "point"
    ROW_PM = "row_pm"
    COL_PM = "col_pm"
    CORNER = "corner"


@dataclass(frozen=True)
class BasisIndex:
    """One element of the index set of basis forms.

    POINT(i, j) is psi_ij, ROW_PM(i, sign) is psi_{i+-}, COL_PM(sign, j) is psi_{+-j}
    and CORNER(m) is psi_{+-,m}. Signs are stored as +1 / -1.
    """

    kind: IndexKind
    i: Optional[int] = None
    j: Optional[int] = None
    sign: Optional[int] = None
    m: Optional[int] = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """Check that exactly the fields of the family are populated."""
        if self.kind is IndexKind.POINT:
            ok = self.i is not None and self.j is not None and self.sign is None and self.m is None
        elif self.kind is IndexKind.ROW_PM:
            ok = self.i is not None and self.sign in (1, -1) and self.j is None and self.m is None
        elif self.kind is IndexKind.COL_PM:
            ok = self.j is not None and self.sign in (1, -1) and self.i is None and self.m is None
        else:
            ok = self.m in (1, 2, 3, 4) and self.i is None and self.j is None and self.sign is None
        if not ok:
            raise ValidationError(f"Malformed basis index {self!r}", field="kind")
        for name in ("i", "j"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ValidationError(f"Basis index {name} must be >= 1", field=name)

    @classmethod
    def point(cls, i: int, j: int) -> "BasisIndex":
        return cls(IndexKind.POINT, i=i, j=j)

    @classmethod
    def row_pm(cls, i: int, sign: int) -> "BasisIndex":
        return cls(IndexKind.ROW_PM, i=i, sign=sign)

    @classmethod
    def col_pm(cls, sign: int, j: int) -> "BasisIndex":
        return cls(IndexKind.COL_PM, j=j, sign=sign)

    @classmethod
    def corner(cls, m: int) -> "BasisIndex":
        return cls(IndexKind.CORNER, m=m)

    @property
    def label(self) -> str:
        """Short label used in matrix legends, e.g. '1,2', '1,+', '-,2', '+-,3'."""
        sign = {1: "+", -1: "-"}.get(self.sign, "")
        if self.kind is IndexKind.POINT:
            return f"{self.i},{self.j}"
        if self.kind is IndexKind.ROW_PM:
            return f"{self.i},{sign}"
        if self.kind is IndexKind.COL_PM:
            return f"{sign},{self.j}"
        return f"+-,{self.m}"

    def to_dict(self) -> dict:
        """Convert the index to a dictionary for JSON legends."""
        data = {"kind": self.kind.value, "label": self.label}
        for name in ("i", "j", "sign", "m"):
            value = getattr(self, name)
            if value is not None:
                data[name] = value
        return data


def _as_complex_tuple(values: Iterable, name: str) -> Tuple[complex, ...]:
    if isinstance(values, (str, bytes)):
        raise ValidationError(f"{name} must be a list of complex numbers", field=name)
    try:
        items = list(values)
    except TypeError:
        raise ValidationError(f"{name} must be a list of complex numbers", field=name)
    return tuple(_as_complex(v, name) for v in items)


@dataclass(frozen=True)
class ProblemConfig:
    """Full problem data: tau, marked points, exponents and the constants c_{k,inf}.

    The lambdas are not stored; they are derived from c_{k,inf} so that they co-vary with
    the marked points (see config.derive_lambda).
    """

    tau: ModularParam
    t1: Tuple[complex, ...]
    t2: Tuple[complex, ...]
    c: complex
    c10: complex
    c20: complex
    c1: Tuple[complex, ...]
    c2: Tuple[complex, ...]
    c1_inf: complex
    c2_inf: complex
    name: str = field(default="", compare=False)

    def __post_init__(self):
        """Normalize numeric fields and check the structural shape."""
        object.__setattr__(self, "tau", ModularParam.coerce(self.tau))
        for attr in ("t1", "t2", "c1", "c2"):
            object.__setattr__(self, attr, _as_complex_tuple(getattr(self, attr), attr))
        for attr in ("c", "c10", "c20", "c1_inf", "c2_inf"):
            object.__setattr__(self, attr, _as_complex(getattr(self, attr), attr))

        if len(self.t1) < 1:
            raise ValidationError("t1 must contain at least one point", field="t1")
        if len(self.t2) < 1:
            raise ValidationError("t2 must contain at least one point", field="t2")
        if len(self.c1) != len(self.t1):
            raise ValidationError(
                f"c1 has {len(self.c1)} entries but t1 has {len(self.t1)}", field="c1"
            )
        if len(self.c2) != len(self.t2):
            raise ValidationError(
                f"c2 has {len(self.c2)} entries but t2 has {len(self.t2)}", field="c2"
            )

    @property
    def n1(self) -> int:
        return len(self.t1)

    @property
    def n2(self) -> int:
        return len(self.t2)

    @property
    def tau_value(self) -> complex:
        return self.tau.tau

    def points(self, k: int) -> Tuple[complex, ...]:
        """Marked points of variable k (1 or 2)."""
        return self.t1 if k == 1 else self.t2

    def exponents(self, k: int) -> Tuple[complex, ...]:
        """Exponents c_{kj} of variable k (1 or 2)."""
        return self.c1 if k == 1 else self.c2

    def c_inf(self, k: int) -> complex:
        return self.c1_inf if k == 1 else self.c2_inf

    def c0(self, k: int) -> complex:
        return self.c10 if k == 1 else self.c20
