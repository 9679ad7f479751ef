"""
Problem configuration: validation of the standing assumptions, the derived lambdas,
basis index ordering and problem-file I/O.

lambda_k is never stored. It is recomputed from the constants c_{k,inf},

    lambda_k = -c_{k,inf} - c_{k0} tau - sum_j c_{kj} t_{kj},

so every configuration rebuilt with a moved marked point carries the co-varying lambda.
"""

import hashlib
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from .elliptic_kernel import distance_to_lattice
from .logging.logger import get_logger
from .models.exceptions import ParseError, ValidationError
from .models.problem import BasisIndex, ModularParam, ProblemConfig
from .models.results import complex_pair

logger = get_logger(__name__)

DISTANCE_THRESHOLD = 1e-8
SUM_TOLERANCE = 1e-12

PROBLEM_KEYS = ("tau", "t1", "t2", "c", "c10", "c20", "c1", "c2", "c1_inf", "c2_inf")


class PeriodShift(Enum):
    """The four fundamental period shifts of (u1, u2)."""
    U1_ONE = "u1+1"
    U1_TAU = "u1+tau"
    U2_ONE = "u2+1"
    U2_TAU = "u2+tau"

    @property
    def variable(self) -> int:
        return 1 if self in (PeriodShift.U1_ONE, PeriodShift.U1_TAU) else 2

    @property
    def is_tau(self) -> bool:
        return self in (PeriodShift.U1_TAU, PeriodShift.U2_TAU)

    def offsets(self, tau: complex) -> Tuple[complex, complex]:
        """(delta_u1, delta_u2) of the shift."""
        step = tau if self.is_tau else 1.0
        return (step, 0j) if self.variable == 1 else (0j, step)


@dataclass
class Violation:
    """One failed standing assumption of a configuration."""

    condition: str
    message: str
    values: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "message": self.message,
            "values": {
                key: complex_pair(value) if isinstance(value, complex) else value
                for key, value in self.values.items()
            },
        }


def derive_lambda(cfg: ProblemConfig) -> Tuple[complex, complex]:
    """lambda_k = -c_{k,inf} - c_{k0} tau - sum_j c_{kj} t_{kj} for k = 1, 2."""
    tau = cfg.tau_value
    lam1 = -cfg.c1_inf - cfg.c10 * tau - sum(c * t for c, t in zip(cfg.c1, cfg.t1))
    lam2 = -cfg.c2_inf - cfg.c20 * tau - sum(c * t for c, t in zip(cfg.c2, cfg.t2))
    return complex(lam1), complex(lam2)


def half_periods(tau: Union[ModularParam, complex]) -> Tuple[complex, complex, complex, complex]:
    """w_1 = 0, w_2 = 1/2, w_3 = tau/2, w_4 = (1 + tau)/2."""
    t = ModularParam.coerce(tau).tau
    return 0j, 0.5 + 0j, t / 2, (1 + t) / 2


def varpi(m: int) -> complex:
    """rho(w_m): 0 for m = 1, 2 and -pi i for m = 3, 4."""
    if m not in (1, 2, 3, 4):
        raise ValidationError(f"Corner index must be 1..4, got {m}", field="m")
    return 0j if m in (1, 2) else -1j * np.pi


def _distance_to_integers(z: complex) -> float:
    return abs(z - round(z.real))


def validate(cfg: ProblemConfig) -> List[Violation]:
    """Check every standing assumption; violations are returned, not raised."""
    violations: List[Violation] = []
    tau = cfg.tau_value

    labelled = [(f"t1[{i + 1}]", t) for i, t in enumerate(cfg.t1)]
    labelled += [(f"t2[{j + 1}]", t) for j, t in enumerate(cfg.t2)]
    for a in range(len(labelled)):
        for b in range(a + 1, len(labelled)):
            (name_a, t_a), (name_b, t_b) = labelled[a], labelled[b]
            if distance_to_lattice(t_a - t_b, tau) <= DISTANCE_THRESHOLD:
                violations.append(Violation(
                    "distinct_points",
                    f"{name_a} and {name_b} represent the same point of E",
                    {name_a: t_a, name_b: t_b},
                ))

    for i, t1 in enumerate(cfg.t1):
        for j, t2 in enumerate(cfg.t2):
            if distance_to_lattice(t1 + t2, tau) <= DISTANCE_THRESHOLD:
                violations.append(Violation(
                    "antipodal_points",
                    f"t1[{i + 1}] + t2[{j + 1}] lies in the lattice",
                    {f"t1[{i + 1}]": t1, f"t2[{j + 1}]": t2},
                ))

    for name, t in labelled:
        if distance_to_lattice(2 * t, tau) <= DISTANCE_THRESHOLD:
            violations.append(Violation(
                "half_period_point",
                f"{name} is a half period (it lies on H+ and H-)",
                {name: t},
            ))

    for k, exponents in ((1, cfg.c1), (2, cfg.c2)):
        total = 2 * cfg.c + sum(exponents)
        if abs(total) > SUM_TOLERANCE:
            violations.append(Violation(
                "sum_condition",
                f"sum condition fails for variable {k}: 2c + sum c{k}j = {total}",
                {"sum": complex(total)},
            ))

    named_exponents = [("c", cfg.c)]
    named_exponents += [(f"c1[{i + 1}]", c) for i, c in enumerate(cfg.c1)]
    named_exponents += [(f"c2[{j + 1}]", c) for j, c in enumerate(cfg.c2)]
    for name, value in named_exponents:
        if _distance_to_integers(value) <= DISTANCE_THRESHOLD:
            violations.append(Violation(
                "exponent_integer",
                f"exponent {name} = {value} is an integer",
                {name: value},
            ))

    lam1, lam2 = derive_lambda(cfg)
    for name, value in (("lambda1", lam1), ("lambda2", lam2),
                        ("lambda1+lambda2", lam1 + lam2), ("lambda1-lambda2", lam1 - lam2)):
        if distance_to_lattice(value, tau) <= DISTANCE_THRESHOLD:
            violations.append(Violation(
                "lambda_lattice",
                f"{name} = {value} lies in the lattice",
                {name: value},
            ))

    if violations:
        logger.debug("Configuration has violations", count=len(violations))
    return violations


def psi_index_set(cfg: ProblemConfig) -> List[BasisIndex]:
    """Points (i, j) lexicographically, then (i, +), (i, -) by i, then (+, j), (-, j) by j, then corners."""
    indices = [BasisIndex.point(i, j) for i in range(1, cfg.n1 + 1) for j in range(1, cfg.n2 + 1)]
    for i in range(1, cfg.n1 + 1):
        indices += [BasisIndex.row_pm(i, 1), BasisIndex.row_pm(i, -1)]
    for j in range(1, cfg.n2 + 1):
        indices += [BasisIndex.col_pm(1, j), BasisIndex.col_pm(-1, j)]
    indices += [BasisIndex.corner(m) for m in range(1, 5)]
    return indices


def euler_characteristic(n1: int, n2: int) -> int:
    """chi(M) = n1 n2 + 2 n1 + 2 n2 + 4."""
    if n1 < 1 or n2 < 1:
        raise ValidationError(f"n1 and n2 must be >= 1, got ({n1}, {n2})", field="n1")
    return n1 * n2 + 2 * n1 + 2 * n2 + 4


def count_intersection_points(n1: int, n2: int) -> int:
    """Pairwise intersections of the elliptic hyperplanes; H+ and H- meet in four points."""
    point_pairs = n1 * n2
    row_pairs = 2 * n1
    column_pairs = 2 * n2
    corner_points = len(half_periods(1j))
    return point_pairs + row_pairs + column_pairs + corner_points


def with_point(cfg: ProblemConfig, k: int, p: int, value: complex) -> ProblemConfig:
    """Copy of cfg with t_{kp} moved to value and c_{k,inf} held fixed."""
    points = list(cfg.points(k))
    points[p - 1] = complex(value)
    return replace(cfg, **{f"t{k}": tuple(points)})


def shift_point(cfg: ProblemConfig, k: int, p: int, delta: complex) -> ProblemConfig:
    """Copy of cfg with t_{kp} moved by delta (lambda_k co-varies)."""
    return with_point(cfg, k, p, cfg.points(k)[p - 1] + delta)


def dual(cfg: ProblemConfig) -> ProblemConfig:
    """Configuration whose derived lambda is -lambda: c_{k,inf} -> c_{k,inf} + 2 lambda_k."""
    lam1, lam2 = derive_lambda(cfg)
    return replace(cfg, c1_inf=cfg.c1_inf + 2 * lam1, c2_inf=cfg.c2_inf + 2 * lam2)


def reciprocal(cfg: ProblemConfig) -> ProblemConfig:
    """Configuration of 1/T: every exponent and both c_{k,inf} negated, so lambda -> -lambda."""
    return replace(
        cfg,
        c=-cfg.c, c10=-cfg.c10, c20=-cfg.c20,
        c1=tuple(-c for c in cfg.c1), c2=tuple(-c for c in cfg.c2),
        c1_inf=-cfg.c1_inf, c2_inf=-cfg.c2_inf,
    )


def swapped(cfg: ProblemConfig) -> ProblemConfig:
    """Exchange the roles of u1 and u2: t1 <-> t2, c1 <-> c2, c10 <-> c20, c1_inf <-> c2_inf."""
    return replace(
        cfg,
        t1=cfg.t2, t2=cfg.t1,
        c1=cfg.c2, c2=cfg.c1,
        c10=cfg.c20, c20=cfg.c10,
        c1_inf=cfg.c2_inf, c2_inf=cfg.c1_inf,
    )


def period_multiplier(cfg: ProblemConfig, shift: PeriodShift) -> complex:
    """Multiplier of T under one of the four fundamental period shifts."""
    if shift is PeriodShift.U1_ONE:
        exponent = cfg.c10
    elif shift is PeriodShift.U1_TAU:
        exponent = -cfg.c1_inf
    elif shift is PeriodShift.U2_ONE:
        exponent = cfg.c20 - cfg.c
    else:
        exponent = -(cfg.c2_inf - cfg.c)
    return complex(np.exp(2j * np.pi * exponent))


def _random_complex_away_from_integers(rng: np.random.Generator, real_span: float,
                                       imag_span: float, margin: float) -> complex:
    while True:
        z = complex(rng.uniform(-real_span, real_span), rng.uniform(-imag_span, imag_span))
        if _distance_to_integers(z) > margin:
            return z


def _random_points(rng: np.random.Generator, count: int, tau: complex, low: float, high: float,
                   margin: float) -> List[complex]:
    points: List[complex] = []
    while len(points) < count:
        x, y = rng.uniform(low, high, size=2)
        candidate = complex(x + y * tau)
        if all(distance_to_lattice(candidate - p, tau) > margin for p in points):
            points.append(candidate)
    return points


def random_config(rng: np.random.Generator, n1: int, n2: int, placement: str = "generic",
                  tau: Optional[complex] = None, margin: float = 0.05) -> ProblemConfig:
    """Seeded random configuration satisfying every standing assumption.

    placement "generic" puts the marked points anywhere in the cell; "separated" puts
    t1 well inside E00 = (0, 1/4)^2 and t2 well inside E11 = (1/4, 1/2)^2, in lattice
    coordinates, so product loops of radius 0.05 keep u1 +- u2 off the lattice.
    """
    if placement not in ("generic", "separated"):
        raise ValidationError(f"Unknown placement '{placement}'", field="placement")
    if tau is None:
        tau = complex(rng.uniform(-0.3, 0.3), rng.uniform(0.9, 1.4))
    tau = complex(tau)

    for attempt in range(1000):
        if placement == "separated":
            t1 = _random_points(rng, n1, tau, 0.05, 0.17, 0.03)
            t2 = _random_points(rng, n2, tau, 0.33, 0.45, 0.03)
        else:
            points = _random_points(rng, n1 + n2, tau, 0.0, 1.0, margin)
            t1, t2 = points[:n1], points[n1:]

        c = _random_complex_away_from_integers(rng, 0.9, 0.3, margin)
        exponents = []
        for n in (n1, n2):
            values = [_random_complex_away_from_integers(rng, 0.9, 0.3, margin) for _ in range(n - 1)]
            values.append(-2 * c - sum(values))
            exponents.append(values)
        if any(_distance_to_integers(v) <= margin for v in exponents[0] + exponents[1]):
            continue

        lam1, lam2 = _random_points(rng, 2, tau, 0.0, 1.0, margin)
        if any(distance_to_lattice(v, tau) <= margin for v in (lam1, lam2, lam1 + lam2, lam1 - lam2)):
            continue

        c10 = complex(rng.uniform(-0.5, 0.5), rng.uniform(-0.2, 0.2))
        c20 = complex(rng.uniform(-0.5, 0.5), rng.uniform(-0.2, 0.2))
        c1_inf = -lam1 - c10 * tau - sum(c_ * t for c_, t in zip(exponents[0], t1))
        c2_inf = -lam2 - c20 * tau - sum(c_ * t for c_, t in zip(exponents[1], t2))
        cfg = ProblemConfig(
            tau=tau, t1=t1, t2=t2, c=c, c10=c10, c20=c20,
            c1=exponents[0], c2=exponents[1], c1_inf=c1_inf, c2_inf=c2_inf,
            name=f"random-{placement}-{n1}x{n2}",
        )
        if placement == "generic":
            # collisions of the combined point set modulo the lattice, including t1 + t2 and 2t
            combos = [a + b for a in t1 for b in t2] + [2 * t for t in t1 + t2]
            if any(distance_to_lattice(v, tau) <= margin for v in combos):
                continue
        if not validate(cfg):
            logger.debug("Random configuration drawn", attempts=attempt + 1, placement=placement)
            return cfg
    raise ValidationError("Could not draw a valid random configuration", field="placement")


def _pair(value: Any, name: str) -> complex:
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        raise ValidationError(f"{name} must be an [re, im] pair of numbers, got {value!r}", field=name)
    return complex(float(value[0]), float(value[1]))


def _pair_list(value: Any, name: str) -> List[complex]:
    if not isinstance(value, list) or not value:
        raise ValidationError(f"{name} must be a non-empty list of [re, im] pairs", field=name)
    return [_pair(v, f"{name}[{n + 1}]") for n, v in enumerate(value)]


def parse_problem(data: Dict[str, Any]) -> ProblemConfig:
    """Build a ProblemConfig from the JSON schema (complex numbers as [re, im] pairs)."""
    if not isinstance(data, dict):
        raise ValidationError("Problem file must contain a JSON object", field="root")
    missing = [key for key in PROBLEM_KEYS if key not in data]
    if missing:
        raise ValidationError(f"Problem file is missing keys: {missing}", field=missing[0])

    return ProblemConfig(
        tau=_pair(data["tau"], "tau"),
        t1=_pair_list(data["t1"], "t1"),
        t2=_pair_list(data["t2"], "t2"),
        c=_pair(data["c"], "c"),
        c10=_pair(data["c10"], "c10"),
        c20=_pair(data["c20"], "c20"),
        c1=_pair_list(data["c1"], "c1"),
        c2=_pair_list(data["c2"], "c2"),
        c1_inf=_pair(data["c1_inf"], "c1_inf"),
        c2_inf=_pair(data["c2_inf"], "c2_inf"),
        name=str(data.get("name", "")),
    )


def problem_to_dict(cfg: ProblemConfig) -> Dict[str, Any]:
    """Serialize a configuration to the problem-file schema."""
    data = {
        "tau": complex_pair(cfg.tau_value),
        "t1": [complex_pair(t) for t in cfg.t1],
        "t2": [complex_pair(t) for t in cfg.t2],
        "c": complex_pair(cfg.c),
        "c10": complex_pair(cfg.c10),
        "c20": complex_pair(cfg.c20),
        "c1": [complex_pair(c) for c in cfg.c1],
        "c2": [complex_pair(c) for c in cfg.c2],
        "c1_inf": complex_pair(cfg.c1_inf),
        "c2_inf": complex_pair(cfg.c2_inf),
    }
    if cfg.name:
        data["name"] = cfg.name
    return data


def config_digest(cfg: ProblemConfig) -> str:
    """sha256 of the canonical problem JSON."""
    data = problem_to_dict(cfg)
    data.pop("name", None)
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def read_json(path: Union[str, Path]) -> Any:
    """Load a JSON document, reporting syntax errors with line and column."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ValidationError(f"Cannot read '{path}': {e}", field="path")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(str(path), e.lineno, e.colno, f"Malformed JSON in '{path}': {e.msg} "
                         f"(line {e.lineno}, column {e.colno})")


def load_problem_file(path: Union[str, Path]) -> Tuple[ProblemConfig, Optional[Dict[str, Any]]]:
    """Load a problem file; returns the configuration and its optional cycle description."""
    data = read_json(path)
    cfg = parse_problem(data)
    cycle = data.get("cycle")
    if cycle is not None and not isinstance(cycle, dict):
        raise ValidationError("cycle must be a JSON object", field="cycle")
    logger.debug("Problem file loaded", path=str(path), n1=cfg.n1, n2=cfg.n2)
    return cfg, cycle
