"""
Twisted period integrals F_* = int T psi_* over products of Pochhammer loops.

T(u1, u2) = exp(2 pi i (c10 u1 + c20 u2)) theta1(u1 - u2)^c theta1(u1 + u2)^c
            prod_i theta1(u1 - t1i)^{c1i} prod_j theta1(u2 - t2j)^{c2j}

Every theta factor carries its own continuous logarithm (BranchState). A
determination of T on a product cycle is fixed by its logarithms at the base
point (the start of both loops); along gamma2 the coupling factors are
continued with u1 held at the start of gamma1, then along gamma1 for each
u2 node. Quadrature is composite Gauss-Legendre on every segment (lines graded
towards the loops). Refinement doubles the panels of those segments whose
contribution still moves between rounds.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss

from .basis_forms import evaluate_all
from .config import PeriodShift, derive_lambda, period_multiplier, shift_point
from .connection import assemble
from .elliptic_kernel import distance_to_lattice, theta1, theta1_log_multiplier
from .logging.logger import get_logger
from .models.exceptions import BranchJump, GeometryError, NearSingular, QuadratureFailure, ValidationError
from .models.problem import ProblemConfig

logger = get_logger(__name__)

GAUSS_NODES = 16
QUADRATURE_TOLERANCE = 1e-8
MAX_REFINEMENTS = 5
STEP_BOUND = np.pi / 2
CLOSURE_TOLERANCE = 1e-12
NODE_MARGIN = 1e-4
PRODUCT_MARGIN = 1e-3
MIN_RADIUS = 1e-3
DEFAULT_RADIUS = 0.05
ODE_H = 1e-4
COLUMN_CHUNK = 128

# refinement level of every segment of (gamma1, gamma2)
CycleLevels = Tuple[Tuple[int, ...], Tuple[int, ...]]
LevelSpec = Union[int, Sequence[int]]

FormsFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


# branch tracking

class BranchState:
    """Continuous logarithms of the theta factors of T along one path.

    A factor seen for the first time starts on the principal branch, or on the
    branch nearest to its anchor value when one is given. Each later value
    must turn by less than STEP_BOUND from the previous one.
    """

    def __init__(self, anchor: Optional[Dict[str, complex]] = None):
        self.anchor: Dict[str, complex] = dict(anchor or {})
        self.logs: Dict[str, np.ndarray] = {}
        self.values: Dict[str, np.ndarray] = {}
        self.steps = 0

    def initial_log(self, name: str, value) -> np.ndarray:
        log = np.log(np.asarray(value, dtype=complex))
        if name in self.anchor:
            turns = np.round((self.anchor[name] - log).imag / (2 * np.pi))
            log = log + 2j * np.pi * turns
        return log

    def _checked_steps(self, name: str, previous: np.ndarray, current: np.ndarray) -> np.ndarray:
        steps = np.log(current / previous)
        angles = np.abs(steps.imag)
        if angles.size and np.max(angles) > STEP_BOUND:
            worst = int(np.argmax(angles.reshape(-1)))
            offset = worst // max(1, int(np.prod(angles.shape[1:]))) if angles.ndim > 1 else worst
            raise BranchJump(name, step=self.steps + offset, angle=float(angles.reshape(-1)[worst]))
        return steps

    def advance(self, name: str, value) -> np.ndarray:
        """Move factor `name` to a new theta value; returns its logarithm there."""
        value = np.asarray(value, dtype=complex)
        if name not in self.logs:
            log = self.initial_log(name, value)
        else:
            log = self.logs[name] + self._checked_steps(name, self.values[name], value)
        self.logs[name] = log
        self.values[name] = value
        return log

    def track(self, name: str, values: np.ndarray, start_log: Optional[np.ndarray] = None) -> np.ndarray:
        """Logarithms of a whole sequence of theta values (axis 0 is the path)."""
        values = np.asarray(values, dtype=complex)
        if start_log is not None:
            first = np.asarray(start_log, dtype=complex)
        elif name in self.logs:
            first = self.logs[name] + self._checked_steps(name, self.values[name], values[0])
        else:
            first = self.initial_log(name, values[0])
        steps = self._checked_steps(name, values[:-1], values[1:])
        logs = np.empty_like(values)
        logs[0] = first
        logs[1:] = first + np.cumsum(steps, axis=0)
        self.logs[name] = logs[-1]
        self.values[name] = values[-1]
        self.steps += len(values)
        return logs


def _factors(cfg: ProblemConfig) -> List[Tuple[str, complex, int, int, complex]]:
    """(name, exponent, weight of u1, weight of u2, offset) with argument a*u1 + b*u2 - offset."""
    factors = [("u1-u2", cfg.c, 1, -1, 0j), ("u1+u2", cfg.c, 1, 1, 0j)]
    factors += [(f"u1-t1{i}", c, 1, 0, t) for i, (c, t) in enumerate(zip(cfg.c1, cfg.t1), start=1)]
    factors += [(f"u2-t2{j}", c, 0, 1, t) for j, (c, t) in enumerate(zip(cfg.c2, cfg.t2), start=1)]
    return factors


def _theta_checked(argument, tau: complex, name: str):
    distance = np.atleast_1d(distance_to_lattice(argument, tau))
    if np.min(distance) < 1e-8:
        flat = np.atleast_1d(argument).reshape(-1)
        worst = int(np.argmin(distance.reshape(-1)))
        raise NearSingular(f"theta1({name})", argument=complex(flat[worst]), distance=float(distance.reshape(-1)[worst]))
    return theta1(argument, tau)


def eval_T(u1, u2, cfg: ProblemConfig, branch: BranchState):
    """T at (u1, u2) on the branch continued by `branch` (elementwise for arrays)."""
    tau = cfg.tau_value
    log_value = 2j * np.pi * (cfg.c10 * np.asarray(u1) + cfg.c20 * np.asarray(u2))
    for name, exponent, a, b, offset in _factors(cfg):
        argument = a * np.asarray(u1, dtype=complex) + b * np.asarray(u2, dtype=complex) - offset
        log_value = log_value + exponent * branch.advance(name, _theta_checked(argument, tau, name))
    branch.steps += 1
    value = np.exp(log_value)
    return complex(value) if np.ndim(value) == 0 else value


# contours

@dataclass(frozen=True)
class Segment:
    """A line or circular arc, parametrized by s in [0, 1].

    A line with grading g > 0 gets base panels of length g, 2g, 4g, ... from
    both ends, for integrands with branch points at distance g past the ends.
    """

    kind: str
    start: complex
    end: complex
    center: complex = 0j
    radius: float = 0.0
    angle: float = 0.0
    sweep: float = 0.0
    grading: float = 0.0

    @classmethod
    def line(cls, start: complex, end: complex, grading: float = 0.0) -> "Segment":
        return cls("line", complex(start), complex(end), grading=float(grading))

    @classmethod
    def arc(cls, center: complex, radius: float, angle: float, sweep: float) -> "Segment":
        center = complex(center)
        start = center + radius * np.exp(1j * angle)
        end = center + radius * np.exp(1j * (angle + sweep))
        return cls("arc", complex(start), complex(end), center, float(radius), float(angle), float(sweep))

    def _base_edges(self) -> np.ndarray:
        if self.kind == "arc":
            return np.linspace(0.0, 1.0, 5)
        length = abs(self.end - self.start)
        if self.grading <= 0 or length <= 4 * self.grading:
            return np.linspace(0.0, 1.0, 3)
        distances = []
        d = self.grading
        while d < length / 2:
            distances.append(d / length)
            d *= 2
        inner = np.array(distances)
        return np.unique(np.concatenate([[0.0, 0.5, 1.0], inner, 1.0 - inner]))

    def panel_edges(self, level: int) -> np.ndarray:
        """Base panels, each split into 2**level equal pieces."""
        base = self._base_edges()
        pieces = 2 ** level
        fractions = np.arange(pieces) / pieces
        starts = base[:-1, None] + np.diff(base)[:, None] * fractions[None, :]
        return np.append(starts.reshape(-1), 1.0)

    def point(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "line":
            return self.start + (self.end - self.start) * s
        return self.center + self.radius * np.exp(1j * (self.angle + self.sweep * s))

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "line":
            return np.full(s.shape, self.end - self.start, dtype=complex)
        return 1j * self.sweep * self.radius * np.exp(1j * (self.angle + self.sweep * s))

    def translated(self, delta: complex) -> "Segment":
        return replace(self, start=self.start + delta, end=self.end + delta, center=self.center + delta)



@dataclass
class Contour:
    """Ordered chain of segments; consecutive segments share endpoints."""

    segments: List[Segment]
    samples_per_segment: int = GAUSS_NODES
    name: str = ""

    def __post_init__(self):
        if not self.segments:
            raise GeometryError("a contour needs at least one segment")
        for n, (first, second) in enumerate(zip(self.segments, self.segments[1:])):
            if abs(first.end - second.start) > CLOSURE_TOLERANCE:
                raise GeometryError(f"segments {n} and {n + 1} of '{self.name}' do not meet")

    @property
    def start(self) -> complex:
        return self.segments[0].start

    @property
    def end(self) -> complex:
        return self.segments[-1].end

    @property
    def is_closed(self) -> bool:
        return abs(self.end - self.start) <= CLOSURE_TOLERANCE

    @property
    def circles(self) -> List[Segment]:
        return [segment for segment in self.segments if segment.kind == "arc"]

    def segment_levels(self, level: LevelSpec) -> List[int]:
        if isinstance(level, (int, np.integer)):
            return [int(level)] * len(self.segments)
        levels = [int(value) for value in level]
        if len(levels) != len(self.segments):
            raise GeometryError(f"'{self.name}' has {len(self.segments)} segments, got {len(levels)} levels")
        return levels

    def nodes(self, level: LevelSpec = 0) -> Tuple[np.ndarray, np.ndarray]:
        """Gauss-Legendre nodes in path order and weights including dz/ds."""
        x, w = leggauss(self.samples_per_segment)
        points, weights = [], []
        for segment, segment_level in zip(self.segments, self.segment_levels(level)):
            edges = segment.panel_edges(segment_level)
            half = np.diff(edges) / 2
            mid = (edges[:-1] + edges[1:]) / 2
            s = (mid[:, None] + half[:, None] * x[None, :]).reshape(-1)
            ws = (half[:, None] * w[None, :]).reshape(-1)
            points.append(segment.point(s))
            weights.append(ws * segment.derivative(s))
        return np.concatenate(points), np.concatenate(weights)

    def node_segments(self, level: LevelSpec = 0) -> np.ndarray:
        """Segment number of every node returned by nodes(level)."""
        counts = [(len(segment.panel_edges(segment_level)) - 1) * self.samples_per_segment
                  for segment, segment_level in zip(self.segments, self.segment_levels(level))]
        return np.repeat(np.arange(len(self.segments)), counts)

    def translated(self, delta: complex) -> "Contour":
        return Contour([segment.translated(delta) for segment in self.segments],
                       self.samples_per_segment, self.name)

    def winding_number(self, point: complex, level: int = 2) -> float:
        """Total turning of z - point along the contour, in turns."""
        z, _ = self.nodes(level)
        path = np.concatenate([[self.start], z, [self.end]]) - point
        return float(np.sum(np.angle(path[1:] / path[:-1])) / (2 * np.pi))


def pochhammer(a: complex, b: complex, radius: float, name: str = "") -> Contour:
    """Double loop: around a, over to b, around b, back, then both again clockwise."""
    a, b = complex(a), complex(b)
    if radius <= MIN_RADIUS:
        raise GeometryError(f"radius {radius} must exceed {MIN_RADIUS}")
    if abs(b - a) <= 4 * radius:
        raise GeometryError(f"|a - b| = {abs(b - a):.4g} must exceed 4 * radius = {4 * radius:.4g}")
    direction = (b - a) / abs(b - a)
    heading = float(np.angle(direction))
    A, B = a + radius * direction, b - radius * direction
    two_pi = 2 * np.pi
    segments = [
        Segment.arc(a, radius, heading, two_pi),
        Segment.line(A, B, radius),
        Segment.arc(b, radius, heading + np.pi, two_pi),
        Segment.line(B, A, radius),
        Segment.arc(a, radius, heading, -two_pi),
        Segment.line(A, B, radius),
        Segment.arc(b, radius, heading + np.pi, -two_pi),
        Segment.line(B, A, radius),
    ]
    # arcs start and end a hair apart after floating point exp; snap them
    snapped = []
    for segment in segments:
        if segment.kind == "arc":
            anchor = A if abs(segment.center - a) < abs(segment.center - b) else B
            segment = replace(segment, start=anchor, end=anchor)
        snapped.append(segment)
    return Contour(snapped, name=name or f"pochhammer({a:.4g}, {b:.4g})")


# cycles

@dataclass(frozen=True)
class CycleSpec:
    """Names of the two one-variable paths of a product cycle: "0", "inf" or "j<N>"."""

    gamma1: str = "0"
    gamma2: str = "0"
    radius: Optional[float] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CycleSpec":
        try:
            radius = data.get("radius")
            return cls(str(data.get("gamma1", "0")), str(data.get("gamma2", "0")),
                       None if radius is None else float(radius))
        except (TypeError, ValueError, AttributeError) as e:
            raise ValidationError(f"Invalid cycle description: {e}", field="cycle") from e

    @classmethod
    def parse(cls, text: str, radius: Optional[float] = None) -> "CycleSpec":
        parts = [part.strip() for part in text.split(",")]
        if len(parts) != 2:
            raise ValidationError(f"Cycle must look like '0,0' or 'j2,inf', got '{text}'", field="cycle")
        return cls(parts[0], parts[1], radius)

    def to_dict(self) -> Dict[str, Any]:
        return {"gamma1": self.gamma1, "gamma2": self.gamma2, "radius": self.radius}


@dataclass
class ProductCycle:
    """gamma1 in u1 times gamma2 in u2."""

    gamma1: Contour
    gamma2: Contour
    spec: Optional[CycleSpec] = None

    @property
    def base_point(self) -> Tuple[complex, complex]:
        return self.gamma1.start, self.gamma2.start


def _endpoints(cfg: ProblemConfig, k: int, name: str) -> Tuple[complex, complex]:
    points = cfg.points(k)
    first = points[0]
    if name == "0":
        return first, first + 1
    if name == "inf":
        return first, first + cfg.tau_value
    if name.startswith("j") and name[1:].isdigit():
        j = int(name[1:])
        if not 2 <= j <= len(points):
            raise GeometryError(f"path j{j} needs 2 <= j <= n{k} = {len(points)}")
        return first, points[j - 1]
    raise ValidationError(f"Unknown path name '{name}'", field=f"gamma{k}")


def _check_contour(contour: Contour, cfg: ProblemConfig, k: int) -> None:
    """Nodes keep NODE_MARGIN from every t_kj; each circle encloses only its own center."""
    tau = cfg.tau_value
    points = np.array(cfg.points(k), dtype=complex)
    z, _ = contour.nodes(0)
    distance = distance_to_lattice(z[:, None] - points[None, :], tau)
    if np.min(distance) <= NODE_MARGIN:
        raise GeometryError(f"{contour.name} passes within {NODE_MARGIN} of a marked point")
    for circle in contour.circles:
        gaps = distance_to_lattice(circle.center - points, tau)
        others = gaps[gaps > 1e-12]
        if others.size and np.min(others) <= circle.radius + NODE_MARGIN:
            raise GeometryError(f"a loop of {contour.name} encloses a second marked point")


def check_product(cycle: ProductCycle, cfg: ProblemConfig, margin: float = PRODUCT_MARGIN) -> float:
    """Minimum distance of u1 +- u2 to the lattice over the product; GeometryError below margin."""
    tau = cfg.tau_value
    z1, _ = cycle.gamma1.nodes(0)
    z2, _ = cycle.gamma2.nodes(0)
    closest = np.inf
    for sign in (1, -1):
        closest = min(closest, float(np.min(distance_to_lattice(z1[:, None] + sign * z2[None, :], tau))))
        for circle in cycle.gamma1.circles:
            closest = min(closest, float(np.min(distance_to_lattice(circle.center + sign * z2, tau)))
                          - circle.radius)
        for circle in cycle.gamma2.circles:
            closest = min(closest, float(np.min(distance_to_lattice(z1 + sign * circle.center, tau)))
                          - circle.radius)
    if closest < margin:
        raise GeometryError(f"u1 +- u2 comes within {closest:.3g} of the lattice on the product cycle")
    return closest


def product_cycle(cfg: ProblemConfig, gamma1: str = "0", gamma2: str = "0",
                 radius: Optional[float] = None) -> ProductCycle:
    """Product of Pochhammer loops for the paths (t_k1, t_k1 + 1), (t_k1, t_k1 + tau), (t_k1, t_kj)."""
    if {gamma1, gamma2} == {"0", "inf"}:
        raise GeometryError(f"the product ({gamma1}, {gamma2}) is not a twisted cycle of this family")
    contours = []
    for k, name in ((1, gamma1), (2, gamma2)):
        a, b = _endpoints(cfg, k, name)
        r = radius if radius is not None else min(DEFAULT_RADIUS, abs(b - a) / 5)
        contour = pochhammer(a, b, r, name=f"gamma{k}[{name}]")
        _check_contour(contour, cfg, k)
        contours.append(contour)
    cycle = ProductCycle(contours[0], contours[1], CycleSpec(gamma1, gamma2, radius))
    check_product(cycle, cfg)
    return cycle


def build_cycle(cfg: ProblemConfig, spec: CycleSpec) -> ProductCycle:
    return product_cycle(cfg, spec.gamma1, spec.gamma2, spec.radius)


# quadrature

@dataclass
class QuadratureResult:
    """Integral vector with its refinement levels, error estimate and base-point branch.

    `level` is the highest segment level; `levels` holds every segment's level
    and reproduces the same nodes when passed back as `level`.
    """

    values: np.ndarray
    level: int
    estimate: float
    anchor: Dict[str, complex] = field(default_factory=dict)
    levels: Optional[CycleLevels] = None


def _single_variable_logs(cfg: ProblemConfig, path: np.ndarray, k: int, state: BranchState,
                          base: Dict[str, complex]) -> np.ndarray:
    """2 pi i c_k0 u_k + sum_j c_kj log theta1(u_k - t_kj) along path (path[0] is the base point)."""
    tau = cfg.tau_value
    total = 2j * np.pi * cfg.c0(k) * path
    for j, (c, t) in enumerate(zip(cfg.exponents(k), cfg.points(k)), start=1):
        name = f"u{k}-t{k}{j}"
        logs = state.track(name, _theta_checked(path - t, tau, name))
        base[name] = complex(logs[0])
        total = total + c * logs
    return total


def _integrate_level(cycle: ProductCycle, cfg: ProblemConfig, forms: FormsFunction, levels: CycleLevels,
                     anchor: Optional[Dict[str, complex]], workers: Optional[int]
                     ) -> Tuple[np.ndarray, Dict[str, complex]]:
    """Contributions of every segment pair, shape (forms, segments of gamma1, segments of gamma2)."""
    tau = cfg.tau_value
    a1, a2 = cycle.base_point
    levels1, levels2 = levels
    z1, w1 = cycle.gamma1.nodes(levels1)
    z2, w2 = cycle.gamma2.nodes(levels2)
    rows = np.eye(len(cycle.gamma1.segments))[cycle.gamma1.node_segments(levels1)].T
    columns_of = np.eye(len(cycle.gamma2.segments))[cycle.gamma2.node_segments(levels2)]
    path1 = np.concatenate([[a1], z1])
    path2 = np.concatenate([[a2], z2])

    base: Dict[str, complex] = {}
    log1 = _single_variable_logs(cfg, path1, 1, BranchState(anchor), base)
    log2 = _single_variable_logs(cfg, path2, 2, BranchState(anchor), base)

    # coupling factors along gamma2 with u1 at the base point of gamma1
    coupling = {}
    for name, sign in (("u1-u2", -1), ("u1+u2", 1)):
        logs = BranchState(anchor).track(name, _theta_checked(a1 + sign * path2, tau, name))
        base[name] = complex(logs[0])
        coupling[name] = logs[1:]

    def chunk(columns: slice) -> np.ndarray:
        u2 = z2[columns]
        log_T = log1[1:, None] + log2[1:][columns][None, :]
        for name, sign in (("u1-u2", -1), ("u1+u2", 1)):
            values = _theta_checked(path1[:, None] + sign * u2[None, :], tau, name)
            logs = BranchState().track(name, values, start_log=coupling[name][columns])
            log_T = log_T + cfg.c * logs[1:]
        integrand = np.exp(log_T)[None, :, :] * forms(z1[:, None], u2[None, :])
        weighted = integrand * w1[None, :, None] * w2[columns][None, None, :]
        return rows @ (weighted @ columns_of[columns])

    slices = [slice(start, min(start + COLUMN_CHUNK, len(z2))) for start in range(0, len(z2), COLUMN_CHUNK)]
    if workers is None or workers <= 1:
        parts = [chunk(columns) for columns in slices]
    else:
        with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="quadrature") as executor:
            parts = list(executor.map(chunk, slices))
    return np.sum(parts, axis=0), base


def _flagged(indicators: np.ndarray, limit: float) -> np.ndarray:
    """Segments whose indicator exceeds limit; the worst one when none does."""
    flags = indicators > limit
    if not flags.any():
        flags[np.argmax(indicators)] = True
    return flags


def integrate_forms(cycle: ProductCycle, cfg: ProblemConfig, forms: FormsFunction,
                    tolerance: float = QUADRATURE_TOLERANCE, max_refinements: int = MAX_REFINEMENTS,
                    level: Optional[Union[int, CycleLevels]] = None,
                    anchor: Optional[Dict[str, complex]] = None,
                    workers: Optional[int] = None) -> QuadratureResult:
    """Iterated integral of T * forms(u1, u2) over the product cycle.

    forms returns an array whose leading axis enumerates the integrands. With
    `level` given the quadrature runs once at that refinement (an int for every
    segment, or the `levels` of an earlier result). Otherwise the first round
    doubles every panel; later rounds double only the segments whose row or
    column of contributions moved by more than their share of `tolerance`,
    until two successive rounds agree to `tolerance`.
    """
    if level is not None:
        levels = level if not isinstance(level, (int, np.integer)) else (level, level)
        levels = (tuple(cycle.gamma1.segment_levels(levels[0])), tuple(cycle.gamma2.segment_levels(levels[1])))
        blocks, anchors = _integrate_level(cycle, cfg, forms, levels, anchor, workers)
        return QuadratureResult(blocks.sum(axis=(1, 2)), max(max(levels[0]), max(levels[1])),
                                float("nan"), anchors, levels)

    levels1 = np.zeros(len(cycle.gamma1.segments), dtype=int)
    levels2 = np.zeros(len(cycle.gamma2.segments), dtype=int)
    previous: Optional[np.ndarray] = None
    estimate = float("inf")
    for round_number in range(max_refinements + 1):
        levels = (tuple(int(n) for n in levels1), tuple(int(n) for n in levels2))
        try:
            blocks, anchors = _integrate_level(cycle, cfg, forms, levels, anchor, workers)
        except BranchJump as e:
            logger.log_refinement("product cycle", round_number + 1, "branch jump", factor=e.details["factor"])
            levels1 += 1
            levels2 += 1
            previous = None
            continue

        if previous is None:
            levels1 += 1
            levels2 += 1
        else:
            values = blocks.sum(axis=(1, 2))
            scale = max(np.linalg.norm(values), np.finfo(float).tiny)
            delta = blocks - previous
            estimate = float(np.linalg.norm(delta.sum(axis=(1, 2))) / scale)
            logger.log_refinement("product cycle", round_number, "convergence", estimate=estimate,
                                  levels=[list(levels[0]), list(levels[1])])
            if estimate <= tolerance:
                return QuadratureResult(values, int(max(levels1.max(), levels2.max())), estimate, anchors, levels)
            row_change = np.linalg.norm(delta.sum(axis=2), axis=0) / scale
            column_change = np.linalg.norm(delta.sum(axis=1), axis=0) / scale
            levels1 += _flagged(row_change, tolerance / len(levels1))
            levels2 += _flagged(column_change, tolerance / len(levels2))
        previous = blocks
    raise QuadratureFailure(max_refinements, estimate, tolerance)


def rw_integral(cycle: ProductCycle, cfg: ProblemConfig, tolerance: float = QUADRATURE_TOLERANCE,
                max_refinements: int = MAX_REFINEMENTS, level: Optional[Union[int, CycleLevels]] = None,
                anchor: Optional[Dict[str, complex]] = None,
                workers: Optional[int] = None) -> QuadratureResult:
    """F_* for every basis index, in index order."""
    return integrate_forms(cycle, cfg, lambda u1, u2: evaluate_all(u1, u2, cfg),
                           tolerance, max_refinements, level, anchor, workers)


# differential equation check

@dataclass
class ODECheck:
    """Result of comparing a central difference of F with A_kp F."""

    deriv: Tuple[int, int]
    h: float
    residual: float
    level: int
    norm: float

    def to_dict(self) -> dict:
        k, p = self.deriv
        return {"deriv": {"k": k, "p": p}, "h": self.h, "residual": self.residual,
                "level": self.level, "norm": self.norm}


def verify_ode(k: int, p: int, spec: CycleSpec, cfg: ProblemConfig, h: float = ODE_H,
               tolerance: float = QUADRATURE_TOLERANCE, max_refinements: int = MAX_REFINEMENTS,
               workers: Optional[int] = None, base: Optional[QuadratureResult] = None) -> ODECheck:
    """||(F(t + h) - F(t - h)) / 2h - A_kp(t) F(t)|| / ||F(t)||.

    The cycle is rebuilt at each perturbed configuration; all three integrals
    use the segment levels reached at t and the branch of T at the base
    point of the unperturbed cycle, so F depends smoothly on t_kp. A precomputed
    `base` integral at t may be passed to share it between derivative directions.
    """
    if h <= 0:
        raise ValidationError(f"h must be positive, got {h}", field="h")
    matrix = assemble(k, p, cfg).entries
    if base is None:
        base = rw_integral(build_cycle(cfg, spec), cfg, tolerance, max_refinements, workers=workers)
    shifted = []
    for sign in (1, -1):
        moved = shift_point(cfg, k, p, sign * h)
        result = rw_integral(build_cycle(moved, spec), moved,
                             level=base.levels if base.levels is not None else base.level,
                             anchor=base.anchor, workers=workers)
        shifted.append(result.values)
    derivative = (shifted[0] - shifted[1]) / (2 * h)
    norm = float(np.linalg.norm(base.values))
    if norm == 0.0:
        raise QuadratureFailure(base.level, 0.0, tolerance)
    residual = float(np.linalg.norm(derivative - matrix @ base.values) / norm)
    logger.debug("ODE residual computed", k=k, p=p, h=h, residual=residual, level=base.level)
    return ODECheck((k, p), h, residual, base.level, norm)


def ode_convergence(k: int, p: int, spec: CycleSpec, cfg: ProblemConfig,
                    steps: Sequence[float], **kwargs) -> List[ODECheck]:
    """verify_ode at several h, for the O(h^2) table."""
    return [verify_ode(k, p, spec, cfg, h, **kwargs) for h in steps]


# period transport

@dataclass
class PeriodTransport:
    """Continuation of T along a straight period path."""

    shift: PeriodShift
    multiplier: complex
    windings: Dict[str, float]
    normalized: complex
    expected: complex

    @property
    def residual(self) -> float:
        return float(abs(self.normalized - self.expected) / max(1.0, abs(self.expected)))


def period_transport(u1: complex, u2: complex, cfg: ProblemConfig, shift: PeriodShift,
                     steps: int = 64) -> PeriodTransport:
    """Transport T from (u1, u2) to the shifted point with branch tracking.

    The raw multiplier differs from the exponential convention of the theta
    quasi-periodicity by whole turns of individual factors; those windings are
    reported and removed, and the e^{2 pi i lambda_k} twist of tau-shifts applied.
    """
    tau = cfg.tau_value
    d1, d2 = shift.offsets(tau)
    branch = BranchState()
    start = eval_T(u1, u2, cfg, branch)
    start_logs = {name: complex(value) for name, value in branch.logs.items()}
    for n in range(1, steps + 1):
        s = n / steps
        end = eval_T(u1 + s * d1, u2 + s * d2, cfg, branch)

    windings: Dict[str, float] = {}
    correction = 0j
    for name, exponent, a, b, offset in _factors(cfg):
        moved = a * d1 + b * d2
        if moved == 0:
            continue
        direction = 1 if (moved == d1 + d2) else -1
        unit = (direction, 0) if not shift.is_tau else (0, direction)
        convention = theta1_log_multiplier(a * u1 + b * u2 - offset, tau, *unit)
        turns = (complex(branch.logs[name]) - start_logs[name] - convention) / (2j * np.pi)
        windings[name] = float(turns.real)
        correction += exponent * 2j * np.pi * np.round(turns.real)

    multiplier = end / start
    normalized = multiplier * np.exp(-correction)
    if shift.is_tau:
        normalized *= np.exp(2j * np.pi * derive_lambda(cfg)[shift.variable - 1])
    return PeriodTransport(shift, complex(multiplier), windings, complex(normalized),
                           period_multiplier(cfg, shift))
