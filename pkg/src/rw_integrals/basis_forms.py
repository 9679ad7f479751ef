"""
Coefficient functions g_*(u1, u2) of the basis 2-forms psi_* = g_* du1 ^ du2.

The corner forms psi_{+-,m} are always built from the four raw forms psi'_{+-,m}
through M^{-1}; there is no separate closed form for them.

Iterated residues are computed numerically in a linear chart (x, y) around the
intersection point: the residue along x = 0 is taken first, then along y = 0, and
du1 ^ du2 = J dx ^ dy.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import PeriodShift, derive_lambda, half_periods, psi_index_set
from .config import dual as dual_config
from .elliptic_kernel import s_func
from .logging.logger import get_logger
from .models.exceptions import ValidationError
from .models.problem import BasisIndex, IndexKind, ProblemConfig

logger = get_logger(__name__)

RESIDUE_OFFSETS = (1e-4, 1e-5)

FormEvaluator = Callable[..., complex]


@dataclass
class ResidueMatrix:
    """M: entry (i, j) is the iterated residue of psi'_{+-,j} at P_i."""

    entries: np.ndarray
    ell: complex

    def inverse(self) -> np.ndarray:
        return quarter_inverse(self.ell)


@dataclass(frozen=True)
class ResidueChart:
    """Linear chart (x, y) -> (u1, u2) centred on an intersection point.

    The first residue is taken along x = 0, the second along y = 0, and the
    jacobian converts du1 ^ du2 into dx ^ dy.
    """

    name: str
    point: Tuple[complex, complex]
    dx: Tuple[complex, complex]
    dy: Tuple[complex, complex]

    @property
    def jacobian(self) -> complex:
        return self.dx[0] * self.dy[1] - self.dy[0] * self.dx[1]

    def at(self, x, y) -> Tuple[complex, complex]:
        u1 = self.point[0] + x * self.dx[0] + y * self.dy[0]
        u2 = self.point[1] + x * self.dx[1] + y * self.dy[1]
        return u1, u2


def _lambdas(cfg: ProblemConfig) -> Tuple[complex, complex]:
    return derive_lambda(cfg)


def _tau(cfg: ProblemConfig) -> complex:
    return cfg.tau_value


def _check_range(name: str, value: int, upper: int) -> None:
    if not 1 <= value <= upper:
        raise ValidationError(f"{name} must be in 1..{upper}, got {value}", field=name)


def _check_sign(sign: int) -> None:
    if sign not in (1, -1):
        raise ValidationError(f"sign must be +1 or -1, got {sign}", field="sign")


def g_point(i: int, j: int, u1, u2, cfg: ProblemConfig):
    """g_ij = s(u1 - t1i; lambda1) s(u2 - t2j; lambda2)."""
    _check_range("i", i, cfg.n1)
    _check_range("j", j, cfg.n2)
    lam1, lam2 = _lambdas(cfg)
    tau = _tau(cfg)
    return (s_func(np.subtract(u1, cfg.t1[i - 1]), lam1, tau)
            * s_func(np.subtract(u2, cfg.t2[j - 1]), lam2, tau))


def g_row_pm(i: int, sign: int, u1, u2, cfg: ProblemConfig):
    """g_{i+-} = +-s(u1 - t1i; lambda1 -+ lambda2) s(u1 +- u2; +-lambda2)."""
    _check_range("i", i, cfg.n1)
    _check_sign(sign)
    lam1, lam2 = _lambdas(cfg)
    tau = _tau(cfg)
    return sign * (s_func(np.subtract(u1, cfg.t1[i - 1]), lam1 - sign * lam2, tau)
                   * s_func(np.add(u1, np.multiply(sign, u2)), sign * lam2, tau))


def g_col_pm(sign: int, j: int, u1, u2, cfg: ProblemConfig):
    """g_{+-j} = s(u1 +- u2; lambda1) s(u2 - t2j; lambda2 -+ lambda1)."""
    _check_sign(sign)
    _check_range("j", j, cfg.n2)
    lam1, lam2 = _lambdas(cfg)
    tau = _tau(cfg)
    return (s_func(np.add(u1, np.multiply(sign, u2)), lam1, tau)
            * s_func(np.subtract(u2, cfg.t2[j - 1]), lam2 - sign * lam1, tau))


def _corner_parameters(m: int, cfg: ProblemConfig) -> Tuple[complex, complex]:
    lam1, lam2 = _lambdas(cfg)
    w = half_periods(cfg.tau)[m - 1]
    return (lam1 + lam2 + 2 * w) / 2, (lam1 - lam2 + 2 * w) / 2


def g_corner_raw(m: int, u1, u2, cfg: ProblemConfig):
    """g'_{+-,m} = -2 E_m s(u1 + u2; A_m) s(u1 - u2; B_m).

    A_m = (lambda1 + lambda2 + 2 w_m)/2, B_m = (lambda1 - lambda2 + 2 w_m)/2 and
    E_m = 1 for m = 1, 2, exp(-2 pi i u1) for m = 3, 4.
    """
    _check_range("m", m, 4)
    a_m, b_m = _corner_parameters(m, cfg)
    tau = _tau(cfg)
    value = -2 * s_func(np.add(u1, u2), a_m, tau) * s_func(np.subtract(u1, u2), b_m, tau)
    if m in (3, 4):
        value = value * np.exp(-2j * np.pi * np.asarray(u1, dtype=complex))
    return complex(value) if np.ndim(value) == 0 else value


def ell(cfg: ProblemConfig) -> complex:
    """ell = exp(pi i (lambda1 + lambda2))."""
    lam1, lam2 = _lambdas(cfg)
    return complex(np.exp(1j * np.pi * (lam1 + lam2)))


def residue_matrix(cfg: ProblemConfig) -> ResidueMatrix:
    value = ell(cfg)
    entries = np.array([
        [1, 1, 1, 1],
        [1, 1, -1, -1],
        [value, -value, value, -value],
        [value, -value, -value, value],
    ], dtype=complex)
    return ResidueMatrix(entries=entries, ell=value)


def quarter_inverse(value: complex) -> np.ndarray:
    """Inverse of the 4x4 corner residue matrix with ell = value."""
    inv = 1 / value
    return 0.25 * np.array([
        [1, 1, inv, inv],
        [1, 1, -inv, -inv],
        [1, -1, inv, -inv],
        [1, -1, -inv, inv],
    ], dtype=complex)


def m_inverse(cfg: ProblemConfig) -> np.ndarray:
    return residue_matrix(cfg).inverse()


def g_corner(m: int, u1, u2, cfg: ProblemConfig):
    """g_{+-,m}: column m of (g'_{+-,1}, ..., g'_{+-,4}) M^{-1}."""
    _check_range("m", m, 4)
    inverse = m_inverse(cfg)
    value = 0
    for n in range(1, 5):
        weight = inverse[n - 1, m - 1]
        if weight != 0:
            value = value + weight * g_corner_raw(n, u1, u2, cfg)
    return value


def evaluate(index: BasisIndex, u1, u2, cfg: ProblemConfig):
    """Dispatch to the coefficient function of a basis index."""
    if index.kind is IndexKind.POINT:
        return g_point(index.i, index.j, u1, u2, cfg)
    if index.kind is IndexKind.ROW_PM:
        return g_row_pm(index.i, index.sign, u1, u2, cfg)
    if index.kind is IndexKind.COL_PM:
        return g_col_pm(index.sign, index.j, u1, u2, cfg)
    return g_corner(index.m, u1, u2, cfg)


def evaluate_all(u1, u2, cfg: ProblemConfig) -> np.ndarray:
    """All g_* in index order, stacked along a new leading axis.

    u1 and u2 broadcast against each other; the raw corner forms are evaluated
    once and shared by the four corner combinations.
    """
    u1 = np.asarray(u1, dtype=complex)
    u2 = np.asarray(u2, dtype=complex)
    shape = np.broadcast(u1, u2).shape
    indices = psi_index_set(cfg)
    out = np.empty((len(indices),) + shape, dtype=complex)

    raw = [np.broadcast_to(g_corner_raw(n, u1, u2, cfg), shape) for n in range(1, 5)]
    inverse = m_inverse(cfg)
    for position, index in enumerate(indices):
        if index.kind is IndexKind.CORNER:
            out[position] = sum(inverse[n, index.m - 1] * raw[n] for n in range(4))
        else:
            out[position] = np.broadcast_to(evaluate(index, u1, u2, cfg), shape)
    return out


def dual(evaluator: FormEvaluator, cfg: ProblemConfig) -> Callable:
    """The same coefficient evaluated with lambda replaced by -lambda.

    evaluator is called as evaluator(u1, u2, cfg); the returned callable takes (u1, u2).
    """
    dual_cfg = dual_config(cfg)

    def evaluate_dual(u1, u2):
        return evaluator(u1, u2, dual_cfg)

    return evaluate_dual


def intersection_matrix(cfg: ProblemConfig) -> np.ndarray:
    """Diagonal matrix of <psi_*, psi_*^dual>_ch in index order."""
    two_pi_i_sq = (2j * np.pi) ** 2
    diagonal = []
    for index in psi_index_set(cfg):
        if index.kind is IndexKind.POINT:
            diagonal.append(two_pi_i_sq / (cfg.c1[index.i - 1] * cfg.c2[index.j - 1]))
        elif index.kind is IndexKind.ROW_PM:
            diagonal.append(two_pi_i_sq / (cfg.c1[index.i - 1] * cfg.c))
        elif index.kind is IndexKind.COL_PM:
            diagonal.append(two_pi_i_sq / (cfg.c2[index.j - 1] * cfg.c))
        else:
            diagonal.append(two_pi_i_sq / cfg.c ** 2)
    return np.diag(np.array(diagonal, dtype=complex))


def designated_chart(index: BasisIndex, cfg: ProblemConfig) -> ResidueChart:
    """Chart at the intersection point where psi_* has iterated residue 1 (or delta_{im})."""
    if index.kind is IndexKind.POINT:
        t1, t2 = cfg.t1[index.i - 1], cfg.t2[index.j - 1]
        return ResidueChart(f"H1{index.i}&H2{index.j}", (t1, t2), (1, 0), (0, 1))
    if index.kind is IndexKind.ROW_PM:
        t1, sign = cfg.t1[index.i - 1], index.sign
        # x = u1 - t1i, y = u1 +- u2
        return ResidueChart(
            f"H1{index.i}&H{'+' if sign == 1 else '-'}",
            (t1, -sign * t1), (1, -sign), (0, sign),
        )
    if index.kind is IndexKind.COL_PM:
        t2, sign = cfg.t2[index.j - 1], index.sign
        # x = u1 +- u2, y = u2 - t2j
        return ResidueChart(
            f"H{'+' if sign == 1 else '-'}&H2{index.j}",
            (-sign * t2, t2), (1, 0), (-sign, 1),
        )
    return corner_chart(index.m, cfg)


def corner_chart(m: int, cfg: ProblemConfig) -> ResidueChart:
    """Chart at P_m = (w_m, w_m) with x = u1 + u2 - 2 w_m and y = u1 - u2."""
    w = half_periods(cfg.tau)[m - 1]
    return ResidueChart(f"P{m}", (w, w), (0.5, 0.5), (0.5, -0.5))


def table_charts(m: int, cfg: ProblemConfig) -> Tuple[ResidueChart, ResidueChart]:
    """Charts of the residue table: u1 = -u2 then u2 = w_m at (-w_m, w_m), and u1 = u2 then u2 = w_m at (w_m, w_m)."""
    w = half_periods(cfg.tau)[m - 1]
    plus = ResidueChart(f"H+&u2=w{m}", (-w, w), (1, 0), (-1, 1))
    minus = ResidueChart(f"H-&u2=w{m}", (w, w), (1, 0), (1, 1))
    return plus, minus


def intersection_charts(cfg: ProblemConfig) -> List[ResidueChart]:
    """One chart per intersection point, in the order of the basis indices they belong to."""
    return [designated_chart(index, cfg) for index in psi_index_set(cfg)]


def numeric_residue(func: Callable, chart: ResidueChart,
                    offsets: Sequence[float] = RESIDUE_OFFSETS) -> complex:
    """Iterated residue of func(u1, u2) du1 ^ du2 by the diagonal limit J x y func.

    Two offsets h1 > h2 with h1 = 10 h2 are combined by one Richardson step,
    which removes the first-order error.
    """
    h_coarse, h_fine = offsets
    if not np.isclose(h_coarse, 10 * h_fine):
        raise ValueError("Richardson step expects offsets (10h, h)")

    def sample(h: float) -> complex:
        u1, u2 = chart.at(h, h)
        return complex(chart.jacobian * h * h * func(u1, u2))

    return (10 * sample(h_fine) - sample(h_coarse)) / 9


def nested_residue(func: Callable, chart: ResidueChart, inner_radius: float = 5e-3,
                   outer_radius: float = 1e-2, nodes: int = 32) -> complex:
    """Iterated residue by two nested trapezoidal circle integrals.

    Needed where a third hyperplane passes through the point, so the diagonal limit
    of numeric_residue does not apply. The inner circle must not reach the poles that
    move with y, i.e. inner_radius < outer_radius.
    """
    if not 0 < inner_radius < outer_radius:
        raise ValueError("need 0 < inner_radius < outer_radius")
    roots = np.exp(2j * np.pi * np.arange(nodes) / nodes)
    x = inner_radius * roots[:, None]
    y = outer_radius * roots[None, :]
    u1, u2 = chart.at(x, y)
    values = func(u1, u2) * x * y
    return complex(chart.jacobian * np.sum(values) / nodes ** 2)


def iterated_residue(index: BasisIndex, chart: ResidueChart, cfg: ProblemConfig,
                     offsets: Sequence[float] = RESIDUE_OFFSETS) -> complex:
    """Numeric iterated residue of psi_index at the chart's intersection point."""
    value = numeric_residue(lambda u1, u2: evaluate(index, u1, u2, cfg), chart, offsets)
    logger.debug("Iterated residue", index=index.label, chart=chart.name)
    return value


def raw_corner_residues(cfg: ProblemConfig) -> np.ndarray:
    """Numeric matrix whose (i, j) entry is the iterated residue of psi'_{+-,j} at P_i."""
    out = np.empty((4, 4), dtype=complex)
    for i in range(1, 5):
        chart = corner_chart(i, cfg)
        for j in range(1, 5):
            out[i - 1, j - 1] = numeric_residue(
                lambda u1, u2, n=j: g_corner_raw(n, u1, u2, cfg), chart
            )
    return out


def residue_table(m: int, cfg: ProblemConfig) -> Tuple[complex, complex]:
    """Residues of psi_{+-,m} taken along u1 = -u2 (at (-w_m, w_m)) and along u1 = u2 (at (w_m, w_m))."""
    _check_range("m", m, 4)
    plus, minus = table_charts(m, cfg)

    def corner_form(u1, u2):
        return g_corner(m, u1, u2, cfg)

    # H+ and H- both pass through the representative, so the limit must be nested
    return nested_residue(corner_form, plus), nested_residue(corner_form, minus)


def expected_residue_table(m: int, cfg: ProblemConfig) -> Tuple[complex, complex]:
    """Closed-form values of the residue table."""
    lam1, _ = _lambdas(cfg)
    first = 1 + 0j if m in (1, 2) else complex(np.exp(-2j * np.pi * lam1))
    return first, -1 + 0j


def _factors(index: BasisIndex, cfg: ProblemConfig) -> List[Tuple[int, int, complex]]:
    """(coefficient of u1, coefficient of u2, lambda) of every s-factor of g_*."""
    lam1, lam2 = _lambdas(cfg)
    if index.kind is IndexKind.POINT:
        return [(1, 0, lam1), (0, 1, lam2)]
    if index.kind is IndexKind.ROW_PM:
        sign = index.sign
        return [(1, 0, lam1 - sign * lam2), (1, sign, sign * lam2)]
    if index.kind is IndexKind.COL_PM:
        sign = index.sign
        return [(1, sign, lam1), (0, 1, lam2 - sign * lam1)]
    raise ValidationError("Corner forms have no single factor list", field="kind")


def _raw_corner_multiplier(m: int, cfg: ProblemConfig, shift: PeriodShift) -> complex:
    a_m, b_m = _corner_parameters(m, cfg)
    factors = [(1, 1, a_m), (1, -1, b_m)]
    value = _product_multiplier(factors, shift)
    if m in (3, 4) and shift is PeriodShift.U1_TAU:
        value *= np.exp(-2j * np.pi * _tau(cfg))
    return complex(value)


def _product_multiplier(factors: List[Tuple[int, int, complex]], shift: PeriodShift) -> complex:
    if not shift.is_tau:
        return 1 + 0j
    value = 1 + 0j
    for coefficient_u1, coefficient_u2, lam in factors:
        n = coefficient_u1 if shift.variable == 1 else coefficient_u2
        value *= np.exp(2j * np.pi * n * lam)
    return complex(value)


def form_multiplier(index: BasisIndex, cfg: ProblemConfig, shift: PeriodShift) -> complex:
    """g_*(u + period) / g_*(u), the product of the s-factor multipliers.

    The raw corner forms all share one multiplier, so it carries over to the
    M^{-1} combinations.
    """
    if index.kind is IndexKind.CORNER:
        values = [_raw_corner_multiplier(n, cfg, shift) for n in range(1, 5)]
        if not np.allclose(values, values[0], rtol=1e-12, atol=0):
            raise ValidationError("Raw corner forms have different multipliers", field="m")
        return values[0]
    return _product_multiplier(_factors(index, cfg), shift)


def residue_pattern(cfg: ProblemConfig) -> Dict[str, np.ndarray]:
    """Numeric iterated residues of every basis form at every designated point.

    Rows follow the basis order of the forms, columns the basis order of the points;
    the expected pattern is the identity.
    """
    indices = psi_index_set(cfg)
    charts = intersection_charts(cfg)
    values = np.empty((len(indices), len(charts)), dtype=complex)
    for row, index in enumerate(indices):
        for column, chart in enumerate(charts):
            values[row, column] = iterated_residue(index, chart, cfg)
    return {"values": values, "labels": np.array([index.label for index in indices])}
