"""
Residual checks for the theta-function identities the connection is built from.

Every check evaluates both sides of one identity at a sampled point and returns
|LHS - RHS| scaled by max(1, |LHS|, |RHS|, largest single term). Samplers draw
points in the fundamental cell and reject any draw that puts a rho or s argument
within the rejection margin of the lattice, so checks never see NearSingular.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .basis_forms import ell, g_col_pm, g_corner, g_point, g_row_pm, quarter_inverse
from .config import (
    SUM_TOLERANCE,
    PeriodShift,
    derive_lambda,
    half_periods,
    period_multiplier,
    varpi,
)
from .elliptic_kernel import distance_to_lattice, rho, s_func, theta1, theta1_log_multiplier
from .logging.logger import get_logger
from .models.exceptions import ValidationError
from .models.problem import ProblemConfig
from .models.results import Residual

logger = get_logger(__name__)

RELATIVE_TOLERANCE = 1e-9
REJECTION_MARGIN = 1e-3
DERIVATIVE_MARGIN = 0.05
CAUCHY_RADIUS = 1e-2
CAUCHY_NODES = 32
MAX_ATTEMPTS = 10000

PI_I = 1j * np.pi


def _residual(lhs_terms: Sequence[complex], rhs_terms: Sequence[complex]) -> float:
    lhs = complex(sum(lhs_terms))
    rhs = complex(sum(rhs_terms))
    scale = max([1.0, abs(lhs), abs(rhs)] + [abs(complex(z)) for z in list(lhs_terms) + list(rhs_terms)])
    return float(abs(lhs - rhs) / scale)


def _check_sign(sign: int) -> None:
    if sign not in (1, -1):
        raise ValidationError(f"sign must be +1 or -1, got {sign}", field="sign")


def cauchy_derivative(func: Callable[[np.ndarray], np.ndarray], z: complex,
                      radius: float = CAUCHY_RADIUS, nodes: int = CAUCHY_NODES) -> complex:
    """f'(z) from the trapezoidal rule on a circle; func is called once on all nodes."""
    roots = np.exp(2j * np.pi * np.arange(nodes) / nodes)
    values = np.asarray(func(z + radius * roots), dtype=complex)
    return complex(np.mean(values / roots) / radius)


# basic formulas

def check_rho_period(u: complex, cfg: ProblemConfig) -> np.ndarray:
    """rho(u + 1) = rho(u) and rho(u + tau) = rho(u) - 2 pi i."""
    tau = cfg.tau_value
    base = rho(u, tau)
    return np.array([
        _residual([rho(u + 1, tau)], [base]),
        _residual([rho(u + tau, tau)], [base, -2 * PI_I]),
    ])


def check_s_reflection(u: complex, lam: complex, cfg: ProblemConfig) -> float:
    """s(-u; lambda) = -s(u; -lambda)."""
    tau = cfg.tau_value
    return _residual([s_func(-u, lam, tau)], [-s_func(u, -lam, tau)])


def check_s_diff_u(u: complex, lam: complex, cfg: ProblemConfig) -> float:
    """d/du s(u; lambda) = (rho(u - lambda) - rho(u)) s(u; lambda)."""
    tau = cfg.tau_value
    lhs = cauchy_derivative(lambda z: s_func(z, lam, tau), u)
    value = s_func(u, lam, tau)
    return _residual([lhs], [rho(u - lam, tau) * value, -rho(u, tau) * value])


def check_s_diff_lambda(u: complex, lam: complex, cfg: ProblemConfig) -> float:
    """d/dlambda s(u; lambda) = -(rho(u - lambda) + rho(lambda)) s(u; lambda)."""
    tau = cfg.tau_value
    lhs = cauchy_derivative(lambda z: s_func(u, z, tau), lam)
    value = s_func(u, lam, tau)
    return _residual([lhs], [-rho(u - lam, tau) * value, -rho(lam, tau) * value])


def check_rho_half_periods(cfg: ProblemConfig) -> np.ndarray:
    """rho(1/2) = 0 and rho(tau/2) = rho((1 + tau)/2) = -pi i."""
    tau = cfg.tau_value
    _, w2, w3, w4 = half_periods(tau)
    return np.array([
        _residual([rho(w2, tau)], [0j]),
        _residual([rho(w3, tau)], [-PI_I]),
        _residual([rho(w4, tau)], [-PI_I]),
    ])


def check_rho_mirror(m: int, t: complex, cfg: ProblemConfig) -> float:
    """rho(w_m + t) + rho(w_m - t) = 2 varpi_m for m = 2, 3, 4."""
    if m not in (2, 3, 4):
        raise ValidationError(f"Mirror identity holds for m in 2..4, got {m}", field="m")
    tau = cfg.tau_value
    w = half_periods(tau)[m - 1]
    return _residual([rho(w + t, tau), rho(w - t, tau)], [2 * varpi(m)])


def check_mano_38(w: complex, t_j: complex, t_k: complex, lam: complex, cfg: ProblemConfig) -> float:
    """Three-point relation between s and rho with a common lambda."""
    tau = cfg.tau_value
    s_wk = s_func(w - t_k, lam, tau)
    lhs = [s_wk * rho(w - t_j, tau), s_wk * rho(t_j - t_k, tau),
           -s_wk * rho(w - t_k - lam, tau), -s_wk * rho(lam, tau)]
    rhs = [s_func(w - t_j, lam, tau) * s_func(t_j - t_k, lam, tau)]
    return _residual(lhs, rhs)


def check_mano_39(w: complex, points: Sequence[complex], weights: Sequence[complex], j: int,
                  lam: complex, cfg: ProblemConfig) -> float:
    """Weighted sum form of the three-point relation; the weights must sum to zero."""
    if len(points) != len(weights):
        raise ValidationError("points and weights differ in length", field="weights")
    if abs(sum(weights)) > SUM_TOLERANCE:
        raise ValidationError(f"weights must sum to zero, got {complex(sum(weights))}", field="weights")
    if not 1 <= j <= len(points):
        raise ValidationError(f"j must be in 1..{len(points)}, got {j}", field="j")
    tau = cfg.tau_value
    t_j, c_j = points[j - 1], weights[j - 1]
    s_wj = s_func(w - t_j, lam, tau)
    lhs, rhs = [], []
    for k, (t_k, c_k) in enumerate(zip(points, weights), start=1):
        if k == j:
            continue
        lhs.append(s_wj * c_k * (rho(w - t_k, tau) + rho(t_k - t_j, tau)))
        rhs.append(c_k * s_func(t_k - t_j, lam, tau) * s_func(w - t_k, lam, tau))
    lhs.append(s_wj * c_j * (rho(w - t_j - lam, tau) + rho(lam, tau)))
    return _residual(lhs, rhs)


def check_frv(u: complex, s_: complex, t: complex, lam1: complex, lam2: complex,
              cfg: ProblemConfig) -> float:
    """Three-term Fay-type relation among products of two s factors."""
    tau = cfg.tau_value
    terms = [
        s_func(t - u, lam1 + lam2, tau) * s_func(s_ - t, lam2, tau),
        -s_func(s_ - u, lam2, tau) * s_func(t - u, lam1, tau),
        s_func(t - s_, lam1, tau) * s_func(s_ - u, lam1 + lam2, tau),
    ]
    return _residual(terms, [0j])


# formulas behind the rows of the connection

def check_psi_pmj(sign: int, u1: complex, u2: complex, t1p: complex, t2j: complex,
                  cfg: ProblemConfig) -> float:
    """Product relation used for the rows F_{+-j} of d/dt_1p."""
    _check_sign(sign)
    tau = cfg.tau_value
    lam1, lam2 = derive_lambda(cfg)
    mu = lam2 - sign * lam1
    s = lambda x, lam: s_func(x, lam, tau)
    lhs = [
        s(-sign * t1p - t2j, mu) * s(u2 + sign * t1p, mu) * s(u1 + sign * u2, lam1),
        -s(u1 - t1p, lam1) * s(u2 + sign * t1p, sign * lam1) * s(u2 - t2j, mu),
    ]
    rhs = [
        -s(t2j + sign * t1p, sign * lam1) * s(u1 - t1p, lam1) * s(u2 - t2j, lam2),
        -sign * s(-sign * t1p - t2j, mu) * s(u1 - t1p, lam1 - sign * lam2) * s(u1 + sign * u2, sign * lam2),
    ]
    return _residual(lhs, rhs)


_CORNER_TAIL_SIGNS = {
    1: (-1, -1, -1, -1),
    2: (-1, -1, 1, 1),
    3: (-1, 1, -1, 1),
    4: (-1, 1, 1, -1),
}


def check_G(m: int, u1: complex, u2: complex, p: int, cfg: ProblemConfig) -> float:
    """Expansion of G_m (times exp(-2 pi i u1) for m = 3, 4) in g_{p+-} and the corner forms."""
    if m not in (1, 2, 3, 4):
        raise ValidationError(f"Corner index must be 1..4, got {m}", field="m")
    if not 1 <= p <= cfg.n1:
        raise ValidationError(f"p must be in 1..{cfg.n1}, got {p}", field="p")
    tau = cfg.tau_value
    lam1, lam2 = derive_lambda(cfg)
    t = cfg.t1[p - 1]
    w1, w2, w3, w4 = half_periods(tau)
    w = (w1, w2, w3, w4)[m - 1]
    a_m = (lam1 + lam2 + 2 * w) / 2
    b_m = (lam1 - lam2 + 2 * w) / 2
    s = lambda x, lam: s_func(x, lam, tau)

    both = s(u1 + u2, a_m) * s(u1 - u2, b_m)
    lhs = [
        -s(u1 - w, a_m) * s(w + u2, a_m) * s(u1 - u2, b_m),
        -s(u1 - w, b_m) * s(w - u2, b_m) * s(u1 + u2, a_m),
        2 * (rho(u1 - w, tau) + varpi(m) - rho(u1 - t, tau)) * both,
    ]
    prefactor = 1 + 0j
    if m in (3, 4):
        lhs = [np.exp(-2j * np.pi * u1) * term for term in lhs]
        prefactor = np.exp(-2j * np.pi * t)

    shift = 2 * w
    ell_value = ell(cfg)
    signs = _CORNER_TAIL_SIGNS[m]
    coefficients = (
        rho(t, tau),
        rho(t - w2, tau),
        ell_value * (rho(t - w3, tau) - PI_I),
        ell_value * (rho(t - w4, tau) - PI_I),
    )
    rhs = [
        -2 * prefactor * s(2 * t, (lam1 - lam2 + shift) / 2) * g_row_pm(p, 1, u1, u2, cfg),
        2 * prefactor * s(2 * t, (lam1 + lam2 + shift) / 2) * g_row_pm(p, -1, u1, u2, cfg),
    ]
    for k in range(1, 5):
        rhs.append(signs[k - 1] * coefficients[k - 1] * g_corner(k, u1, u2, cfg))
    return _residual(lhs, rhs)


def check_psi_pj(u1: complex, u2: complex, t1p: complex, t2j: complex, cfg: ProblemConfig) -> float:
    """Product relation used for the rows F_pj of d/dt_1p."""
    tau = cfg.tau_value
    lam1, lam2 = derive_lambda(cfg)
    s = lambda x, lam: s_func(x, lam, tau)
    s_2j = s(u2 - t2j, lam2)
    lhs = [
        s(u2 - t1p, lam1) * s(u1 - u2, lam1) * s_2j,
        s(-u2 - t1p, lam1) * s(u1 + u2, lam1) * s_2j,
        -(rho(u2 - t1p, tau) + rho(-u2 - t1p, tau)) * s(u1 - t1p, lam1) * s_2j,
    ]
    rhs = [
        (rho(t1p - t2j, tau) + rho(t1p + t2j, tau)) * s(u1 - t1p, lam1) * s_2j,
        s(-t2j - t1p, lam1) * s(u1 + u2, lam1) * s(u2 - t2j, lam2 - lam1),
        s(t2j - t1p, lam1) * s(u1 - u2, lam1) * s(u2 - t2j, lam2 + lam1),
        s(-t1p - t2j, lam2) * s(u1 - t1p, lam1 - lam2) * s(u1 + u2, lam2),
        s(t1p - t2j, lam2) * s(u1 - t1p, lam1 + lam2) * s(u1 - u2, -lam2),
    ]
    return _residual(lhs, rhs)


def check_psi_ppm(sign: int, u1: complex, u2: complex, cfg: ProblemConfig, p: int = 1) -> float:
    """Expansion used for the rows F_{p+-} of d/dt_1p, with a_+ = e(lambda2), a_- = e(lambda1 + lambda2)."""
    _check_sign(sign)
    if not 1 <= p <= cfg.n1:
        raise ValidationError(f"p must be in 1..{cfg.n1}, got {p}", field="p")
    tau = cfg.tau_value
    lam1, lam2 = derive_lambda(cfg)
    c, c2, t2 = cfg.c, cfg.c2, cfg.t2
    t = cfg.t1[p - 1]
    mu = lam1 - sign * lam2
    a = np.exp(2j * np.pi * lam2) if sign == 1 else np.exp(2j * np.pi * (lam1 + lam2))
    _, w2, w3, w4 = half_periods(tau)
    s = lambda x, lam: s_func(x, lam, tau)

    outer = s(u1 + sign * u2, sign * lam2)
    s_t = s(u1 - t, mu)
    lhs = [-cj * rho(u2 - tj, tau) * s_t * outer for cj, tj in zip(c2, t2)]
    lhs.append(-sign * 2 * c * rho(sign * u2 - t, tau) * s_t * outer)
    lhs.append(sign * 2 * c * s(u1 - sign * u2, mu) * s(sign * u2 - t, mu) * outer)

    rhs = []
    for j, (cj, tj) in enumerate(zip(c2, t2), start=1):
        rhs.append(-cj * s(t + sign * tj, sign * lam2) * g_point(p, j, u1, u2, cfg))
        rhs.append(-cj * s(-sign * tj - t, mu) * g_col_pm(sign, j, u1, u2, cfg))
    diagonal = sum(cj * rho(t + sign * tj, tau) for cj, tj in zip(c2, t2)) + 2 * c * rho(2 * t, tau)
    rhs.append(diagonal * g_row_pm(p, sign, u1, u2, cfg))
    rhs.append(-2 * c * s(2 * t, sign * lam2) * g_row_pm(p, -sign, u1, u2, cfg))
    rhs.append(-sign * c * s(-t, mu) * g_corner(1, u1, u2, cfg))
    rhs.append(-sign * c * s(sign * w2 - t, mu) * g_corner(2, u1, u2, cfg))
    rhs.append(-sign * a * c * s(sign * w3 - t, mu) * g_corner(3, u1, u2, cfg))
    rhs.append(-sign * a * c * s(sign * w4 - t, mu) * g_corner(4, u1, u2, cfg))
    return _residual(lhs, rhs)


def check_lv_quarter(t: complex, lam: complex, cfg: ProblemConfig) -> np.ndarray:
    """Quarter-period expansion of s(t - w_m; lambda) through s(2t; .), one residual per m.

    The inverse residue matrix is taken with ell = exp(pi i lambda), the single
    parameter of the kernels on both sides.
    """
    tau = cfg.tau_value
    _, w2, w3, w4 = half_periods(tau)
    twist = np.exp(-2j * np.pi * t)
    doubled = np.array([
        2 * s_func(2 * t, lam / 2, tau),
        2 * s_func(2 * t, (lam + 1) / 2, tau),
        2 * twist * s_func(2 * t, (lam + tau) / 2, tau),
        2 * twist * s_func(2 * t, (lam + 1 + tau) / 2, tau),
    ])
    inverse = quarter_inverse(np.exp(PI_I * lam))
    targets = [s_func(t - w, lam, tau) for w in (0j, w2, w3, w4)]
    return np.array([
        _residual(list(doubled * inverse[:, m]), [targets[m]]) for m in range(4)
    ])


def _shift_factors(cfg: ProblemConfig, u1: complex, u2: complex,
                   shift: PeriodShift) -> List[Tuple[complex, complex, int]]:
    """(exponent, theta argument, direction) for every theta factor of T the shift moves."""
    if shift.variable == 1:
        factors = [(cfg.c, u1 - u2, 1), (cfg.c, u1 + u2, 1)]
        factors += [(cj, u1 - tj, 1) for cj, tj in zip(cfg.c1, cfg.t1)]
    else:
        factors = [(cfg.c, u1 - u2, -1), (cfg.c, u1 + u2, 1)]
        factors += [(cj, u2 - tj, 1) for cj, tj in zip(cfg.c2, cfg.t2)]
    return factors


def check_T_periods(u1: complex, u2: complex, cfg: ProblemConfig) -> np.ndarray:
    """The four period multipliers of T, one residual per shift.

    Each theta factor is moved numerically and compared with its exact
    quasi-periodicity factor; the resulting multiplier of T, times the
    e^{2 pi i lambda_k} twist for tau-shifts, is compared with period_multiplier.
    """
    tau = cfg.tau_value
    lam = derive_lambda(cfg)
    out = []
    for shift in PeriodShift:
        step = tau if shift.is_tau else 1.0
        log_multiplier = 2j * np.pi * cfg.c0(shift.variable) * step
        factor_residual = 0.0
        for exponent, v, direction in _shift_factors(cfg, u1, u2, shift):
            a, b = (direction, 0) if not shift.is_tau else (0, direction)
            log_factor = theta1_log_multiplier(v, tau, a, b)
            ratio = theta1(v + direction * step, tau) / theta1(v, tau)
            factor_residual = max(factor_residual, _residual([ratio], [np.exp(log_factor)]))
            log_multiplier += exponent * log_factor
        if shift.is_tau:
            log_multiplier += 2j * np.pi * lam[shift.variable - 1]
        multiplier_residual = _residual([np.exp(log_multiplier)], [period_multiplier(cfg, shift)])
        out.append(max(factor_residual, multiplier_residual))
    return np.array(out)


# sampling

class _Sampler:
    """Rejection sampler in the fundamental cell."""

    def __init__(self, rng: np.random.Generator, cfg: ProblemConfig, margin: float):
        self.rng = rng
        self.cfg = cfg
        self.tau = cfg.tau_value
        self.margin = margin
        self.rejections = 0

    def cell(self) -> complex:
        x, y = self.rng.uniform(0.0, 1.0, size=2)
        return complex(x + y * self.tau)

    def index(self, n: int) -> int:
        return int(self.rng.integers(1, n + 1))

    def draw(self, build: Callable[[], Tuple[Dict[str, Any], Iterable[complex]]],
             margin: Optional[float] = None) -> Dict[str, Any]:
        limit = self.margin if margin is None else margin
        for _ in range(MAX_ATTEMPTS):
            sample, critical = build()
            critical = np.array(list(critical), dtype=complex)
            if critical.size == 0 or np.min(distance_to_lattice(critical, self.tau)) > limit:
                return sample
            self.rejections += 1
        raise ValidationError(f"No admissible sample after {MAX_ATTEMPTS} attempts", field="margin")


def _sample_u(sampler: _Sampler) -> Dict[str, Any]:
    def build():
        u = sampler.cell()
        return {"u": u}, [u]
    return sampler.draw(build)


def _sample_u_lam(sampler: _Sampler, margin: Optional[float] = None) -> Dict[str, Any]:
    def build():
        u, lam = sampler.cell(), sampler.cell()
        return {"u": u, "lam": lam}, [u, lam, u - lam]
    return sampler.draw(build, margin)


def _sample_mirror(sampler: _Sampler) -> Dict[str, Any]:
    w = half_periods(sampler.tau)

    def build():
        m = int(sampler.rng.integers(2, 5))
        t = sampler.cell()
        return {"m": m, "t": t}, [w[m - 1] + t, w[m - 1] - t]
    return sampler.draw(build)


def _sample_mano_38(sampler: _Sampler) -> Dict[str, Any]:
    def build():
        w, t_j, t_k, lam = (sampler.cell() for _ in range(4))
        critical = [w - t_k, w - t_j, t_j - t_k, w - t_k - lam, lam]
        return {"w": w, "t_j": t_j, "t_k": t_k, "lam": lam}, critical
    return sampler.draw(build)


def _sample_mano_39(sampler: _Sampler) -> Dict[str, Any]:
    def build():
        points = [sampler.cell() for _ in range(3)]
        weights = [complex(*sampler.rng.uniform(-1, 1, size=2)) for _ in range(2)]
        weights.append(-weights[0] - weights[1])
        w, lam = sampler.cell(), sampler.cell()
        j = sampler.index(3)
        t_j = points[j - 1]
        critical = [w - t for t in points] + [t - t_j for t in points if t != t_j]
        critical += [w - t_j - lam, lam]
        return {"w": w, "points": points, "weights": weights, "j": j, "lam": lam}, critical
    return sampler.draw(build)


def _sample_frv(sampler: _Sampler) -> Dict[str, Any]:
    def build():
        u, s_, t, lam1, lam2 = (sampler.cell() for _ in range(5))
        critical = [t - u, s_ - t, s_ - u, lam1, lam2, lam1 + lam2]
        return {"u": u, "s_": s_, "t": t, "lam1": lam1, "lam2": lam2}, critical
    return sampler.draw(build)


def _hyperplanes(cfg: ProblemConfig, u1: complex, u2: complex) -> List[complex]:
    return ([u1 + u2, u1 - u2] + [u1 - t for t in cfg.t1] + [u2 - t for t in cfg.t2])


def _sample_psi_pmj(sampler: _Sampler) -> Dict[str, Any]:
    cfg = sampler.cfg

    def build():
        u1, u2 = sampler.cell(), sampler.cell()
        p, j = sampler.index(cfg.n1), sampler.index(cfg.n2)
        t1p = cfg.t1[p - 1]
        critical = _hyperplanes(cfg, u1, u2) + [u2 + t1p, u2 - t1p]
        return {"u1": u1, "u2": u2, "t1p": t1p, "t2j": cfg.t2[j - 1]}, critical
    return sampler.draw(build)


def _sample_corner(sampler: _Sampler) -> Dict[str, Any]:
    cfg = sampler.cfg
    w = half_periods(sampler.tau)

    def build():
        u1, u2 = sampler.cell(), sampler.cell()
        critical = _hyperplanes(cfg, u1, u2)
        critical += [u1 - wm for wm in w] + [u2 - wm for wm in w] + [u2 + wm for wm in w]
        return {"u1": u1, "u2": u2, "p": sampler.index(cfg.n1)}, critical
    return sampler.draw(build)


def _sample_psi_pj(sampler: _Sampler) -> Dict[str, Any]:
    cfg = sampler.cfg

    def build():
        u1, u2 = sampler.cell(), sampler.cell()
        p, j = sampler.index(cfg.n1), sampler.index(cfg.n2)
        t1p = cfg.t1[p - 1]
        critical = _hyperplanes(cfg, u1, u2) + [u2 - t1p, u2 + t1p]
        return {"u1": u1, "u2": u2, "t1p": t1p, "t2j": cfg.t2[j - 1]}, critical
    return sampler.draw(build)


def _sample_psi_ppm(sampler: _Sampler) -> Dict[str, Any]:
    cfg = sampler.cfg

    def build():
        u1, u2 = sampler.cell(), sampler.cell()
        p = sampler.index(cfg.n1)
        t1p = cfg.t1[p - 1]
        critical = _hyperplanes(cfg, u1, u2) + [u2 - t1p, u2 + t1p]
        return {"u1": u1, "u2": u2, "p": p}, critical
    return sampler.draw(build)


def _sample_lv_quarter(sampler: _Sampler) -> Dict[str, Any]:
    w = half_periods(sampler.tau)

    def build():
        t, lam = sampler.cell(), sampler.cell()
        critical = [t - wm for wm in w] + [(lam + 2 * wm) / 2 for wm in w] + [lam]
        return {"t": t, "lam": lam}, critical
    return sampler.draw(build)


def _sample_T(sampler: _Sampler) -> Dict[str, Any]:
    cfg = sampler.cfg

    def build():
        u1, u2 = sampler.cell(), sampler.cell()
        return {"u1": u1, "u2": u2}, _hyperplanes(cfg, u1, u2)
    return sampler.draw(build)


# registry

@dataclass(frozen=True)
class IdentityCheck:
    """One identity: a sampler of admissible inputs and a residual evaluator."""

    check_id: str
    sampler: Callable[[_Sampler], Dict[str, Any]]
    evaluate: Callable[..., Any]
    components: Tuple[str, ...] = ()

    def run(self, sample: Dict[str, Any], cfg: ProblemConfig) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.evaluate(cfg=cfg, **sample), dtype=float))


def _with_sign(func: Callable, sign: int) -> Callable:
    def evaluate(cfg: ProblemConfig, **sample):
        return func(sign, cfg=cfg, **sample)
    return evaluate


def _with_corner(m: int) -> Callable:
    def evaluate(cfg: ProblemConfig, u1: complex, u2: complex, p: int):
        return check_G(m, u1, u2, p, cfg)
    return evaluate


def _psi_ppm(sign: int) -> Callable:
    def evaluate(cfg: ProblemConfig, u1: complex, u2: complex, p: int):
        return check_psi_ppm(sign, u1, u2, cfg, p=p)
    return evaluate


_SHIFT_NAMES = tuple(shift.value for shift in PeriodShift)

CHECKS: Tuple[IdentityCheck, ...] = (
    IdentityCheck("rho_period", _sample_u, check_rho_period, ("u+1", "u+tau")),
    IdentityCheck("s_reflection", _sample_u_lam, check_s_reflection),
    IdentityCheck("s_diff_u", lambda smp: _sample_u_lam(smp, DERIVATIVE_MARGIN), check_s_diff_u),
    IdentityCheck("s_diff_lambda", lambda smp: _sample_u_lam(smp, DERIVATIVE_MARGIN), check_s_diff_lambda),
    IdentityCheck("rho_half_periods", lambda smp: {}, check_rho_half_periods, ("1/2", "tau/2", "(1+tau)/2")),
    IdentityCheck("rho_mirror", _sample_mirror, check_rho_mirror),
    IdentityCheck("mano_38", _sample_mano_38, check_mano_38),
    IdentityCheck("mano_39", _sample_mano_39, check_mano_39),
    IdentityCheck("frv", _sample_frv, check_frv),
    IdentityCheck("psi_pmj+", _sample_psi_pmj, _with_sign(check_psi_pmj, 1)),
    IdentityCheck("psi_pmj-", _sample_psi_pmj, _with_sign(check_psi_pmj, -1)),
    IdentityCheck("G_1", _sample_corner, _with_corner(1)),
    IdentityCheck("G_2", _sample_corner, _with_corner(2)),
    IdentityCheck("G_3", _sample_corner, _with_corner(3)),
    IdentityCheck("G_4", _sample_corner, _with_corner(4)),
    IdentityCheck("psi_pj", _sample_psi_pj, check_psi_pj),
    IdentityCheck("psi_ppm+", _sample_psi_ppm, _psi_ppm(1)),
    IdentityCheck("psi_ppm-", _sample_psi_ppm, _psi_ppm(-1)),
    IdentityCheck("lv_quarter", _sample_lv_quarter, check_lv_quarter, ("m=1", "m=2", "m=3", "m=4")),
    IdentityCheck("T_periods", _sample_T, check_T_periods, _SHIFT_NAMES),
)


def check_ids() -> List[str]:
    return sorted(check.check_id for check in CHECKS)


def _select(ids: Optional[Sequence[str]]) -> List[IdentityCheck]:
    if ids is None:
        return list(CHECKS)
    known = {check.check_id: check for check in CHECKS}
    unknown = [name for name in ids if name not in known]
    if unknown:
        raise ValidationError(f"Unknown identity checks: {', '.join(unknown)}", field="checks")
    return [known[name] for name in ids]


def draw_samples(cfg: ProblemConfig, rng: np.random.Generator, samples: int,
                 margin: float = REJECTION_MARGIN,
                 checks: Optional[Sequence[str]] = None) -> Dict[str, List[Dict[str, Any]]]:
    """Samples for every selected check, drawn sequentially from rng in registry order."""
    if samples < 1:
        raise ValidationError(f"samples must be at least 1, got {samples}", field="samples")
    sampler = _Sampler(rng, cfg, margin)
    drawn = {}
    for check in _select(checks):
        drawn[check.check_id] = [check.sampler(sampler) for _ in range(samples)]
    logger.debug("Identity samples drawn", samples=samples, rejections=sampler.rejections)
    return drawn


def _evaluate_check(check: IdentityCheck, samples: List[Dict[str, Any]], cfg: ProblemConfig,
                    tolerance: float) -> Residual:
    worst_value, worst_sample, worst_component = -1.0, {}, None
    for sample in samples:
        values = check.run(sample, cfg)
        values = np.where(np.isfinite(values), values, np.inf)
        position = int(np.argmax(values))
        if values[position] > worst_value:
            worst_value = float(values[position])
            worst_sample = sample
            if check.components:
                worst_component = check.components[position]
    return Residual(
        check_id=check.check_id,
        residual=worst_value,
        tolerance=tolerance,
        sample={key: value for key, value in worst_sample.items()
                if isinstance(value, (int, complex, float))},
        component=worst_component,
    )


def run_suite(cfg: ProblemConfig, rng: np.random.Generator, samples: int = 100,
              tolerance: float = RELATIVE_TOLERANCE, workers: Optional[int] = None,
              margin: float = REJECTION_MARGIN,
              checks: Optional[Sequence[str]] = None) -> List[Residual]:
    """Run the selected checks and return the worst residual of each, sorted by id.

    Samples are drawn before any evaluation, so the result does not depend on
    the number of workers.
    """
    drawn = draw_samples(cfg, rng, samples, margin, checks)
    selected = _select(checks)
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="identity-check") as executor:
        futures = [
            executor.submit(_evaluate_check, check, drawn[check.check_id], cfg, tolerance)
            for check in selected
        ]
        results = [future.result() for future in futures]
    return sorted(results, key=lambda result: result.check_id)
