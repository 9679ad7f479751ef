"""
Gauss-Manin connection matrices A_kp(t) of the system d/dt_kp F = A_kp F.

Each row of A_1p and A_2q is a literal transcription of the corresponding
differential equation; row * holds the coefficient of F_dagger in d_kp F_*.
Every rho and s coefficient goes through one helper that names the term when
its argument is singular.

The corner rows d_kp F_{+-,m} are the ones fixed by iterated residues of
nabla_kp psi_{+-,m}: M^{-1} depends on lambda through ell, so the diagonal is
c_kp rho(t_kp - w_m) for every m, and for m = 3, 4 the H+ coupling carries
_corner_twist. See DESIGN.md.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

import numpy as np

from .basis_forms import intersection_matrix
from .config import derive_lambda, half_periods, psi_index_set, reciprocal, swapped, with_point
from .elliptic_kernel import rho, s_func
from .logging.logger import get_logger
from .models.exceptions import NearSingular, ValidationError
from .models.problem import BasisIndex, IndexKind, ProblemConfig
from .models.results import ConnectionMatrix

logger = get_logger(__name__)

NABLA_H = 1e-6
FLATNESS_H = 1e-5

Derivative = Tuple[int, int]


class _KernelTerms:
    """rho / s evaluated at one configuration, with term names on failure."""

    def __init__(self, cfg: ProblemConfig):
        self.cfg = cfg
        self.tau = cfg.tau_value
        self.lam1, self.lam2 = derive_lambda(cfg)

    def rho(self, argument: complex, term: str) -> complex:
        try:
            return rho(argument, self.tau)
        except NearSingular as e:
            raise NearSingular(term, argument=complex(argument), distance=e.details.get("distance")) from e

    def s(self, argument: complex, lam: complex, term: str) -> complex:
        try:
            return s_func(argument, lam, self.tau)
        except NearSingular as e:
            raise NearSingular(term, argument=complex(argument), distance=e.details.get("distance")) from e


class _RowBuilder:
    """Accumulates coefficients into a matrix addressed by BasisIndex."""

    def __init__(self, legend: List[BasisIndex]):
        self.legend = legend
        self.position = {index: n for n, index in enumerate(legend)}
        self.entries = np.zeros((len(legend), len(legend)), dtype=complex)

    def add(self, row: BasisIndex, column: BasisIndex, value: complex) -> None:
        self.entries[self.position[row], self.position[column]] += value


def _sign_name(sign: int) -> str:
    return "+" if sign == 1 else "-"


def _point_snapshot(cfg: ProblemConfig) -> Dict[str, List[complex]]:
    return {"t1": list(cfg.t1), "t2": list(cfg.t2)}


def _corner_twist(m: int, lam_other: complex) -> complex:
    """exp(-2 pi i lambda_other) for m = 3, 4, else 1.

    The corner forms are normalized with ell = exp(pi i (lambda1 + lambda2)), while the
    quarter-period expansion of the H+ coupling is normalized with exp(pi i (lambda1 - lambda2)).
    """
    return 1 + 0j if m in (1, 2) else complex(np.exp(-2j * np.pi * lam_other))


def _check_derivative(k: int, p: int, cfg: ProblemConfig) -> None:
    if k not in (1, 2):
        raise ValidationError(f"Derivative variable must be 1 or 2, got {k}", field="k")
    n = cfg.n1 if k == 1 else cfg.n2
    if not 1 <= p <= n:
        raise ValidationError(f"Derivative index must be in 1..{n}, got {p}", field="p")


def assemble_A1p(p: int, cfg: ProblemConfig) -> ConnectionMatrix:
    """Connection matrix of d/dt_1p."""
    _check_derivative(1, p, cfg)
    terms = _KernelTerms(cfg)
    legend = psi_index_set(cfg)
    rows = _RowBuilder(legend)

    P, Pt, Cr = BasisIndex.point, BasisIndex.row_pm, BasisIndex.col_pm
    lam1, lam2 = terms.lam1, terms.lam2
    tau = terms.tau
    c, c10, c20 = cfg.c, cfg.c10, cfg.c20
    c1, c2, t1, t2 = cfg.c1, cfg.c2, cfg.t1, cfg.t2
    n1, n2 = cfg.n1, cfg.n2
    c1p, t1p = c1[p - 1], t1[p - 1]
    w = half_periods(tau)
    two_pi_i = 2j * np.pi
    others = [i for i in range(1, n1 + 1) if i != p]

    for i in others:
        ti = t1[i - 1]
        rho_pi = terms.rho(t1p - ti, f"rho(t1{p} - t1{i}) with colliding points")
        for j in range(1, n2 + 1):
            rows.add(P(i, j), P(i, j), c1p * rho_pi)
            rows.add(P(i, j), P(p, j), -c1p * terms.s(t1p - ti, lam1, f"s(t1{p} - t1{i}; lambda1)"))
        for sign in (1, -1):
            rows.add(Pt(i, sign), Pt(i, sign), c1p * rho_pi)
            rows.add(Pt(i, sign), Pt(p, sign), -c1p * terms.s(
                t1p - ti, lam1 - sign * lam2, f"s(t1{p} - t1{i}; lambda1 {_sign_name(-sign)} lambda2)"))

    for j in range(1, n2 + 1):
        tj = t2[j - 1]
        for sign in (1, -1):
            sn = _sign_name(sign)
            row = Cr(sign, j)
            rows.add(row, row, c1p * terms.rho(t1p + sign * tj, f"rho(t1{p} {sn} t2{j})"))
            rows.add(row, P(p, j), -sign * c1p * terms.s(
                tj + sign * t1p, sign * lam1, f"s(t2{j} {sn} t1{p}; {sn}lambda1)"))
            rows.add(row, Pt(p, sign), -sign * c1p * terms.s(
                -sign * t1p - tj, lam2 - sign * lam1, f"s({_sign_name(-sign)}t1{p} - t2{j}; lambda2 {_sign_name(-sign)} lambda1)"))

    for m in range(1, 5):
        corner = BasisIndex.corner(m)
        rows.add(corner, Pt(p, 1), c1p * _corner_twist(m, lam2) * terms.s(t1p - w[m - 1], lam1 - lam2, f"s(t1{p} - w{m}; lambda1 - lambda2)"))
        rows.add(corner, Pt(p, -1), -c1p * terms.s(t1p - w[m - 1], lam1 + lam2, f"s(t1{p} - w{m}; lambda1 + lambda2)"))
        rows.add(corner, corner, c1p * terms.rho(t1p - w[m - 1], f"rho(t1{p} - w{m})"))

    for j in range(1, n2 + 1):
        tj = t2[j - 1]
        row = P(p, j)
        diagonal = two_pi_i * c10
        diagonal += sum(c1[i - 1] * terms.rho(t1p - t1[i - 1], f"rho(t1{p} - t1{i})") for i in others)
        diagonal += c * (terms.rho(t1p - tj, f"rho(t1{p} - t2{j})") + terms.rho(t1p + tj, f"rho(t1{p} + t2{j})"))
        rows.add(row, row, diagonal)
        for i in others:
            rows.add(row, P(i, j), c1[i - 1] * terms.s(t1[i - 1] - t1p, lam1, f"s(t1{i} - t1{p}; lambda1)"))
        rows.add(row, Cr(1, j), c * terms.s(-tj - t1p, lam1, f"s(-t2{j} - t1{p}; lambda1)"))
        rows.add(row, Cr(-1, j), c * terms.s(tj - t1p, lam1, f"s(t2{j} - t1{p}; lambda1)"))
        rows.add(row, Pt(p, 1), c * terms.s(-t1p - tj, lam2, f"s(-t1{p} - t2{j}; lambda2)"))
        rows.add(row, Pt(p, -1), -c * terms.s(t1p - tj, lam2, f"s(t1{p} - t2{j}; lambda2)"))

    a = {1: np.exp(two_pi_i * lam2), -1: np.exp(two_pi_i * (lam1 + lam2))}
    for sign in (1, -1):
        sn = _sign_name(sign)
        row = Pt(p, sign)
        mu = lam1 - sign * lam2
        diagonal = two_pi_i * (c10 - sign * c20)
        diagonal -= sum(c1[i - 1] * terms.rho(t1[i - 1] - t1p, f"rho(t1{i} - t1{p})") for i in others)
        diagonal += sum(c2[j - 1] * terms.rho(t1p + sign * t2[j - 1], f"rho(t1{p} {sn} t2{j})")
                        for j in range(1, n2 + 1))
        diagonal += 2 * c * terms.rho(2 * t1p, f"rho(2 t1{p}) at a half period")
        rows.add(row, row, diagonal)
        rows.add(row, Pt(p, -sign), -2 * c * terms.s(2 * t1p, sign * lam2, f"s(2 t1{p}; {sn}lambda2)"))
        for i in others:
            rows.add(row, Pt(i, sign), c1[i - 1] * terms.s(t1[i - 1] - t1p, mu, f"s(t1{i} - t1{p}; lambda1 -+ lambda2)"))
        for j in range(1, n2 + 1):
            tj, cj = t2[j - 1], c2[j - 1]
            rows.add(row, P(p, j), -cj * terms.s(t1p + sign * tj, sign * lam2, f"s(t1{p} {sn} t2{j}; {sn}lambda2)"))
            rows.add(row, Cr(sign, j), -cj * terms.s(-sign * tj - t1p, mu, f"s(-+t2{j} - t1{p}; lambda1 -+ lambda2)"))
        shifts = (0, sign * 0.5, sign * tau / 2, sign * (1 + tau) / 2)
        weights = (1, 1, a[sign], a[sign])
        for m, (shift, weight) in enumerate(zip(shifts, weights), start=1):
            rows.add(row, BasisIndex.corner(m), -sign * weight * c * terms.s(
                shift - t1p, mu, f"s(w - t1{p}; lambda1 -+ lambda2) coupling to corner {m}"))

    logger.debug("Assembled connection matrix", k=1, p=p, size=len(legend))
    return ConnectionMatrix(deriv=(1, p), entries=rows.entries, legend=legend, at=_point_snapshot(cfg))


def assemble_A2q(q: int, cfg: ProblemConfig) -> ConnectionMatrix:
    """Connection matrix of d/dt_2q."""
    _check_derivative(2, q, cfg)
    terms = _KernelTerms(cfg)
    legend = psi_index_set(cfg)
    rows = _RowBuilder(legend)

    P, Pt, Cr = BasisIndex.point, BasisIndex.row_pm, BasisIndex.col_pm
    lam1, lam2 = terms.lam1, terms.lam2
    tau = terms.tau
    c, c10, c20 = cfg.c, cfg.c10, cfg.c20
    c1, c2, t1, t2 = cfg.c1, cfg.c2, cfg.t1, cfg.t2
    n1, n2 = cfg.n1, cfg.n2
    c2q, t2q = c2[q - 1], t2[q - 1]
    w = half_periods(tau)
    two_pi_i = 2j * np.pi
    others = [j for j in range(1, n2 + 1) if j != q]

    for j in others:
        tj = t2[j - 1]
        rho_qj = terms.rho(t2q - tj, f"rho(t2{q} - t2{j}) with colliding points")
        for i in range(1, n1 + 1):
            rows.add(P(i, j), P(i, j), c2q * rho_qj)
            rows.add(P(i, j), P(i, q), -c2q * terms.s(t2q - tj, lam2, f"s(t2{q} - t2{j}; lambda2)"))
        for sign in (1, -1):
            rows.add(Cr(sign, j), Cr(sign, j), c2q * rho_qj)
            rows.add(Cr(sign, j), Cr(sign, q), -c2q * terms.s(
                t2q - tj, lam2 - sign * lam1, f"s(t2{q} - t2{j}; lambda2 -+ lambda1)"))

    for i in range(1, n1 + 1):
        ti = t1[i - 1]
        for sign in (1, -1):
            sn = _sign_name(sign)
            row = Pt(i, sign)
            rows.add(row, row, c2q * terms.rho(t2q + sign * ti, f"rho(t2{q} {sn} t1{i})"))
            rows.add(row, P(i, q), -sign * c2q * terms.s(
                ti + sign * t2q, sign * lam2, f"s(t1{i} {sn} t2{q}; {sn}lambda2)"))
            rows.add(row, Cr(sign, q), -sign * c2q * terms.s(
                -sign * t2q - ti, lam1 - sign * lam2, f"s(-+t2{q} - t1{i}; lambda1 -+ lambda2)"))

    for m in range(1, 5):
        corner = BasisIndex.corner(m)
        rows.add(corner, Cr(1, q), -c2q * _corner_twist(m, lam1) * terms.s(t2q - w[m - 1], lam2 - lam1, f"s(t2{q} - w{m}; lambda2 - lambda1)"))
        rows.add(corner, Cr(-1, q), c2q * terms.s(t2q - w[m - 1], lam2 + lam1, f"s(t2{q} - w{m}; lambda2 + lambda1)"))
        rows.add(corner, corner, c2q * terms.rho(t2q - w[m - 1], f"rho(t2{q} - w{m})"))

    for i in range(1, n1 + 1):
        ti = t1[i - 1]
        row = P(i, q)
        diagonal = two_pi_i * c20
        diagonal += sum(c2[j - 1] * terms.rho(t2q - t2[j - 1], f"rho(t2{q} - t2{j})") for j in others)
        diagonal += c * (terms.rho(t2q - ti, f"rho(t2{q} - t1{i})") + terms.rho(t2q + ti, f"rho(t2{q} + t1{i})"))
        rows.add(row, row, diagonal)
        for j in others:
            rows.add(row, P(i, j), c2[j - 1] * terms.s(t2[j - 1] - t2q, lam2, f"s(t2{j} - t2{q}; lambda2)"))
        rows.add(row, Pt(i, 1), c * terms.s(-ti - t2q, lam2, f"s(-t1{i} - t2{q}; lambda2)"))
        rows.add(row, Pt(i, -1), c * terms.s(ti - t2q, lam2, f"s(t1{i} - t2{q}; lambda2)"))
        rows.add(row, Cr(1, q), c * terms.s(-t2q - ti, lam1, f"s(-t2{q} - t1{i}; lambda1)"))
        rows.add(row, Cr(-1, q), -c * terms.s(t2q - ti, lam1, f"s(t2{q} - t1{i}; lambda1)"))

    b = {1: np.exp(two_pi_i * lam1), -1: np.exp(two_pi_i * (lam1 + lam2))}
    for sign in (1, -1):
        sn = _sign_name(sign)
        row = Cr(sign, q)
        nu = lam2 - sign * lam1
        diagonal = two_pi_i * (-sign * c10 + c20)
        diagonal -= sum(c2[j - 1] * terms.rho(t2[j - 1] - t2q, f"rho(t2{j} - t2{q})") for j in others)
        diagonal += sum(c1[i - 1] * terms.rho(t2q + sign * t1[i - 1], f"rho(t2{q} {sn} t1{i})")
                        for i in range(1, n1 + 1))
        diagonal += 2 * c * terms.rho(2 * t2q, f"rho(2 t2{q}) at a half period")
        rows.add(row, row, diagonal)
        rows.add(row, Cr(-sign, q), -2 * c * terms.s(2 * t2q, sign * lam1, f"s(2 t2{q}; {sn}lambda1)"))
        for j in others:
            rows.add(row, Cr(sign, j), c2[j - 1] * terms.s(t2[j - 1] - t2q, nu, f"s(t2{j} - t2{q}; lambda2 -+ lambda1)"))
        for i in range(1, n1 + 1):
            ti, ci = t1[i - 1], c1[i - 1]
            rows.add(row, P(i, q), -ci * terms.s(t2q + sign * ti, sign * lam1, f"s(t2{q} {sn} t1{i}; {sn}lambda1)"))
            rows.add(row, Pt(i, sign), -ci * terms.s(-sign * ti - t2q, nu, f"s(-+t1{i} - t2{q}; lambda2 -+ lambda1)"))
        shifts = (0, sign * 0.5, sign * tau / 2, sign * (1 + tau) / 2)
        weights = (1, 1, b[sign], b[sign])
        for m, (shift, weight) in enumerate(zip(shifts, weights), start=1):
            rows.add(row, BasisIndex.corner(m), sign * weight * c * terms.s(
                shift - t2q, nu, f"s(w - t2{q}; lambda2 -+ lambda1) coupling to corner {m}"))

    logger.debug("Assembled connection matrix", k=2, p=q, size=len(legend))
    return ConnectionMatrix(deriv=(2, q), entries=rows.entries, legend=legend, at=_point_snapshot(cfg))


def assemble(k: int, p: int, cfg: ProblemConfig) -> ConnectionMatrix:
    """A_kp for either variable."""
    _check_derivative(k, p, cfg)
    return assemble_A1p(p, cfg) if k == 1 else assemble_A2q(p, cfg)


def all_derivatives(cfg: ProblemConfig) -> List[Derivative]:
    return [(1, p) for p in range(1, cfg.n1 + 1)] + [(2, q) for q in range(1, cfg.n2 + 1)]


def assemble_all(cfg: ProblemConfig) -> Dict[Derivative, ConnectionMatrix]:
    """Every A_kp of the configuration, keyed by (k, p)."""
    return {deriv: assemble(deriv[0], deriv[1], cfg) for deriv in all_derivatives(cfg)}


@dataclass
class StarMap:
    """Signed permutation P with F(swapped cfg) = P F(cfg).

    Rows follow the basis order of the swapped configuration, columns the basis
    order of the configuration itself.
    """

    source: List[BasisIndex]
    target: List[BasisIndex]
    matrix: np.ndarray

    def image(self, index: BasisIndex) -> Tuple[int, BasisIndex]:
        """(sign, target index) with psi_index^star = sign * psi_target."""
        column = self.source.index(index)
        row = int(np.flatnonzero(self.matrix[:, column])[0])
        return int(np.real(self.matrix[row, column])), self.target[row]


def star_map(cfg: ProblemConfig) -> StarMap:
    """psi_ij -> -psi_ji, psi_i+- -> -psi_+-i, psi_+-j -> -psi_j+-, corners fixed."""
    source = psi_index_set(cfg)
    target = psi_index_set(swapped(cfg))
    column_of = {index: n for n, index in enumerate(source)}
    matrix = np.zeros((len(target), len(source)), dtype=complex)
    for row, index in enumerate(target):
        if index.kind is IndexKind.POINT:
            sign, image = -1, BasisIndex.point(index.j, index.i)
        elif index.kind is IndexKind.ROW_PM:
            sign, image = -1, BasisIndex.col_pm(index.sign, index.i)
        elif index.kind is IndexKind.COL_PM:
            sign, image = -1, BasisIndex.row_pm(index.j, index.sign)
        else:
            sign, image = 1, index
        matrix[row, column_of[image]] = sign
    return StarMap(source=source, target=target, matrix=matrix)


def star_conjugate(matrix: np.ndarray, star: StarMap) -> np.ndarray:
    """Pull a matrix written in the swapped basis back to the configuration's basis: P^T A P."""
    P = star.matrix
    return P.T @ np.asarray(matrix, dtype=complex) @ P


def mirror_A2q(q: int, cfg: ProblemConfig) -> np.ndarray:
    """A_2q obtained from the d/dt_1q block of the swapped configuration."""
    mirrored = assemble_A1p(q, swapped(cfg))
    return star_conjugate(mirrored.entries, star_map(cfg))


def _central_difference(func: Callable[[float], np.ndarray], h: float, richardson: bool):
    def difference(step: float):
        return (func(step) - func(-step)) / (2 * step)

    coarse = difference(h)
    if not richardson:
        return coarse
    fine = difference(h / 2)
    return (4 * fine - coarse) / 3


def total_t_derivative(func: Callable[[ProblemConfig], np.ndarray], k: int, p: int,
                       cfg: ProblemConfig, h: float, richardson: bool = True):
    """d/dt_kp of func(cfg) with c_{k,inf} fixed, so lambda_k moves with t_kp."""
    if h <= 0:
        raise ValidationError(f"Step h must be positive, got {h}", field="h")
    base = cfg.points(k)[p - 1]
    return _central_difference(
        lambda step: np.asarray(func(with_point(cfg, k, p, base + step)), dtype=complex),
        h, richardson,
    )


def nabla_kp_numeric(k: int, p: int, evaluator: Callable, u1, u2, cfg: ProblemConfig,
                     h: float = NABLA_H):
    """nabla_kp phi = d/dt_kp phi - c_kp d/dlambda_k phi - c_kp rho(u_k - t_kp) phi.

    evaluator(u1, u2, cfg) gives the coefficient of du1 ^ du2. The first two terms
    are one total derivative along t_kp with c_{k,inf} held fixed.
    """
    _check_derivative(k, p, cfg)
    derivative = total_t_derivative(lambda moved: evaluator(u1, u2, moved), k, p, cfg, h)
    u_k = u1 if k == 1 else u2
    c_kp = cfg.exponents(k)[p - 1]
    t_kp = cfg.points(k)[p - 1]
    value = derivative - c_kp * rho(np.subtract(u_k, t_kp), cfg.tau_value) * np.asarray(evaluator(u1, u2, cfg))
    return complex(value) if np.ndim(value) == 0 else value


def pointwise_rows(k: int, p: int, cfg: ProblemConfig) -> List[BasisIndex]:
    """Rows of A_kp that hold for the forms themselves, not only up to exact forms."""
    _check_derivative(k, p, cfg)
    legend = psi_index_set(cfg)
    if k == 1:
        return [index for index in legend
                if index.kind is IndexKind.CORNER
                or index.kind is IndexKind.COL_PM
                or (index.kind in (IndexKind.POINT, IndexKind.ROW_PM) and index.i != p)]
    return [index for index in legend
            if index.kind is IndexKind.CORNER
            or index.kind is IndexKind.ROW_PM
            or (index.kind in (IndexKind.POINT, IndexKind.COL_PM) and index.j != p)]


def flatness_residual(cfg: ProblemConfig, deriv_a: Derivative, deriv_b: Derivative,
                      h: float = FLATNESS_H, richardson: bool = True) -> float:
    """Relative max |d_b A_a + A_a A_b - d_a A_b - A_b A_a| with lambda co-varying.

    The residual is divided by the largest entry of A_a A_b and A_b A_a, floored at 1,
    so it stays comparable to a fixed tolerance when marked points nearly collide.
    """
    if tuple(deriv_a) == tuple(deriv_b):
        raise ValidationError("Flatness needs two different derivatives", field="deriv")
    for k, p in (deriv_a, deriv_b):
        _check_derivative(k, p, cfg)

    A_a = assemble(*deriv_a, cfg).entries
    A_b = assemble(*deriv_b, cfg).entries
    d_b_A_a = total_t_derivative(lambda moved: assemble(*deriv_a, moved).entries, *deriv_b, cfg, h, richardson)
    d_a_A_b = total_t_derivative(lambda moved: assemble(*deriv_b, moved).entries, *deriv_a, cfg, h, richardson)
    product_ab, product_ba = A_a @ A_b, A_b @ A_a
    scale = max(1.0, float(np.max(np.abs(product_ab))), float(np.max(np.abs(product_ba))))
    residual = float(np.max(np.abs(d_b_A_a + product_ab - d_a_A_b - product_ba))) / scale
    logger.debug("Flatness residual", deriv_a=list(deriv_a), deriv_b=list(deriv_b), h=h,
                 scale=scale, residual=residual)
    return residual


def derivative_pairs(cfg: ProblemConfig) -> List[Tuple[Derivative, Derivative]]:
    derivs = all_derivatives(cfg)
    return [(derivs[a], derivs[b]) for a in range(len(derivs)) for b in range(a + 1, len(derivs))]


def duality_residual(k: int, p: int, cfg: ProblemConfig) -> float:
    """Relative max |A I + I A_dual^T| with I the intersection matrix.

    A_dual is A_kp of the reciprocal configuration (the system of 1/T). The
    intersection numbers do not depend on t, so the two systems are adjoint.
    """
    A = assemble(k, p, cfg).entries
    A_dual = assemble(k, p, reciprocal(cfg)).entries
    pairing = intersection_matrix(cfg)
    lhs = A @ pairing
    residual = np.max(np.abs(lhs + pairing @ A_dual.T))
    return float(residual / max(1.0, np.max(np.abs(lhs))))
