"""
Elliptic kernel functions: theta_1, theta_1', rho = theta_1'/theta_1 and
s(u; lambda) = theta_1(u - lambda) theta_1'(0) / (theta_1(u) theta_1(-lambda)).

theta_1(u) = 2 sum_k (-1)^k q^{(k+1/2)^2} sin((2k+1) pi u), q = exp(pi i tau).
The series is only ever summed at a lattice-reduced argument; the exact
quasi-periodicity factors carry the value back to the input point.

Every function accepts numpy arrays elementwise and returns a Python complex for
scalar input.
"""

from functools import lru_cache
from typing import Tuple, Union

import numpy as np

from .logging.logger import get_logger
from .models.exceptions import NearSingular, NonConvergence
from .models.problem import LatticeReduction, ModularParam

logger = get_logger(__name__)

DEFAULT_TOL = 1e-14
MAX_TERMS = 200
SINGULAR_THRESHOLD = 1e-8

TauLike = Union[ModularParam, complex]
ArrayLike = Union[complex, np.ndarray]

_TWO_PI_I = 2j * np.pi


def _tau(tau: TauLike) -> complex:
    return ModularParam.coerce(tau).tau


def _coefficients(u: np.ndarray, tau: complex) -> Tuple[np.ndarray, np.ndarray]:
    """Real coordinates (x, y) with u = x + y*tau."""
    y = u.imag / tau.imag
    x = u.real - y * tau.real
    return x, y


def _finish(value: np.ndarray, scalar: bool):
    if scalar:
        return complex(value)
    return value


def lattice_reduce(u: complex, tau: TauLike) -> LatticeReduction:
    """Write u = u0 + l + m*tau with the coordinates of u0 in [0, 1)^2."""
    t = _tau(tau)
    u = complex(u)
    x, y = _coefficients(np.asarray(u), t)
    m = int(np.floor(y))
    l = int(np.floor(x))
    u0 = u - l - m * t
    # rounding can leave a coordinate a hair outside [0, 1)
    x0, y0 = _coefficients(np.asarray(u0), t)
    if y0 < 0:
        m -= 1
    elif y0 >= 1:
        m += 1
    if x0 < 0:
        l -= 1
    elif x0 >= 1:
        l += 1
    return LatticeReduction(u0=u - l - m * t, l=l, m=m)


def _reduce_centered(u: np.ndarray, tau: complex) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized reduction to the centered cell |x|, |y| <= 1/2."""
    x, y = _coefficients(u, tau)
    m = np.floor(y + 0.5)
    l = np.floor(x + 0.5)
    return u - l - m * tau, l, m


def distance_to_lattice(u: ArrayLike, tau: TauLike):
    """Distance from u to the nearest point of Z + Z tau."""
    t = _tau(tau)
    scalar = np.isscalar(u)
    u0, _, _ = _reduce_centered(np.asarray(u, dtype=complex), t)
    best = np.full(u0.shape, np.inf)
    for a in (-1, 0, 1):
        for b in (-1, 0, 1):
            best = np.minimum(best, np.abs(u0 - a - b * t))
    return float(best) if scalar else best


def _guard(u: np.ndarray, tau: complex, term: str) -> None:
    distance = distance_to_lattice(u, tau)
    distance = np.atleast_1d(distance)
    if np.any(distance < SINGULAR_THRESHOLD):
        flat_u = np.atleast_1d(u).ravel()
        worst = int(np.argmin(distance.ravel()))
        raise NearSingular(term, argument=complex(flat_u[worst]), distance=float(distance.ravel()[worst]))


def _series(u0: np.ndarray, tau: complex, tol: float, derivative: bool) -> np.ndarray:
    """Sum the sine series (or its term-wise derivative) at a reduced argument."""
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")

    def term(k: int) -> np.ndarray:
        nu = 2 * k + 1
        weight = 2.0 * (-1) ** k * np.exp(1j * np.pi * tau * (k + 0.5) ** 2)
        if derivative:
            return weight * nu * np.pi * np.cos(nu * np.pi * u0)
        return weight * np.sin(nu * np.pi * u0)

    partial = np.zeros(u0.shape, dtype=complex)
    current = term(0)
    for k in range(MAX_TERMS):
        partial = partial + current
        current = term(k + 1)
        if np.all(np.abs(current) < tol * np.maximum(1.0, np.abs(partial))):
            if logger.is_debug():
                logger.debug("theta series converged", terms=k + 1, derivative=derivative)
            return partial
    flat = np.atleast_1d(u0).ravel()
    raise NonConvergence(
        "theta1_d1" if derivative else "theta1", MAX_TERMS, complex(flat[0]) if flat.size else None
    )


def _theta_pair(u: np.ndarray, tau: complex, tol: float, need_derivative: bool):
    """theta_1 and (optionally) theta_1' at full argument via centered reduction."""
    u0, l, m = _reduce_centered(u, tau)
    sign = np.where(np.mod(l + m, 2.0) == 0.0, 1.0, -1.0)
    factor = sign * np.exp(-1j * np.pi * (m * m * tau + 2.0 * m * u0))
    theta0 = _series(u0, tau, tol, derivative=False)
    if not need_derivative:
        return factor * theta0, None
    dtheta0 = _series(u0, tau, tol, derivative=True)
    return factor * theta0, factor * (dtheta0 - _TWO_PI_I * m * theta0)


def theta1(u: ArrayLike, tau: TauLike, tol: float = DEFAULT_TOL):
    """Odd Jacobi theta function with simple zeros on the lattice."""
    t = _tau(tau)
    scalar = np.isscalar(u)
    value, _ = _theta_pair(np.asarray(u, dtype=complex), t, tol, need_derivative=False)
    return _finish(value, scalar)


def theta1_d1(u: ArrayLike, tau: TauLike, tol: float = DEFAULT_TOL):
    """Derivative of theta_1, summed term by term (no finite differences)."""
    t = _tau(tau)
    scalar = np.isscalar(u)
    _, value = _theta_pair(np.asarray(u, dtype=complex), t, tol, need_derivative=True)
    return _finish(value, scalar)


@lru_cache(maxsize=64)
def _theta1_prime_zero(tau: complex, tol: float) -> complex:
    return theta1_d1(0j, tau, tol)


def rho(u: ArrayLike, tau: TauLike, tol: float = DEFAULT_TOL):
    """Logarithmic derivative theta_1'(u) / theta_1(u)."""
    t = _tau(tau)
    scalar = np.isscalar(u)
    arr = np.asarray(u, dtype=complex)
    _guard(arr, t, "rho(u)")
    u0, _, m = _reduce_centered(arr, t)
    theta0 = _series(u0, t, tol, derivative=False)
    dtheta0 = _series(u0, t, tol, derivative=True)
    return _finish(dtheta0 / theta0 - _TWO_PI_I * m, scalar)


def s_func(u: ArrayLike, lam: ArrayLike, tau: TauLike, tol: float = DEFAULT_TOL):
    """Kernel s(u; lambda): simple pole of residue 1 at u = 0, multiplier e^{2 pi i lambda} under u -> u + tau."""
    t = _tau(tau)
    scalar = np.isscalar(u) and np.isscalar(lam)
    u_arr = np.asarray(u, dtype=complex)
    lam_arr = np.asarray(lam, dtype=complex)
    _guard(u_arr, t, "s(u; lambda) argument u")
    _guard(lam_arr, t, "s(u; lambda) argument lambda")
    numerator, _ = _theta_pair(u_arr - lam_arr, t, tol, need_derivative=False)
    denominator_u, _ = _theta_pair(u_arr, t, tol, need_derivative=False)
    denominator_lam, _ = _theta_pair(-lam_arr, t, tol, need_derivative=False)
    value = numerator * _theta1_prime_zero(t, tol) / (denominator_u * denominator_lam)
    return _finish(value, scalar)


def theta1_log_multiplier(v: ArrayLike, tau: TauLike, a: int, b: int):
    """Logarithm of theta_1(v + a + b*tau) / theta_1(v) for a single unit shift.

    Forward shifts use pi*i for +1 and -pi*i*(tau + 2v + 1) for +tau; a backward
    shift is the negated forward factor taken at the shifted point.
    """
    t = _tau(tau)
    v = np.asarray(v, dtype=complex) if not np.isscalar(v) else complex(v)
    if (a, b) == (1, 0):
        value = 1j * np.pi + 0 * v
    elif (a, b) == (-1, 0):
        value = -1j * np.pi + 0 * v
    elif (a, b) == (0, 1):
        value = -1j * np.pi * (t + 2 * v + 1)
    elif (a, b) == (0, -1):
        value = 1j * np.pi * (2 * v - t + 1)
    elif (a, b) == (0, 0):
        value = 0j + 0 * v
    else:
        raise ValueError(f"Only single unit shifts are supported, got ({a}, {b})")
    return value
